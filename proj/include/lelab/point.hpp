#pragma once

#include <array>
#include <cmath>

namespace lelab {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Point2 operator+(Point2 o) const { return {x + o.x, y + o.y}; }
  constexpr Point2 operator-(Point2 o) const { return {x - o.x, y - o.y}; }
  constexpr Point2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Point2 operator/(double s) const { return {x / s, y / s}; }
  constexpr bool operator==(const Point2&) const = default;
};

constexpr Point2 operator*(double s, Point2 p) { return p * s; }
constexpr double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Sym2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  double trace() const { return xx + yy; }

  /// Eigenvalues in ascending order.
  std::array<double, 2> eigenvalues() const {
    const double m = 0.5 * (xx + yy);
    const double r = std::hypot(0.5 * (xx - yy), xy);
    return {m - r, m + r};
  }

  /// Unit eigenvector for the smaller eigenvalue.
  Point2 lower_eigenvector() const {
    const double lo = eigenvalues()[0];
    Point2 v = std::abs(xy) > 1e-300 ? Point2{xy, lo - xx}
               : (xx <= yy ? Point2{1.0, 0.0} : Point2{0.0, 1.0});
    if (std::abs(xy) > 1e-300) {
      const Point2 w{lo - yy, xy};
      if (norm(w) > norm(v)) v = w;
    }
    return v / norm(v);
  }
};

}  // namespace lelab
