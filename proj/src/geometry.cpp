#include "lelab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "lelab/errors.hpp"

namespace lelab {

namespace {

constexpr double kPi = std::numbers::pi;

double segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  double s = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return distance(p, a + ab * s);
}

bool segments_cross(Point2 a, Point2 b, Point2 c, Point2 d) {
  auto orient = [](Point2 p, Point2 q, Point2 r) { return cross(q - p, r - p); };
  const double d1 = orient(c, d, a), d2 = orient(c, d, b);
  const double d3 = orient(a, b, c), d4 = orient(a, b, d);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
         d4 != 0;
}

double polygon_signed_area(const std::vector<Point2>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += cross(v[i], v[(i + 1) % v.size()]);
  return 0.5 * s;
}

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

double point_triangle_distance(Point2 x, Point2 a, Point2 b, Point2 c) {
  const auto bc = barycentric(a, b, c, x);
  if (bc[0] >= 0 && bc[1] >= 0 && bc[2] >= 0) return 0.0;
  return std::min({segment_distance(x, a, b), segment_distance(x, b, c), segment_distance(x, c, a)});
}

// Longest-edge bisection with conformity closure on a mutable triangulation.
class Refiner {
public:
  Refiner(const TriMesh& mesh, std::size_t cap)
      : domain_(mesh.domain), verts_(mesh.vertices), tris_(mesh.triangles),
        alive_(mesh.triangles.size(), 1), cap_(cap) {
    for (std::size_t t = 0; t < tris_.size(); ++t) attach(int(t));
    for (const auto& e : mesh.boundary_edges) boundary_.insert(edge_key(e.v[0], e.v[1]));
  }

  std::size_t triangle_slots() const { return tris_.size(); }
  bool alive(std::size_t t) const { return alive_[t] != 0; }
  const std::array<int, 3>& tri(std::size_t t) const { return tris_[t]; }
  const std::vector<Point2>& vertices() const { return verts_; }

  double longest(std::size_t t) const {
    const auto& v = tris_[t];
    return std::sqrt(std::max({len2(v[0], v[1]), len2(v[1], v[2]), len2(v[2], v[0])}));
  }

  void bisect(int t) {
    while (true) {
      const int k = longest_local(t);
      const int a = tris_[t][k], b = tris_[t][(k + 1) % 3];
      const int nb = across(t, a, b);
      if (nb < 0) {
        split_edge(a, b, t, -1);
        return;
      }
      const int kn = longest_local(nb);
      if (edge_key(tris_[nb][kn], tris_[nb][(kn + 1) % 3]) == edge_key(a, b)) {
        split_edge(a, b, t, nb);
        return;
      }
      bisect(nb);
    }
  }

  TriMesh finish() const {
    TriMesh out;
    out.domain = domain_;
    out.vertices = verts_;
    for (std::size_t t = 0; t < tris_.size(); ++t)
      if (alive_[t]) out.triangles.push_back(tris_[t]);
    out.rebuild_boundary();
    return out;
  }

private:
  double len2(int a, int b) const {
    const Point2 d = verts_[std::size_t(b)] - verts_[std::size_t(a)];
    return dot(d, d);
  }

  // Strict total order on edges: length, then vertex ids.
  int longest_local(int t) const {
    const auto& v = tris_[std::size_t(t)];
    int best = 0;
    auto key = [&](int k) {
      const int a = v[k], b = v[(k + 1) % 3];
      return std::tuple(len2(a, b), std::min(a, b), std::max(a, b));
    };
    for (int k = 1; k < 3; ++k)
      if (key(k) > key(best)) best = k;
    return best;
  }

  int across(int t, int a, int b) const {
    auto it = edges_.find(edge_key(a, b));
    if (it == edges_.end()) return -1;
    return it->second[0] == t ? it->second[1] : it->second[0];
  }

  void attach(int t) {
    const auto& v = tris_[std::size_t(t)];
    for (int k = 0; k < 3; ++k) {
      auto& slot = edges_.try_emplace(edge_key(v[k], v[(k + 1) % 3]), std::array<int, 2>{-1, -1})
                       .first->second;
      (slot[0] < 0 ? slot[0] : slot[1]) = t;
    }
  }

  void detach(int t) {
    const auto& v = tris_[std::size_t(t)];
    for (int k = 0; k < 3; ++k) {
      auto it = edges_.find(edge_key(v[k], v[(k + 1) % 3]));
      if (it == edges_.end()) continue;
      if (it->second[0] == t) it->second[0] = -1;
      if (it->second[1] == t) it->second[1] = -1;
      if (it->second[0] < 0 && it->second[1] < 0) edges_.erase(it);
      else if (it->second[0] < 0) std::swap(it->second[0], it->second[1]);
    }
  }

  void split_edge(int a, int b, int t, int nb) {
    if (verts_.size() + 1 > cap_)
      fail(ErrorKind::MeshTooFine, "refinement exceeds the vertex cap of " + std::to_string(cap_));
    const bool on_boundary = boundary_.count(edge_key(a, b)) != 0;
    Point2 mid = (verts_[std::size_t(a)] + verts_[std::size_t(b)]) * 0.5;
    if (on_boundary && domain_.curved()) mid = domain_.project_to_boundary(mid);
    const int m = int(verts_.size());
    verts_.push_back(mid);
    if (on_boundary) {
      boundary_.erase(edge_key(a, b));
      boundary_.insert(edge_key(a, m));
      boundary_.insert(edge_key(m, b));
    }
    for (int x : {t, nb}) {
      if (x < 0) continue;
      auto v = tris_[std::size_t(x)];
      // Rotate so the split edge is (v0, v1).
      while (edge_key(v[0], v[1]) != edge_key(a, b)) std::rotate(v.begin(), v.begin() + 1, v.end());
      detach(x);
      alive_[std::size_t(x)] = 0;
      push({v[0], m, v[2]});
      push({m, v[1], v[2]});
    }
  }

  void push(std::array<int, 3> v) {
    tris_.push_back(v);
    alive_.push_back(1);
    attach(int(tris_.size() - 1));
  }

  DomainSpec domain_;
  std::vector<Point2> verts_;
  std::vector<std::array<int, 3>> tris_;
  std::vector<std::uint8_t> alive_;
  std::unordered_map<std::uint64_t, std::array<int, 2>> edges_;
  std::unordered_set<std::uint64_t> boundary_;
  std::size_t cap_;
};

// Points at equal arc-length fractions j / count on the ellipse (sx cos, sy sin).
std::vector<Point2> ellipse_ring(double sx, double sy, int count) {
  constexpr int kTable = 4096;
  std::vector<double> arc(kTable + 1, 0.0);
  auto speed = [&](double th) { return std::hypot(sx * std::sin(th), sy * std::cos(th)); };
  const double dth = 2.0 * kPi / kTable;
  for (int i = 0; i < kTable; ++i) {
    const double th = i * dth;
    arc[std::size_t(i + 1)] =
        arc[std::size_t(i)] + dth / 6.0 * (speed(th) + 4.0 * speed(th + 0.5 * dth) + speed(th + dth));
  }
  std::vector<Point2> out;
  std::size_t seg = 0;
  for (int j = 0; j < count; ++j) {
    const double target = arc.back() * double(j) / double(count);
    while (seg + 1 < std::size_t(kTable) && arc[seg + 1] < target) ++seg;
    double th = (double(seg) + (target - arc[seg]) / (arc[seg + 1] - arc[seg])) * dth;
    for (int it = 0; it < 3; ++it) {
      // Newton on the arc length using Simpson from the table node.
      const double t0 = double(seg) * dth;
      const double s = arc[seg] + (th - t0) / 6.0 * (speed(t0) + 4.0 * speed(0.5 * (t0 + th)) + speed(th));
      th -= (s - target) / speed(th);
    }
    out.push_back({sx * std::cos(th), sy * std::sin(th)});
  }
  return out;
}

// Concentric rings joined by merging equal-fraction sequences.
TriMesh ring_mesh(const DomainSpec& domain, double target_h, const MeshOptions& opts) {
  const bool disk = domain.kind() == DomainKind::UnitDisk;
  const double sx = disk ? 1.0 : domain.semi_axis_a();
  const double sy = disk ? 1.0 : domain.semi_axis_b();
  const double smax = std::max(sx, sy);
  // At least four rings so that boundary chords subtend at most 15 degrees.
  const int n = std::max(4, int(std::ceil(1.1 * smax / target_h - 1e-9)));
  const double delta = smax / n;
  std::vector<int> count{1};
  std::size_t predicted = 1;
  for (int k = 1; k <= n; ++k) {
    int c = 6 * k;
    if (!disk) {
      const double h_ = std::pow((sx - sy) / (sx + sy), 2.0);
      const double per = kPi * (sx + sy) * (1.0 + 3.0 * h_ / (10.0 + std::sqrt(4.0 - 3.0 * h_))) * k / n;
      c = std::max(8, 4 * int(std::ceil(per / delta / 4.0 - 1e-9)));
    }
    count.push_back(c);
    predicted += std::size_t(c);
  }
  if (predicted > opts.max_vertices)
    fail(ErrorKind::MeshTooFine, std::to_string(predicted) + " vertices exceed the cap of " +
                                     std::to_string(opts.max_vertices));
  TriMesh mesh;
  mesh.domain = domain;
  mesh.vertices.push_back({0.0, 0.0});
  std::vector<int> ring_start{0};
  for (int k = 1; k <= n; ++k) {
    ring_start.push_back(int(mesh.vertices.size()));
    const double r = double(k) / double(n);
    const int c = count[std::size_t(k)];
    if (disk) {
      for (int j = 0; j < c; ++j) {
        const double th = 2.0 * kPi * double(j) / double(c);
        Point2 p{r * std::cos(th), r * std::sin(th)};
        if (k == n) p = domain.project_to_boundary(p);
        mesh.vertices.push_back(p);
      }
    } else {
      for (Point2 p : ellipse_ring(r * sx, r * sy, c)) {
        if (k == n) p = domain.project_to_boundary(p);
        mesh.vertices.push_back(p);
      }
    }
  }
  const int c1 = count[1];
  for (int j = 0; j < c1; ++j) mesh.triangles.push_back({0, 1 + j, 1 + (j + 1) % c1});
  for (int k = 2; k <= n; ++k) {
    const int na = count[std::size_t(k - 1)], nb = count[std::size_t(k)];
    const int a0 = ring_start[std::size_t(k - 1)], b0 = ring_start[std::size_t(k)];
    int i = 0, j = 0;
    while (i < na || j < nb) {
      const int vi = a0 + i % na, vj = b0 + j % nb;
      const int vi1 = a0 + (i + 1) % na, vj1 = b0 + (j + 1) % nb;
      // Take the shorter of the two candidate diagonals.
      const auto& P = mesh.vertices;
      const double d_out = distance(P[std::size_t(vi)], P[std::size_t(vj1)]);
      const double d_in = distance(P[std::size_t(vi1)], P[std::size_t(vj)]);
      if (j < nb && (i >= na || d_out <= d_in * (1.0 + 1e-12))) {
        mesh.triangles.push_back({vi, vj, b0 + (j + 1) % nb});
        ++j;
      } else {
        mesh.triangles.push_back({vi, vj, a0 + (i + 1) % na});
        ++i;
      }
    }
  }
  mesh.rebuild_boundary();
  return mesh;
}

TriMesh grid_mesh(const DomainSpec& domain, double target_h, const MeshOptions& opts) {
  auto even_count = [&](double len) {
    int c = std::max(2, int(std::ceil(len / target_h - 1e-9)));
    return c % 2 ? c + 1 : c;
  };
  const int nx = even_count(domain.width()), ny = even_count(domain.height());
  const std::size_t predicted = std::size_t(nx + 1) * std::size_t(ny + 1);
  if (predicted > opts.max_vertices)
    fail(ErrorKind::MeshTooFine, std::to_string(predicted) + " vertices exceed the cap of " +
                                     std::to_string(opts.max_vertices));
  TriMesh mesh;
  mesh.domain = domain;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      mesh.vertices.push_back({domain.width() * i / nx, domain.height() * j / ny});
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  mesh.rebuild_boundary();
  return mesh;
}

// Ear clipping of a simple CCW polygon.
std::vector<std::array<int, 3>> ear_clip(const std::vector<Point2>& pts) {
  std::vector<int> idx(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) idx[i] = int(i);
  std::vector<std::array<int, 3>> out;
  std::size_t guard = 0;
  while (idx.size() > 3 && guard++ < 10 * pts.size() * pts.size()) {
    bool clipped = false;
    // Prefer the ear with the best minimum angle.
    int best = -1;
    double best_q = -1.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const int a = idx[(i + idx.size() - 1) % idx.size()], b = idx[i], c = idx[(i + 1) % idx.size()];
      if (cross(pts[b] - pts[a], pts[c] - pts[a]) <= 0.0) continue;
      bool inside = false;
      for (int q : idx) {
        if (q == a || q == b || q == c) continue;
        const auto bc = barycentric(pts[a], pts[b], pts[c], pts[q]);
        if (bc[0] >= -1e-14 && bc[1] >= -1e-14 && bc[2] >= -1e-14) {
          inside = true;
          break;
        }
      }
      if (inside) continue;
      auto angle = [&](Point2 p, Point2 q, Point2 r) {
        return std::atan2(std::abs(cross(q - p, r - p)), dot(q - p, r - p));
      };
      const double qmin = std::min({angle(pts[a], pts[b], pts[c]), angle(pts[b], pts[c], pts[a]),
                                    angle(pts[c], pts[a], pts[b])});
      if (qmin > best_q) {
        best_q = qmin;
        best = int(i);
      }
    }
    if (best >= 0) {
      const std::size_t i = std::size_t(best);
      out.push_back({idx[(i + idx.size() - 1) % idx.size()], idx[i], idx[(i + 1) % idx.size()]});
      idx.erase(idx.begin() + best);
      clipped = true;
    }
    if (!clipped) fail(ErrorKind::InvalidDomain, "ear clipping failed; polygon is not simple");
  }
  out.push_back({idx[0], idx[1], idx[2]});
  return out;
}

// Edge flips toward the constrained Delaunay triangulation of the boundary points.
void lawson_flips(TriMesh& mesh) {
  auto& tris = mesh.triangles;
  const auto& P = mesh.vertices;
  for (int sweep = 0; sweep < 100; ++sweep) {
    std::unordered_map<std::uint64_t, std::vector<std::pair<int, int>>> owner;
    for (std::size_t t = 0; t < tris.size(); ++t)
      for (int k = 0; k < 3; ++k)
        owner[edge_key(tris[t][k], tris[t][(k + 1) % 3])].push_back({int(t), k});
    bool flipped = false;
    std::vector<std::uint8_t> touched(tris.size(), 0);
    for (auto& [key, own] : owner) {
      if (own.size() != 2) continue;
      const auto [t0, k0] = own[0];
      const auto [t1, k1] = own[1];
      if (touched[std::size_t(t0)] || touched[std::size_t(t1)]) continue;
      const int a = tris[std::size_t(t0)][k0], b = tris[std::size_t(t0)][(k0 + 1) % 3];
      const int c = tris[std::size_t(t0)][(k0 + 2) % 3];
      const int d = tris[std::size_t(t1)][(k1 + 2) % 3];
      // In-circle test of d against (a, b, c).
      auto row = [&](int i) {
        const Point2 q = P[std::size_t(i)] - P[std::size_t(d)];
        return std::array<double, 3>{q.x, q.y, dot(q, q)};
      };
      const auto ra = row(a), rb = row(b), rc = row(c);
      const double det = ra[0] * (rb[1] * rc[2] - rb[2] * rc[1]) -
                         ra[1] * (rb[0] * rc[2] - rb[2] * rc[0]) +
                         ra[2] * (rb[0] * rc[1] - rb[1] * rc[0]);
      const double scale = std::max({ra[2], rb[2], rc[2]});
      if (det <= 1e-12 * scale * scale) continue;
      if (cross(P[std::size_t(a)] - P[std::size_t(c)], P[std::size_t(d)] - P[std::size_t(c)]) <= 0.0 ||
          cross(P[std::size_t(d)] - P[std::size_t(c)], P[std::size_t(b)] - P[std::size_t(c)]) <= 0.0)
        continue;
      tris[std::size_t(t0)] = {c, a, d};
      tris[std::size_t(t1)] = {c, d, b};
      touched[std::size_t(t0)] = touched[std::size_t(t1)] = 1;
      flipped = true;
    }
    if (!flipped) break;
  }
}

// Regular 1-to-4 subdivision; every child is similar to its parent.
TriMesh red_refine(const TriMesh& mesh) {
  TriMesh out;
  out.domain = mesh.domain;
  out.vertices = mesh.vertices;
  std::unordered_map<std::uint64_t, int> mid;
  auto midpoint = [&](int a, int b) {
    auto [it, fresh] = mid.try_emplace(edge_key(a, b), int(out.vertices.size()));
    if (fresh) out.vertices.push_back((mesh.vertices[std::size_t(a)] + mesh.vertices[std::size_t(b)]) * 0.5);
    return it->second;
  };
  for (const auto& t : mesh.triangles) {
    const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
    out.triangles.push_back({t[0], ab, ca});
    out.triangles.push_back({ab, t[1], bc});
    out.triangles.push_back({ca, bc, t[2]});
    out.triangles.push_back({ab, bc, ca});
  }
  out.rebuild_boundary();
  return out;
}

TriMesh polygon_mesh(const DomainSpec& domain, double target_h, const MeshOptions& opts) {
  TriMesh mesh;
  mesh.domain = domain;
  mesh.vertices = domain.vertices();
  mesh.triangles = ear_clip(mesh.vertices);
  lawson_flips(mesh);
  mesh.rebuild_boundary();
  while (mesh.max_h() > target_h * (1.0 + 1e-9)) {
    const std::size_t edges = (3 * mesh.triangles.size() + mesh.boundary_edges.size()) / 2;
    if (mesh.vertices.size() + edges > opts.max_vertices)
      fail(ErrorKind::MeshTooFine, "uniform refinement exceeds the vertex cap of " +
                                       std::to_string(opts.max_vertices));
    mesh = red_refine(mesh);
  }
  return mesh;
}

}  // namespace

// ---------------------------------------------------------------- DomainSpec

DomainSpec DomainSpec::unit_disk() { return DomainSpec{}; }

DomainSpec DomainSpec::rectangle(double width, double height) {
  require(width > 0.0 && height > 0.0, ErrorKind::InvalidDomain, "rectangle sides must be positive");
  DomainSpec d;
  d.kind_ = DomainKind::Rectangle;
  d.a_ = width;
  d.b_ = height;
  return d;
}

DomainSpec DomainSpec::ellipse(double semi_axis_a, double semi_axis_b) {
  require(semi_axis_a > 0.0 && semi_axis_b > 0.0, ErrorKind::InvalidDomain,
          "ellipse semi-axes must be positive");
  DomainSpec d;
  d.kind_ = DomainKind::Ellipse;
  d.a_ = semi_axis_a;
  d.b_ = semi_axis_b;
  return d;
}

DomainSpec DomainSpec::polygon(std::vector<Point2> vertices, std::optional<bool> declared_convex) {
  require(vertices.size() >= 3, ErrorKind::InvalidDomain, "polygon needs at least 3 vertices");
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    require(distance(vertices[i], vertices[(i + 1) % n]) > 0.0, ErrorKind::InvalidDomain,
            "repeated polygon vertex");
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_cross(vertices[i], vertices[(i + 1) % n], vertices[j], vertices[(j + 1) % n]))
        fail(ErrorKind::InvalidDomain, "polygon edges " + std::to_string(i) + " and " +
                                           std::to_string(j) + " intersect");
    }
  }
  require(polygon_signed_area(vertices) > 0.0, ErrorKind::InvalidDomain,
          "polygon vertices must be counter-clockwise");
  bool convex = true;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 e0 = vertices[(i + 1) % n] - vertices[i];
    const Point2 e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
    if (cross(e0, e1) < 0.0) convex = false;
  }
  if (declared_convex && *declared_convex != convex)
    fail(ErrorKind::InvalidDomain, "declared convexity does not match the polygon turning angles");
  DomainSpec d;
  d.kind_ = DomainKind::Polygon;
  d.vertices_ = std::move(vertices);
  d.convex_ = convex;
  return d;
}

double DomainSpec::diameter() const {
  switch (kind_) {
    case DomainKind::UnitDisk: return 2.0;
    case DomainKind::Rectangle: return std::hypot(a_, b_);
    case DomainKind::Ellipse: return 2.0 * std::max(a_, b_);
    case DomainKind::Polygon: {
      double d = 0.0;
      for (auto& p : vertices_)
        for (auto& q : vertices_) d = std::max(d, distance(p, q));
      return d;
    }
  }
  return 0.0;
}

double DomainSpec::area() const {
  switch (kind_) {
    case DomainKind::UnitDisk: return kPi;
    case DomainKind::Rectangle: return a_ * b_;
    case DomainKind::Ellipse: return kPi * a_ * b_;
    case DomainKind::Polygon: return polygon_signed_area(vertices_);
  }
  return 0.0;
}

Point2 DomainSpec::centroid() const {
  switch (kind_) {
    case DomainKind::UnitDisk:
    case DomainKind::Ellipse: return {0.0, 0.0};
    case DomainKind::Rectangle: return {0.5 * a_, 0.5 * b_};
    case DomainKind::Polygon: {
      Point2 c;
      const double area6 = 6.0 * polygon_signed_area(vertices_);
      for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const Point2 p = vertices_[i], q = vertices_[(i + 1) % vertices_.size()];
        c = c + (p + q) * cross(p, q);
      }
      return c / area6;
    }
  }
  return {};
}

bool DomainSpec::contains(Point2 x) const {
  switch (kind_) {
    case DomainKind::UnitDisk: return dot(x, x) < 1.0;
    case DomainKind::Rectangle: return x.x > 0.0 && x.x < a_ && x.y > 0.0 && x.y < b_;
    case DomainKind::Ellipse: return (x.x / a_) * (x.x / a_) + (x.y / b_) * (x.y / b_) < 1.0;
    case DomainKind::Polygon: {
      bool in = false;
      const auto& v = vertices_;
      for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        if ((v[i].y > x.y) != (v[j].y > x.y) &&
            x.x < (v[j].x - v[i].x) * (x.y - v[i].y) / (v[j].y - v[i].y) + v[i].x)
          in = !in;
      }
      if (!in) return false;
      for (std::size_t i = 0; i < v.size(); ++i)
        if (segment_distance(x, v[i], v[(i + 1) % v.size()]) == 0.0) return false;
      return true;
    }
  }
  return false;
}

double DomainSpec::distance_to_boundary(Point2 x) const {
  switch (kind_) {
    case DomainKind::UnitDisk: return std::abs(1.0 - norm(x));
    case DomainKind::Rectangle:
      return std::min({std::abs(x.x), std::abs(a_ - x.x), std::abs(x.y), std::abs(b_ - x.y)});
    case DomainKind::Ellipse: {
      // Nearest point on the ellipse by Newton on the parametric angle from several starts.
      double best = std::numeric_limits<double>::infinity();
      for (int s = 0; s < 8; ++s) {
        double th = 2.0 * kPi * s / 8.0;
        for (int it = 0; it < 50; ++it) {
          const double c = std::cos(th), sn = std::sin(th);
          const Point2 e{a_ * c, b_ * sn};
          const Point2 de{-a_ * sn, b_ * c};
          const Point2 dde{-a_ * c, -b_ * sn};
          const Point2 r = e - x;
          const double g = dot(r, de);
          const double hh = dot(de, de) + dot(r, dde);
          if (hh <= 0.0) break;
          const double step = g / hh;
          th -= step;
          if (std::abs(step) < 1e-15) break;
        }
        best = std::min(best, distance(x, {a_ * std::cos(th), b_ * std::sin(th)}));
      }
      return best;
    }
    case DomainKind::Polygon: {
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < vertices_.size(); ++i)
        d = std::min(d, segment_distance(x, vertices_[i], vertices_[(i + 1) % vertices_.size()]));
      return d;
    }
  }
  return 0.0;
}

Point2 DomainSpec::project_to_boundary(Point2 x) const {
  switch (kind_) {
    case DomainKind::UnitDisk: return x / norm(x);
    case DomainKind::Ellipse: {
      const double s = std::hypot(x.x / a_, x.y / b_);
      return x / s;
    }
    default: return x;
  }
}

std::string DomainSpec::name() const {
  std::ostringstream os;
  switch (kind_) {
    case DomainKind::UnitDisk: os << "disk"; break;
    case DomainKind::Rectangle: os << "rectangle(" << a_ << "," << b_ << ")"; break;
    case DomainKind::Ellipse: os << "ellipse(" << a_ << "," << b_ << ")"; break;
    case DomainKind::Polygon: os << "polygon[" << vertices_.size() << "]"; break;
  }
  return os.str();
}

// ---------------------------------------------------------------- TriMesh

double TriMesh::signed_area(std::size_t t) const {
  const auto& v = triangles[t];
  const Point2 a = vertices[std::size_t(v[0])], b = vertices[std::size_t(v[1])],
               c = vertices[std::size_t(v[2])];
  return 0.5 * cross(b - a, c - a);
}

double TriMesh::area() const {
  double s = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) s += signed_area(t);
  return s;
}

double TriMesh::longest_edge(std::size_t t) const {
  const auto& v = triangles[t];
  double h = 0.0;
  for (int k = 0; k < 3; ++k)
    h = std::max(h, distance(vertices[std::size_t(v[k])], vertices[std::size_t(v[(k + 1) % 3])]));
  return h;
}

double TriMesh::max_h() const {
  double h = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) h = std::max(h, longest_edge(t));
  return h;
}

std::string TriMesh::id() const {
  std::uint64_t hash = 1469598103934665603ull;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= p[i];
      hash *= 1099511628211ull;
    }
  };
  for (const auto& v : vertices) {
    mix(&v.x, sizeof(double));
    mix(&v.y, sizeof(double));
  }
  for (const auto& t : triangles) mix(t.data(), sizeof(int) * 3);
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << hash;
  return os.str();
}

void TriMesh::rebuild_boundary() {
  std::unordered_map<std::uint64_t, std::pair<int, std::array<int, 2>>> count;
  for (const auto& t : triangles)
    for (int k = 0; k < 3; ++k) {
      auto& slot = count[edge_key(t[k], t[(k + 1) % 3])];
      ++slot.first;
      slot.second = {t[k], t[(k + 1) % 3]};
    }
  boundary_vertex.assign(vertices.size(), 0);
  boundary_edges.clear();
  std::vector<std::pair<std::uint64_t, std::array<int, 2>>> edges;
  for (const auto& [key, val] : count)
    if (val.first == 1) edges.emplace_back(key, val.second);
  std::sort(edges.begin(), edges.end(), [](auto& a, auto& b) { return a.first < b.first; });
  for (const auto& [key, e] : edges) {
    const Point2 d = vertices[std::size_t(e[1])] - vertices[std::size_t(e[0])];
    BoundaryEdge be{e, Point2{d.y, -d.x} / norm(d)};
    boundary_edges.push_back(be);
    boundary_vertex[std::size_t(e[0])] = 1;
    boundary_vertex[std::size_t(e[1])] = 1;
  }
}

void TriMesh::validate() const {
  std::unordered_map<std::uint64_t, int> count;
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const int v = triangles[t][k];
      if (v < 0 || std::size_t(v) >= vertices.size())
        fail(ErrorKind::InvalidDomain, "triangle references a missing vertex");
      ++count[edge_key(triangles[t][k], triangles[t][(k + 1) % 3])];
    }
    if (!(signed_area(t) > 0.0))
      fail(ErrorKind::InvalidDomain, "triangle " + std::to_string(t) + " has non-positive area");
  }
  std::size_t boundary = 0;
  for (const auto& [key, c] : count) {
    if (c > 2) fail(ErrorKind::InvalidDomain, "edge shared by more than two triangles");
    if (c == 1) ++boundary;
  }
  if (boundary != boundary_edges.size())
    fail(ErrorKind::InvalidDomain, "boundary edge list is stale");
  for (const auto& e : boundary_edges)
    if (std::abs(norm(e.normal) - 1.0) > 1e-12)
      fail(ErrorKind::InvalidDomain, "boundary normal is not unit length");
}

// ---------------------------------------------------------------- generation & refinement

TriMesh build_mesh(const DomainSpec& domain, double target_h, const MeshOptions& opts) {
  require(target_h > 0.0 && target_h < domain.diameter(), ErrorKind::InvalidArgument,
          "target_h must lie in (0, diameter)");
  switch (domain.kind()) {
    case DomainKind::UnitDisk:
    case DomainKind::Ellipse: return ring_mesh(domain, target_h, opts);
    case DomainKind::Rectangle: return grid_mesh(domain, target_h, opts);
    case DomainKind::Polygon: return polygon_mesh(domain, target_h, opts);
  }
  fail(ErrorKind::InvalidDomain, "unknown domain kind");
}

TriMesh bisect_triangles(const TriMesh& mesh, const std::vector<std::size_t>& marked,
                         const MeshOptions& opts) {
  Refiner ref(mesh, opts.max_vertices);
  for (std::size_t t : marked)
    if (ref.alive(t)) ref.bisect(int(t));
  return ref.finish();
}

TriMesh refine_near(const TriMesh& mesh, Point2 center, double radius, int levels,
                    const MeshOptions& opts) {
  require(levels >= 1, ErrorKind::InvalidArgument, "levels must be >= 1");
  require(mesh.domain.contains(center), ErrorKind::CenterOutsideDomain,
          "refinement center lies outside the domain");
  TriMesh cur = mesh;
  for (int gen = 0; gen < 2 * levels; ++gen) {
    std::vector<std::size_t> marked;
    for (std::size_t t = 0; t < cur.triangles.size(); ++t) {
      const auto& v = cur.triangles[t];
      if (point_triangle_distance(center, cur.vertices[std::size_t(v[0])], cur.vertices[std::size_t(v[1])],
                                  cur.vertices[std::size_t(v[2])]) <= radius)
        marked.push_back(t);
    }
    cur = bisect_triangles(cur, marked, opts);
  }
  return cur;
}

TriMesh grade_toward(const TriMesh& mesh, Point2 center, double h_core, double growth,
                     const MeshOptions& opts) {
  require(h_core > 0.0 && growth > 0.0, ErrorKind::InvalidArgument, "grading parameters must be positive");
  Refiner ref(mesh, opts.max_vertices);
  for (int pass = 0; pass < 400; ++pass) {
    std::vector<int> marked;
    const auto& vs = ref.vertices();
    for (std::size_t t = 0; t < ref.triangle_slots(); ++t) {
      if (!ref.alive(t)) continue;
      const auto& v = ref.tri(t);
      const double d = point_triangle_distance(center, vs[std::size_t(v[0])], vs[std::size_t(v[1])],
                                               vs[std::size_t(v[2])]);
      if (ref.longest(t) > std::max(h_core, growth * d)) marked.push_back(int(t));
    }
    if (marked.empty()) break;
    for (int t : marked)
      if (ref.alive(std::size_t(t))) ref.bisect(t);
  }
  return ref.finish();
}

QualityStats mesh_quality(const TriMesh& mesh) {
  QualityStats q;
  q.vertex_count = mesh.vertices.size();
  q.triangle_count = mesh.triangles.size();
  q.min_angle_deg = 180.0;
  q.min_h = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& v = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const Point2 a = mesh.vertices[std::size_t(v[k])];
      const Point2 b = mesh.vertices[std::size_t(v[(k + 1) % 3])];
      const Point2 c = mesh.vertices[std::size_t(v[(k + 2) % 3])];
      const double ang = std::atan2(std::abs(cross(b - a, c - a)), dot(b - a, c - a)) * 180.0 / kPi;
      q.min_angle_deg = std::min(q.min_angle_deg, ang);
    }
    const double h = mesh.longest_edge(t);
    q.max_h = std::max(q.max_h, h);
    q.min_h = std::min(q.min_h, h);
  }
  return q;
}

double local_h(const TriMesh& mesh, Point2 center, double radius) {
  double h = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& v = mesh.triangles[t];
    if (point_triangle_distance(center, mesh.vertices[std::size_t(v[0])], mesh.vertices[std::size_t(v[1])],
                                mesh.vertices[std::size_t(v[2])]) <= radius)
      h = std::min(h, mesh.longest_edge(t));
  }
  return h;
}

// ---------------------------------------------------------------- location

std::array<double, 3> barycentric(Point2 a, Point2 b, Point2 c, Point2 x) {
  const double det = cross(b - a, c - a);
  const double l1 = cross(x - a, c - a) / det;
  const double l2 = cross(b - a, x - a) / det;
  return {1.0 - l1 - l2, l1, l2};
}

MeshLocator::MeshLocator(const TriMesh& mesh) : mesh_(&mesh) {
  const std::size_t nt = mesh.triangles.size();
  neighbors_.assign(nt, {-1, -1, -1});
  std::unordered_map<std::uint64_t, std::pair<int, int>> owner;
  owner.reserve(nt * 2);
  for (std::size_t t = 0; t < nt; ++t)
    for (int k = 0; k < 3; ++k) {
      // Edge opposite vertex k.
      const int a = mesh.triangles[t][(k + 1) % 3], b = mesh.triangles[t][(k + 2) % 3];
      auto [it, fresh] = owner.try_emplace(edge_key(a, b), int(t), k);
      if (!fresh) {
        neighbors_[t][std::size_t(k)] = it->second.first;
        neighbors_[std::size_t(it->second.first)][std::size_t(it->second.second)] = int(t);
      }
    }
  lo_ = hi_ = mesh.vertices.empty() ? Point2{} : mesh.vertices[0];
  for (const auto& p : mesh.vertices) {
    lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y)};
    hi_ = {std::max(hi_.x, p.x), std::max(hi_.y, p.y)};
  }
  const int side = std::max(1, int(std::sqrt(double(nt) / 4.0)));
  nx_ = ny_ = side;
  bucket_.assign(std::size_t(nx_ * ny_), -1);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& v = mesh.triangles[t];
    const Point2 c = (mesh.vertices[std::size_t(v[0])] + mesh.vertices[std::size_t(v[1])] +
                      mesh.vertices[std::size_t(v[2])]) / 3.0;
    const int ix = std::clamp(int((c.x - lo_.x) / (hi_.x - lo_.x + 1e-300) * nx_), 0, nx_ - 1);
    const int iy = std::clamp(int((c.y - lo_.y) / (hi_.y - lo_.y + 1e-300) * ny_), 0, ny_ - 1);
    auto& slot = bucket_[std::size_t(iy * nx_ + ix)];
    if (slot < 0) slot = int(t);
  }
}

std::optional<MeshLocator::Hit> MeshLocator::walk(std::size_t start, Point2 x) const {
  std::size_t t = start;
  const std::size_t limit = mesh_->triangles.size() + 10;
  for (std::size_t step = 0; step < limit; ++step) {
    const auto& v = mesh_->triangles[t];
    const auto bc = barycentric(mesh_->vertices[std::size_t(v[0])], mesh_->vertices[std::size_t(v[1])],
                                mesh_->vertices[std::size_t(v[2])], x);
    int worst = 0;
    for (int k = 1; k < 3; ++k)
      if (bc[std::size_t(k)] < bc[std::size_t(worst)]) worst = k;
    if (bc[std::size_t(worst)] >= -1e-12) return Hit{t, bc};
    const int nb = neighbors_[t][std::size_t(worst)];
    if (nb < 0) return std::nullopt;
    t = std::size_t(nb);
  }
  return std::nullopt;
}

std::optional<MeshLocator::Hit> MeshLocator::locate(Point2 x) const {
  if (mesh_->triangles.empty()) return std::nullopt;
  if (x.x < lo_.x - 1e-12 || x.x > hi_.x + 1e-12 || x.y < lo_.y - 1e-12 || x.y > hi_.y + 1e-12)
    return std::nullopt;
  std::size_t start = last_;
  const int ix = std::clamp(int((x.x - lo_.x) / (hi_.x - lo_.x + 1e-300) * nx_), 0, nx_ - 1);
  const int iy = std::clamp(int((x.y - lo_.y) / (hi_.y - lo_.y + 1e-300) * ny_), 0, ny_ - 1);
  if (bucket_[std::size_t(iy * nx_ + ix)] >= 0) start = std::size_t(bucket_[std::size_t(iy * nx_ + ix)]);
  if (start >= mesh_->triangles.size()) start = 0;
  if (auto hit = walk(start, x)) {
    last_ = hit->triangle;
    return hit;
  }
  // Walks can stall at reentrant corners; scan exhaustively.
  std::optional<Hit> best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh_->triangles.size(); ++t) {
    const auto& v = mesh_->triangles[t];
    const auto bc = barycentric(mesh_->vertices[std::size_t(v[0])], mesh_->vertices[std::size_t(v[1])],
                                mesh_->vertices[std::size_t(v[2])], x);
    const double mn = std::min({bc[0], bc[1], bc[2]});
    if (mn > best_min) {
      best_min = mn;
      best = Hit{t, bc};
    }
  }
  if (best && best_min >= -1e-12) {
    last_ = best->triangle;
    return best;
  }
  return std::nullopt;
}

std::optional<double> MeshLocator::interpolate(const std::vector<double>& values, Point2 x) const {
  return interpolate_vec(values, x);
}

// ---------------------------------------------------------------- JSON

void to_json(nlohmann::json& j, const TriMesh& mesh) {
  j = nlohmann::json::object();
  auto& vs = j["vertices"] = nlohmann::json::array();
  for (const auto& p : mesh.vertices) vs.push_back({p.x, p.y});
  auto& ts = j["triangles"] = nlohmann::json::array();
  for (const auto& t : mesh.triangles) ts.push_back({t[0], t[1], t[2]});
  auto& bs = j["boundary"] = nlohmann::json::array();
  for (auto b : mesh.boundary_vertex) bs.push_back(b != 0);
}

TriMesh mesh_from_json(const nlohmann::json& j, const DomainSpec& domain) {
  TriMesh mesh;
  mesh.domain = domain;
  for (const auto& p : j.at("vertices")) mesh.vertices.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  for (const auto& t : j.at("triangles"))
    mesh.triangles.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
  mesh.rebuild_boundary();
  if (j.contains("boundary")) {
    const auto& b = j.at("boundary");
    if (b.size() != mesh.vertices.size())
      fail(ErrorKind::InvalidDomain, "boundary flag count does not match vertex count");
    for (std::size_t i = 0; i < b.size(); ++i)
      if (b[i].get<bool>() != (mesh.boundary_vertex[i] != 0))
        fail(ErrorKind::InvalidDomain, "boundary flags disagree with the triangulation");
  }
  mesh.validate();
  return mesh;
}

nlohmann::json domain_to_json(const DomainSpec& d) {
  nlohmann::json j;
  switch (d.kind()) {
    case DomainKind::UnitDisk: j["kind"] = "unit_disk"; break;
    case DomainKind::Rectangle:
      j["kind"] = "rectangle";
      j["width"] = d.width();
      j["height"] = d.height();
      break;
    case DomainKind::Ellipse:
      j["kind"] = "ellipse";
      j["semi_axis_a"] = d.semi_axis_a();
      j["semi_axis_b"] = d.semi_axis_b();
      break;
    case DomainKind::Polygon: {
      j["kind"] = "polygon";
      auto& vs = j["vertices"] = nlohmann::json::array();
      for (const auto& p : d.vertices()) vs.push_back({p.x, p.y});
      break;
    }
  }
  j["convex"] = d.convex();
  j["diameter"] = d.diameter();
  return j;
}

DomainSpec domain_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "unit_disk") return DomainSpec::unit_disk();
  if (kind == "rectangle") return DomainSpec::rectangle(j.at("width"), j.at("height"));
  if (kind == "ellipse") return DomainSpec::ellipse(j.at("semi_axis_a"), j.at("semi_axis_b"));
  if (kind == "polygon") {
    std::vector<Point2> v;
    for (const auto& p : j.at("vertices")) v.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    std::optional<bool> convex;
    if (j.contains("convex")) convex = j.at("convex").get<bool>();
    return DomainSpec::polygon(std::move(v), convex);
  }
  fail(ErrorKind::InvalidDomain, "unknown domain kind '" + kind + "'");
}

}  // namespace lelab
