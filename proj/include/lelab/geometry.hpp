#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lelab/point.hpp"

namespace lelab {

enum class DomainKind { UnitDisk, Rectangle, Ellipse, Polygon };

/// Planar domain description. Rectangles occupy [0, width] x [0, height];
/// the disk and ellipse are centred at the origin.
class DomainSpec {
public:
  static DomainSpec unit_disk();
  static DomainSpec rectangle(double width, double height);
  static DomainSpec ellipse(double semi_axis_a, double semi_axis_b);
  /// Vertices in CCW order; throws InvalidDomain if the polygon self-intersects
  /// or is clockwise. `declared_convex` is checked against the turning angles.
  static DomainSpec polygon(std::vector<Point2> vertices, std::optional<bool> declared_convex = {});

  DomainKind kind() const { return kind_; }
  bool convex() const { return convex_; }
  double width() const { return a_; }
  double height() const { return b_; }
  double semi_axis_a() const { return a_; }
  double semi_axis_b() const { return b_; }
  const std::vector<Point2>& vertices() const { return vertices_; }

  double diameter() const;
  double area() const;
  Point2 centroid() const;
  bool contains(Point2 x) const;
  /// Distance from an interior point to the exact boundary.
  double distance_to_boundary(Point2 x) const;
  /// Nearest-point projection for curved boundaries; identity for polygonal ones.
  Point2 project_to_boundary(Point2 x) const;
  bool curved() const { return kind_ == DomainKind::UnitDisk || kind_ == DomainKind::Ellipse; }

  std::string name() const;

private:
  DomainKind kind_ = DomainKind::UnitDisk;
  double a_ = 1.0;
  double b_ = 1.0;
  std::vector<Point2> vertices_;
  bool convex_ = true;
};

struct BoundaryEdge {
  std::array<int, 2> v;  ///< oriented so the domain lies to the left
  Point2 normal;         ///< outward unit normal
};

struct TriMesh {
  DomainSpec domain;
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles;  ///< CCW
  std::vector<std::uint8_t> boundary_vertex;
  std::vector<BoundaryEdge> boundary_edges;

  std::size_t vertex_count() const { return vertices.size(); }
  double signed_area(std::size_t t) const;
  double area() const;
  double longest_edge(std::size_t t) const;
  /// Largest edge length over the mesh.
  double max_h() const;
  /// Stable content hash, used as mesh_id in serialized results.
  std::string id() const;

  /// Rebuilds boundary flags and edges from the triangle list.
  void rebuild_boundary();
  /// Throws InvalidDomain on any broken invariant.
  void validate() const;
};

struct MeshOptions {
  std::size_t max_vertices = 400000;
};

/// Structured base mesh: polar rings for disk/ellipse, tensor grid for rectangles,
/// ear clipping plus bisection for polygons.
TriMesh build_mesh(const DomainSpec& domain, double target_h, const MeshOptions& opts = {});

/// Halves the local mesh size `levels` times on every triangle meeting the
/// disk B_radius(center). One level is two generations of longest-edge
/// bisection, which restores the shape class of the base triangles.
TriMesh refine_near(const TriMesh& mesh, Point2 center, double radius, int levels,
                    const MeshOptions& opts = {});

/// Graded refinement toward `center`: bisects until every triangle satisfies
/// longest_edge <= max(h_core, growth * dist(center, triangle)).
TriMesh grade_toward(const TriMesh& mesh, Point2 center, double h_core, double growth,
                     const MeshOptions& opts = {});

/// Bisects the listed triangles once each (with conformity closure).
TriMesh bisect_triangles(const TriMesh& mesh, const std::vector<std::size_t>& marked,
                         const MeshOptions& opts = {});

struct QualityStats {
  double min_angle_deg = 0.0;
  double max_h = 0.0;
  double min_h = 0.0;
  std::size_t vertex_count = 0;
  std::size_t triangle_count = 0;
};

QualityStats mesh_quality(const TriMesh& mesh);

/// Smallest longest-edge among triangles within `radius` of `center`.
double local_h(const TriMesh& mesh, Point2 center, double radius);

/// Point location with triangle adjacency walking.
class MeshLocator {
public:
  explicit MeshLocator(const TriMesh& mesh);

  struct Hit {
    std::size_t triangle;
    std::array<double, 3> bary;
  };

  /// Triangle containing x (barycentric tolerance 1e-12); nullopt outside the mesh.
  std::optional<Hit> locate(Point2 x) const;
  /// P1 interpolation of nodal values; nullopt outside.
  std::optional<double> interpolate(const std::vector<double>& values, Point2 x) const;
  template <class Vec>
  std::optional<double> interpolate_vec(const Vec& values, Point2 x) const {
    auto hit = locate(x);
    if (!hit) return std::nullopt;
    const auto& t = mesh_->triangles[hit->triangle];
    return hit->bary[0] * values[t[0]] + hit->bary[1] * values[t[1]] + hit->bary[2] * values[t[2]];
  }

  const TriMesh& mesh() const { return *mesh_; }
  /// Triangles adjacent across each edge (-1 on the boundary); edge k is opposite vertex k.
  const std::vector<std::array<int, 3>>& neighbors() const { return neighbors_; }

private:
  std::optional<Hit> walk(std::size_t start, Point2 x) const;

  const TriMesh* mesh_;
  std::vector<std::array<int, 3>> neighbors_;
  // Coarse bucket grid over triangle centroids to seed the walk.
  Point2 lo_, hi_;
  int nx_ = 1, ny_ = 1;
  std::vector<int> bucket_;
  mutable std::size_t last_ = 0;
};

std::array<double, 3> barycentric(Point2 a, Point2 b, Point2 c, Point2 x);

void to_json(nlohmann::json& j, const TriMesh& mesh);
/// Reads {vertices, triangles, boundary}; the domain is not part of the format
/// and must be supplied.
TriMesh mesh_from_json(const nlohmann::json& j, const DomainSpec& domain);

nlohmann::json domain_to_json(const DomainSpec& d);
DomainSpec domain_from_json(const nlohmann::json& j);

}  // namespace lelab
