#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <unordered_map>

#include "lelab/errors.hpp"
#include "lelab/geometry.hpp"

using namespace lelab;

namespace {

void expect_conforming(const TriMesh& m) {
  EXPECT_NO_THROW(m.validate());
  std::unordered_map<std::uint64_t, int> count;
  for (const auto& t : m.triangles)
    for (int k = 0; k < 3; ++k) {
      const auto a = std::uint64_t(std::min(t[k], t[(k + 1) % 3]));
      const auto b = std::uint64_t(std::max(t[k], t[(k + 1) % 3]));
      ++count[(a << 32) | b];
    }
  for (auto& [k, c] : count) ASSERT_LE(c, 2);
}

double max_circumdiameter(const TriMesh& m) {
  double d = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& v = m.triangles[t];
    const double a = distance(m.vertices[v[0]], m.vertices[v[1]]);
    const double b = distance(m.vertices[v[1]], m.vertices[v[2]]);
    const double c = distance(m.vertices[v[2]], m.vertices[v[0]]);
    d = std::max(d, a * b * c / (2.0 * m.signed_area(t)));
  }
  return d;
}

}  // namespace

TEST(Domain, PolygonValidation) {
  EXPECT_THROW(DomainSpec::polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), LabError);
  EXPECT_THROW(DomainSpec::polygon({{0, 0}, {0, 1}, {1, 0}}), LabError);  // clockwise
  auto L = DomainSpec::polygon({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}});
  EXPECT_FALSE(L.convex());
  EXPECT_DOUBLE_EQ(L.area(), 3.0);
  EXPECT_THROW(DomainSpec::polygon({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}, true), LabError);
  EXPECT_THROW(DomainSpec::rectangle(0.0, 1.0), LabError);
  EXPECT_THROW(DomainSpec::ellipse(1.0, -1.0), LabError);
}

TEST(Domain, DistanceAndProjection) {
  auto e = DomainSpec::ellipse(2.0, 1.0);
  EXPECT_NEAR(e.distance_to_boundary({0, 0}), 1.0, 1e-12);
  EXPECT_NEAR(e.distance_to_boundary({1.5, 0}), 0.5, 1e-12);
  auto q = e.project_to_boundary({0.3, 0.4});
  EXPECT_NEAR(q.x * q.x / 4 + q.y * q.y, 1.0, 1e-14);
  EXPECT_TRUE(DomainSpec::unit_disk().contains({0.5, 0.5}));
  EXPECT_FALSE(DomainSpec::unit_disk().contains({2.0, 0.0}));
}

TEST(BuildMesh, DiskAreaWithinTwoPercent) {
  auto m = build_mesh(DomainSpec::unit_disk(), 0.5);
  EXPECT_NEAR(m.area(), std::numbers::pi, 0.02 * std::numbers::pi);
  expect_conforming(m);
}

TEST(BuildMesh, SquareAreaExact) {
  auto m = build_mesh(DomainSpec::rectangle(1, 1), 0.25);
  EXPECT_NEAR(m.area(), 1.0, 1e-12);
  expect_conforming(m);
}

TEST(BuildMesh, VertexCapRaisesMeshTooFine) {
  try {
    build_mesh(DomainSpec::unit_disk(), 0.005, MeshOptions{100000});
    FAIL() << "expected MeshTooFine";
  } catch (const LabError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MeshTooFine);
  }
}

TEST(BuildMesh, RejectsBadTargetH) {
  EXPECT_THROW(build_mesh(DomainSpec::unit_disk(), 0.0), LabError);
  EXPECT_THROW(build_mesh(DomainSpec::unit_disk(), 3.0), LabError);
}

TEST(BuildMesh, PostconditionsAcrossDomains) {
  const DomainSpec domains[] = {
      DomainSpec::unit_disk(), DomainSpec::rectangle(2, 1), DomainSpec::ellipse(2, 1),
      DomainSpec::polygon({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}),
      DomainSpec::polygon({{0, 0}, {1, 0}, {0.5, 0.8}})};
  for (const auto& d : domains) {
    for (double h : {0.3, 0.1}) {
      SCOPED_TRACE(d.name() + " h=" + std::to_string(h));
      auto m = build_mesh(d, h);
      expect_conforming(m);
      EXPECT_LE(max_circumdiameter(m), 2.0 * h);
      EXPECT_GE(mesh_quality(m).min_angle_deg, 20.0);
      for (std::size_t i = 0; i < m.vertices.size(); ++i)
        if (m.boundary_vertex[i]) {
          EXPECT_LT(d.distance_to_boundary(m.vertices[i]), 1e-12);
        }
      const double rel = std::abs(m.area() - d.area()) / d.area();
      EXPECT_LT(rel, d.curved() ? 4.0 * h * h : 1e-12);
      const Point2 c = d.centroid();
      if (d.convex())
        for (const auto& e : m.boundary_edges) {
          const Point2 mid = (m.vertices[e.v[0]] + m.vertices[e.v[1]]) * 0.5;
          EXPECT_GT(dot(e.normal, mid - c), 0.0);
          EXPECT_NEAR(dot(e.normal, m.vertices[e.v[1]] - m.vertices[e.v[0]]), 0.0, 1e-14);
        }
    }
  }
}

TEST(RefineNear, SingleTriangleAreaQuarters) {
  auto m = build_mesh(DomainSpec::rectangle(1, 1), 0.25);
  // Pick an interior triangle and refine one level around its centroid with a tiny radius.
  const std::size_t t = m.triangles.size() / 2;
  const auto& v = m.triangles[t];
  const Point2 c = (m.vertices[v[0]] + m.vertices[v[1]] + m.vertices[v[2]]) / 3.0;
  const double before = m.signed_area(t);
  auto r = refine_near(m, c, 1e-9, 1);
  expect_conforming(r);
  MeshLocator loc(r);
  auto hit = loc.locate(c);
  ASSERT_TRUE(hit);
  EXPECT_NEAR(r.signed_area(hit->triangle), before / 4.0, 1e-15);
  EXPECT_NEAR(r.area(), 1.0, 1e-12);
}

TEST(RefineNear, DyadicLocalSize) {
  auto m = build_mesh(DomainSpec::rectangle(1, 1), 0.25);
  auto r = refine_near(m, {0.5, 0.5}, 0.1, 3);
  expect_conforming(r);
  EXPECT_LE(local_h(r, {0.5, 0.5}, 0.1), 0.25 / 8.0 * std::sqrt(2.0) + 1e-15);
  EXPECT_GE(r.vertex_count(), m.vertex_count());
}

TEST(RefineNear, CenterOutsideDomain) {
  auto m = build_mesh(DomainSpec::unit_disk(), 0.25);
  try {
    refine_near(m, {2.0, 0.0}, 0.1, 1);
    FAIL();
  } catch (const LabError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CenterOutsideDomain);
  }
}

TEST(RefineNear, CurvedBoundaryStaysOnCircle) {
  auto m = build_mesh(DomainSpec::unit_disk(), 0.25);
  auto r = refine_near(m, {0.9, 0.0}, 0.2, 3);
  expect_conforming(r);
  for (std::size_t i = 0; i < r.vertices.size(); ++i)
    if (r.boundary_vertex[i]) EXPECT_NEAR(norm(r.vertices[i]), 1.0, 1e-15);
}

TEST(GradeToward, ResolvesTinyCore) {
  auto m = build_mesh(DomainSpec::unit_disk(), 0.2);
  auto g = grade_toward(m, {0.0, 0.0}, 1e-9, 0.5);
  expect_conforming(g);
  EXPECT_LE(local_h(g, {0, 0}, 1e-12), 1e-9);
  EXPECT_LT(g.vertex_count(), 20000u);
  EXPECT_GT(mesh_quality(g).min_angle_deg, 10.0);
}

TEST(Quality, RightIsoscelesGrid) {
  auto m = build_mesh(DomainSpec::rectangle(1, 1), 0.25);
  auto q = mesh_quality(m);
  EXPECT_NEAR(q.min_angle_deg, 45.0, 1e-12);
  EXPECT_EQ(q.vertex_count, m.vertices.size());
}

TEST(Quality, EquilateralTriangle) {
  TriMesh m;
  m.domain = DomainSpec::polygon({{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}});
  m.vertices = {{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}};
  m.triangles = {{0, 1, 2}};
  m.rebuild_boundary();
  EXPECT_NEAR(mesh_quality(m).min_angle_deg, 60.0, 1e-12);
}

TEST(Locator, InterpolatesLinearFunctionsExactly) {
  auto m = refine_near(build_mesh(DomainSpec::unit_disk(), 0.2), {0.3, 0.1}, 0.2, 2);
  std::vector<double> f(m.vertices.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 2.0 * m.vertices[i].x - m.vertices[i].y + 0.5;
  MeshLocator loc(m);
  for (Point2 x : {Point2{0.0, 0.0}, Point2{0.31, 0.12}, Point2{-0.7, 0.2}, Point2{0.1, -0.9}}) {
    auto v = loc.interpolate(f, x);
    ASSERT_TRUE(v);
    EXPECT_NEAR(*v, 2.0 * x.x - x.y + 0.5, 1e-13);
  }
  EXPECT_FALSE(loc.locate({1.5, 0.0}));
}

TEST(Json, RoundTrip) {
  auto m = build_mesh(DomainSpec::ellipse(2, 1), 0.4);
  nlohmann::json j = m;
  auto back = mesh_from_json(j, m.domain);
  EXPECT_EQ(back.id(), m.id());
  EXPECT_EQ(back.boundary_edges.size(), m.boundary_edges.size());
  auto d = domain_from_json(domain_to_json(DomainSpec::polygon({{0, 0}, {1, 0}, {0, 1}})));
  EXPECT_EQ(d.kind(), DomainKind::Polygon);
  j["boundary"][0] = !j["boundary"][0].get<bool>();
  EXPECT_THROW(mesh_from_json(j, m.domain), LabError);
}
