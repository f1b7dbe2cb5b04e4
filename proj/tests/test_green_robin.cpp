#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "lelab/errors.hpp"
#include "lelab/green_robin.hpp"
#include "lelab/radial_oracle.hpp"

using namespace lelab;

namespace {

const double kPi = std::numbers::pi;

double disk_robin(Point2 x) { return -std::log(1.0 - dot(x, x)) / (2.0 * kPi); }

std::shared_ptr<const TriMesh> mesh_of(const DomainSpec& d, double h) {
  return std::make_shared<const TriMesh>(build_mesh(d, h));
}

class DiskRobin : public ::testing::Test {
protected:
  static void SetUpTestSuite() { solver_ = new RobinSolver(mesh_of(DomainSpec::unit_disk(), 0.02)); }
  static void TearDownTestSuite() {
    delete solver_;
    solver_ = nullptr;
  }
  static RobinSolver* solver_;
};
RobinSolver* DiskRobin::solver_ = nullptr;

}  // namespace

TEST(Fundamental, LogKernel) {
  EXPECT_DOUBLE_EQ(fundamental_solution({1, 0}, {0, 0}), 0.0);
  EXPECT_NEAR(fundamental_solution({0.5, 0}, {0, 0}), std::log(2.0) / (2 * kPi), 1e-15);
}

TEST_F(DiskRobin, RegularPartAtOriginVanishes) {
  const Eigen::VectorXd H = solver_->regular_part({0, 0});
  EXPECT_LE(H.cwiseAbs().maxCoeff(), 1e-12);
}

TEST_F(DiskRobin, RegularPartMatchesImageCharge) {
  const Point2 y{0.5, 0.0};
  const Eigen::VectorXd H = solver_->regular_part(y);
  const TriMesh& mesh = solver_->mesh();
  const Point2 ystar = y / dot(y, y);
  double err = 0.0;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Point2 x = mesh.vertices[i];
    const double exact = -std::log(norm(y) * distance(x, ystar)) / (2 * kPi);
    err = std::max(err, std::abs(H[Eigen::Index(i)] - exact));
  }
  EXPECT_LE(err, 1e-3);
  EXPECT_NEAR(solver_->robin_value(y), 0.045786, 1e-3);
}

TEST_F(DiskRobin, RegularPartIsDiscreteHarmonicWithExactTrace) {
  const Point2 y{0.2, -0.3};
  const Eigen::VectorXd H = solver_->regular_part(y);
  const TriMesh& mesh = solver_->mesh();
  const Eigen::VectorXd r = solver_->stiffness() * H;
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (mesh.boundary_vertex[i]) {
      EXPECT_EQ(H[Eigen::Index(i)], fundamental_solution(mesh.vertices[i], y));
      lo = std::min(lo, H[Eigen::Index(i)]);
      hi = std::max(hi, H[Eigen::Index(i)]);
    } else {
      EXPECT_LE(std::abs(r[Eigen::Index(i)]), 1e-10);
    }
  }
  EXPECT_GE(H.minCoeff(), lo - 1e-14);
  EXPECT_LE(H.maxCoeff(), hi + 1e-14);
}

TEST_F(DiskRobin, RobinValuesAndTrend) {
  EXPECT_NEAR(solver_->robin_value({0, 0}), 0.0, 1e-3);
  const double r9 = solver_->robin_value({0.9, 0});
  EXPECT_NEAR(r9, 0.26424, 5e-3);
  EXPECT_GT(r9, solver_->robin_value({0.5, 0}));
  EXPECT_GT(solver_->robin_value({0.5, 0}), solver_->robin_value({0, 0}));
}

TEST_F(DiskRobin, GreenSymmetry) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> r(0.0, 0.8), th(0.0, 2 * kPi);
  for (int i = 0; i < 10; ++i) {
    const double r1 = r(rng), t1 = th(rng), r2 = r(rng), t2 = th(rng);
    const Point2 x{r1 * std::cos(t1), r1 * std::sin(t1)}, y{r2 * std::cos(t2), r2 * std::sin(t2)};
    const double gxy = solver_->green(x, y, solver_->regular_part(y));
    const double gyx = solver_->green(y, x, solver_->regular_part(x));
    EXPECT_NEAR(gxy, gyx, 1e-3);
  }
}

TEST_F(DiskRobin, LaplacianOfRobinIsPositive) {
  for (double r : {0.0, 0.3, 0.6, 0.8})
    for (double t : {0.0, 1.0, 2.5}) {
      const Sym2 H = solver_->robin_hessian({r * std::cos(t), r * std::sin(t)});
      EXPECT_GT(H.xx + H.yy, 0.0);
    }
}

TEST_F(DiskRobin, DerivativesMatchClosedForm) {
  const Point2 x{0.3, 0.2};
  const double s = 1.0 - dot(x, x);
  const Point2 g = solver_->robin_gradient(x);
  EXPECT_NEAR(g.x, x.x / (kPi * s), 1e-4);
  EXPECT_NEAR(g.y, x.y / (kPi * s), 1e-4);
  const Sym2 H = solver_->robin_hessian(x);
  EXPECT_NEAR(H.xx, 1 / (kPi * s) + 2 * x.x * x.x / (kPi * s * s), 1e-3);
  EXPECT_NEAR(H.xy, 2 * x.x * x.y / (kPi * s * s), 1e-3);
  EXPECT_NEAR(H.yy, 1 / (kPi * s) + 2 * x.y * x.y / (kPi * s * s), 1e-3);
}

TEST_F(DiskRobin, BoundaryIdentities) {
  const auto g1 = boundary_identity(*solver_, {0.3, 0.2}, BoundaryIdentity::G1);
  EXPECT_NEAR(g1.lhs / (1 / (2 * kPi)), 1.0, 1e-2);
  for (int j : {0, 1}) {
    const auto r1 = boundary_identity(*solver_, {0, 0}, BoundaryIdentity::R1, j);
    EXPECT_NEAR(r1.lhs, 0.0, 1e-3);
  }
  const auto r2 = boundary_identity(*solver_, {0, 0}, BoundaryIdentity::R2, 0, 0);
  EXPECT_NEAR(r2.lhs / (0.5 / kPi), 1.0, 5e-2);
  for (Point2 y : {Point2{0.3, 0.2}, Point2{-0.4, 0.1}, Point2{0.1, -0.5}}) {
    for (int j : {0, 1}) {
      EXPECT_LE(boundary_identity(*solver_, y, BoundaryIdentity::R1, j).rel_residual, 5e-2);
      EXPECT_LE(boundary_identity(*solver_, y, BoundaryIdentity::G2, j).rel_residual, 5e-2);
      for (int k : {0, 1}) EXPECT_LE(boundary_identity(*solver_, y, BoundaryIdentity::R2, j, k).rel_residual, 5e-2);
    }
  }
}

TEST_F(DiskRobin, CriticalPointAtCentre) {
  const RobinData d = robin_critical_point(*solver_);
  EXPECT_LE(norm(d.x_inf), 1e-4);
  EXPECT_NEAR(d.mu1, 1 / kPi, 2e-2);
  EXPECT_NEAR(d.mu2, 1 / kPi, 2e-2);
  EXPECT_LE(d.mu1, d.mu2);
  EXPECT_NEAR(d.laplacian_R, d.mu1 + d.mu2, 1e-14);
  EXPECT_LE(norm(d.grad_R), 1e-8);
  EXPECT_FALSE(d.multiple_limits);
  for (const Point2 x : d.limits) EXPECT_LE(distance(x, d.x_inf), 1e-6);
}

TEST_F(DiskRobin, PointTooCloseToBoundary) {
  try {
    solver_->regular_part({0.99, 0.0});
    ADD_FAILURE() << "source next to the boundary accepted";
  } catch (const LabError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PointTooCloseToBoundary);
  }
}

TEST_F(DiskRobin, JsonAndCsv) {
  RobinOptions o;
  o.sample_grid = 5;
  const RobinData d = robin_critical_point(*solver_, o);
  const auto j = to_json(d);
  for (const char* key : {"x_inf", "grad_R", "hessian", "mu1", "mu2", "laplacian_R"}) EXPECT_TRUE(j.contains(key)) << key;
  std::ostringstream os;
  write_robin_csv(os, d);
  EXPECT_EQ(os.str().substr(0, 6), "x,y,R\n");
  EXPECT_FALSE(d.samples.empty());
}

TEST(Robin, DiskConvergesAtSecondOrder) {
  std::vector<double> errs;
  for (double h : {0.03, 0.015}) {
    const RobinSolver s(mesh_of(DomainSpec::unit_disk(), h));
    double e = 0.0;
    for (int i = -9; i <= 9; ++i)
      for (int j = -9; j <= 9; ++j) {
        const Point2 x{0.1 * i, 0.1 * j};
        if (dot(x, x) > 0.81 + 1e-12) continue;
        e = std::max(e, std::abs(s.robin_value(x) - disk_robin(x)));
      }
    errs.push_back(e);
  }
  EXPECT_LE(errs[1], 1e-3);
  EXPECT_GE(errs[0] / errs[1], 3.5);
  EXPECT_LE(errs[0] / errs[1], 4.5);
}

TEST(Robin, SquareCriticalPoint) {
  const RobinSolver s(mesh_of(DomainSpec::rectangle(1, 1), 0.02));
  const RobinData d = robin_critical_point(s);
  EXPECT_LE(distance(d.x_inf, {0.5, 0.5}), 1e-3);
  EXPECT_GT(d.mu1, 0.0);
  EXPECT_NEAR(d.mu1 / d.mu2, 1.0, 5e-2);
  const auto g1 = boundary_identity(s, {0.4, 0.55}, BoundaryIdentity::G1);
  EXPECT_NEAR(g1.lhs / (1 / (2 * kPi)), 1.0, 5e-2);
}

TEST(Robin, EllipseCriticalPointAndOrdering) {
  const RobinSolver s(mesh_of(DomainSpec::ellipse(2, 1), 0.03));
  const RobinData d = robin_critical_point(s);
  EXPECT_LE(norm(d.x_inf), 1e-3);
  EXPECT_GT(d.mu1, 0.0);
  EXPECT_LT(d.mu1, d.mu2);
  EXPECT_GE(std::abs(d.mu1_direction.x), 0.99);
  // brute-force ordering: R is flatter along the long axis
  const double t = 0.2, r0 = s.robin_value({0, 0});
  const double along = s.robin_value({t, 0}) + s.robin_value({-t, 0}) - 2 * r0;
  const double across = s.robin_value({0, t}) + s.robin_value({0, -t}) - 2 * r0;
  EXPECT_LT(along, across);
}

TEST(Robin, RelativeResidual) {
  EXPECT_DOUBLE_EQ(relative_residual(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_residual(1.0, -1.0), 1.0);
  EXPECT_EQ(relative_residual(0.0, 0.0), 0.0);
}
