#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "lelab/errors.hpp"
#include "lelab/lane_emden.hpp"
#include "lelab/radial_oracle.hpp"

using namespace lelab;

namespace {

const double kSqrtE = std::sqrt(std::numbers::e);
const double k8PiE = 8.0 * std::numbers::pi * std::numbers::e;

radial::RadialProfile oracle(double p) {
  radial::ShootingOptions o;
  o.bracket_hi = 10.0;
  return radial::shoot_radial(p, o);
}

std::shared_ptr<const TriMesh> disk_mesh(double h) {
  return std::make_shared<const TriMesh>(build_mesh(DomainSpec::unit_disk(), h));
}

template <class F>
void expect_kind(ErrorKind kind, F&& f) {
  try {
    f();
    ADD_FAILURE() << "expected " << to_string(kind);
  } catch (const LabError& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

// One disk sweep shared by the continuation, rescaling and peak tests.
class DiskBranch : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    branch_ = new Branch(continuation_sweep(DomainSpec::unit_disk(), {5, 10, 20, 40, 80}, 0.05));
  }
  static void TearDownTestSuite() {
    delete branch_;
    branch_ = nullptr;
  }
  static const Solution& at(double p) {
    for (const auto& s : branch_->solutions)
      if (s.p == p) return s;
    throw std::out_of_range("p not in sweep");
  }
  static Branch* branch_;
};
Branch* DiskBranch::branch_ = nullptr;

}  // namespace

TEST(LiouvilleGuess, PeakValueProfileAndClamp) {
  auto mesh = disk_mesh(0.05);
  const double p = 3.0;
  const Point2 x0{0.0, 0.0};
  const ScalarField g = liouville_guess(mesh, p, x0);
  const double eps = spike_scale(p, kSqrtE);
  EXPECT_NEAR(g.values.maxCoeff(), kSqrtE, 1e-12);  // the origin is a vertex
  for (std::size_t i = 0; i < mesh->vertices.size(); ++i) {
    const double r = norm(mesh->vertices[i]) / eps;
    const double expected = mesh->boundary_vertex[i] ? 0.0 : kSqrtE * std::max(0.0, 1.0 - 2.0 * std::log1p(r * r / 8) / p);
    EXPECT_NEAR(g.values[Eigen::Index(i)], expected, 1e-14);
  }
  // U(sqrt 8) = -2 log 2
  EXPECT_NEAR(kSqrtE * (1.0 - 2.0 * std::log1p(1.0) / p), kSqrtE * (1 - 2 * std::log(2.0) / p), 1e-15);
  // the clamp radius tends to sqrt(8/p) e^{1/4}, about 0.26 at p = 200
  const ScalarField far = liouville_guess(mesh, 200.0, x0);
  for (std::size_t i = 0; i < mesh->vertices.size(); ++i)
    if (norm(mesh->vertices[i]) > 0.5) EXPECT_EQ(far.values[Eigen::Index(i)], 0.0);
}

TEST(Newton, DiskP3MatchesShootingOracle) {
  auto mesh = disk_mesh(0.04);
  const Solution s = newton_solve(liouville_guess(mesh, 3.0, {0, 0}), 3.0);
  const double u0 = oracle(3.0).u0;
  EXPECT_NEAR(s.u_max / u0, 1.0, 1e-2);
  EXPECT_LE(norm(s.x_n), mesh_quality(*mesh).max_h);
  EXPECT_LE(s.residual_norm, 1e-10);
  EXPECT_TRUE(s.quadratic);
}

TEST(Newton, ZeroGuessIsRejected) {
  auto mesh = disk_mesh(0.1);
  ScalarField zero(mesh, Eigen::VectorXd::Zero(Eigen::Index(mesh->vertices.size())));
  try {
    newton_solve(zero, 3.0);
    ADD_FAILURE() << "zero guess accepted";
  } catch (const LabError& e) {
    EXPECT_TRUE(e.kind() == ErrorKind::PositivityLost || e.kind() == ErrorKind::NewtonDiverged) << e.what();
  }
}

TEST(Newton, GuessPreconditions) {
  auto mesh = disk_mesh(0.1);
  Eigen::VectorXd v = liouville_guess(mesh, 3.0, {0, 0}).values;
  v[0] = -1.0;
  expect_kind(ErrorKind::InvalidArgument, [&] { newton_solve(ScalarField(mesh, v), 3.0); });
  expect_kind(ErrorKind::InvalidArgument, [&] { newton_solve(liouville_guess(mesh, 3.0, {0, 0}), 1.0); });
}

TEST(Newton, ResolveFromSolutionIsFixedPoint) {
  auto mesh = disk_mesh(0.05);
  const Solution a = newton_solve(liouville_guess(mesh, 4.0, {0, 0}), 4.0);
  const Solution b = newton_solve(a.u, 4.0);
  EXPECT_EQ(b.iterations, 1);
  EXPECT_EQ((a.u.values - b.u.values).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(a.u_max, b.u_max);
}

TEST(Newton, MaxIterationsReported) {
  auto mesh = disk_mesh(0.05);
  NewtonOptions o;
  o.max_iterations = 1;
  expect_kind(ErrorKind::MaxIterations, [&] { newton_solve(liouville_guess(mesh, 3.0, {0, 0}), 3.0, o); });
}

TEST(Newton, EnergyIdentityAndEpsConsistency) {
  auto mesh = disk_mesh(0.05);
  for (double p : {3.0, 5.0}) {
    const Solution s = newton_solve(liouville_guess(mesh, p, {0, 0}), p);
    const SparseSymMatrix K = assemble_stiffness(*mesh);
    const double dirichlet = s.u.values.dot(K * s.u.values);
    const double potential = integrate_power(*mesh, s.u.values, p + 1.0);
    EXPECT_NEAR(dirichlet / potential, 1.0, 1e-8);
    EXPECT_DOUBLE_EQ(s.energy, p * dirichlet);
    EXPECT_EQ(s.eps_n, std::pow(p * std::pow(s.u_max, p - 1.0), -0.5));
    EXPECT_EQ(s.u_max, s.u.values.maxCoeff());
    for (std::size_t i = 0; i < mesh->vertices.size(); ++i) {
      if (mesh->boundary_vertex[i])
        EXPECT_EQ(s.u.values[Eigen::Index(i)], 0.0);
      else
        EXPECT_GT(s.u.values[Eigen::Index(i)], 0.0);
    }
  }
}

TEST(Newton, ResidualIsFunctionalGradient) {
  auto mesh = disk_mesh(0.1);
  const double p = 3.0;
  const SparseSymMatrix K = assemble_stiffness(*mesh);
  Eigen::VectorXd u = liouville_guess(mesh, p, {0.1, 0.0}).values;
  const Eigen::VectorXd r = K * u - assemble_power_load(*mesh, u, p).load;
  std::mt19937 rng(7);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd d(u.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = mesh->boundary_vertex[std::size_t(i)] ? 0.0 : normal(rng);
    const double t = 1e-6;
    const double fd = (lane_emden_functional(*mesh, K, u + t * d, p) - lane_emden_functional(*mesh, K, u - t * d, p)) / (2 * t);
    EXPECT_NEAR(fd / r.dot(d), 1.0, 1e-5);
  }
}

TEST(Continuation, EmptyAndInvalidInput) {
  EXPECT_TRUE(continuation_sweep(DomainSpec::unit_disk(), {}, 0.1).solutions.empty());
  expect_kind(ErrorKind::InvalidArgument, [] { continuation_sweep(DomainSpec::unit_disk(), {6, 8}, 0.1); });
  expect_kind(ErrorKind::InvalidArgument, [] { continuation_sweep(DomainSpec::unit_disk(), {4, 3}, 0.1); });
}

TEST(Continuation, FailureCarriesExponent) {
  ContinuationOptions o;
  o.newton.max_iterations = 1;
  try {
    continuation_sweep(DomainSpec::unit_disk(), {3, 4}, 0.1, o);
    ADD_FAILURE() << "sweep should fail";
  } catch (const LabError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MaxIterations);
    EXPECT_NE(std::string(e.what()).find("p = 3"), std::string::npos) << e.what();
  }
}

TEST_F(DiskBranch, UmaxTracksRadialOracle) {
  ASSERT_EQ(branch_->solutions.size(), 5u);
  for (const auto& s : branch_->solutions) {
    EXPECT_NEAR(s.u_max / oracle(s.p).u0, 1.0, 1e-2) << "p = " << s.p;
    EXPECT_LE(s.residual_norm, 1e-10);
  }
  for (std::size_t i = 1; i < branch_->solutions.size(); ++i) {
    EXPECT_GT(branch_->solutions[i].p, branch_->solutions[i - 1].p);
    EXPECT_LT(branch_->solutions[i].u_max, branch_->solutions[i - 1].u_max);
  }
}

TEST_F(DiskBranch, EnergyBoundedNearQuantum) {
  for (const auto& s : branch_->solutions) {
    if (s.p < 20) continue;
    EXPECT_GE(s.energy, 0.5 * k8PiE);
    EXPECT_LE(s.energy, 1.5 * k8PiE);
  }
}

TEST_F(DiskBranch, StepsRespectEpsCapAndRemeshRule) {
  const double cap = -4.0 * std::log(0.7);
  for (const auto& st : branch_->steps) EXPECT_LE(st.dp, cap + 1e-12);
  EXPECT_GT(branch_->remesh_events, 0);
  for (const auto& s : branch_->solutions)
    EXPECT_LE(local_h(s.mesh(), s.x_n, 0.0), 0.25 * s.eps_n * 1.5) << "p = " << s.p;
}

TEST_F(DiskBranch, SinglePeak) {
  for (const auto& s : branch_->solutions) {
    EXPECT_EQ(detect_peaks(s).size(), 1u) << "p = " << s.p;
    EXPECT_TRUE(detect_peaks(s, 2.0 * s.u_max).empty());
  }
}

TEST_F(DiskBranch, RescaledProfileApproachesLiouville) {
  const RescaledField w80 = rescale_solution(at(80), 6.0, 61);
  const RescaledField w20 = rescale_solution(at(20), 6.0, 61);
  EXPECT_EQ(w80.at(30, 30), 0.0);
  for (double v : w80.w) EXPECT_LE(v, 1e-3 * 80);
  const double d80 = rescaled_deficit(w80, 5.0);
  const double d20 = rescaled_deficit(w20, 5.0);
  EXPECT_LE(d80, 0.2);
  EXPECT_GE(d20, d80);
}

TEST_F(DiskBranch, RecoveredPeakRefinesTheVertexMaximum) {
  double prev = 1e300;
  for (double p : {20.0, 40.0, 80.0}) {
    const Solution& s = at(p);
    const double u0 = oracle(p).u0;
    EXPECT_GE(s.peak_value, s.u_max);
    EXPECT_LE(std::abs(s.peak_value - u0), std::abs(s.u_max - u0)) << "p = " << p;
    EXPECT_LE(distance(s.peak, s.x_n), local_h(s.mesh(), s.x_n, 0.0)) << "p = " << p;
    const double d = rescaled_deficit(rescale_solution(s, 5.0, 41), 5.0);
    EXPECT_LT(d, prev) << "p = " << p;
    prev = d;
  }
}

TEST_F(DiskBranch, RescaleRejectsLargeBall) {
  const Solution& s = at(5);
  expect_kind(ErrorKind::BallEscapesDomain, [&] { rescale_solution(s, 2.0 / s.eps_n, 11); });
}

TEST_F(DiskBranch, JsonFields) {
  const auto j = to_json(at(10));
  for (const char* key : {"p", "u_max", "x_n", "peak", "peak_value", "eps_n", "energy", "residual_norm", "mesh_id", "u"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["u"].size(), at(10).mesh().vertices.size());
  EXPECT_FALSE(to_json(at(10), false).contains("u"));
}

TEST(Continuation, SquarePeakStaysAtCenter) {
  const double h = 0.05;
  const Branch b = continuation_sweep(DomainSpec::rectangle(1, 1), {5, 10, 20, 40}, h);
  ASSERT_EQ(b.solutions.size(), 4u);
  for (const auto& s : b.solutions) EXPECT_LE(distance(s.x_n, {0.5, 0.5}), 2 * h) << "p = " << s.p;
}

TEST(Peaks, TwoBubbleField) {
  auto mesh = disk_mesh(0.03);
  Eigen::VectorXd v(Eigen::Index(mesh->vertices.size()));
  for (std::size_t i = 0; i < mesh->vertices.size(); ++i) {
    const Point2 x = mesh->vertices[i];
    v[Eigen::Index(i)] = std::exp(-std::pow(distance(x, Point2{-0.4, 0}), 2) / 0.01) + 0.9 * std::exp(-std::pow(distance(x, Point2{0.4, 0}), 2) / 0.01);
  }
  Solution s;
  s.p = 3;
  s.u = ScalarField(mesh, v);
  s.u_max = v.maxCoeff();
  s.eps_n = 0.01;
  const auto peaks = detect_peaks(s);
  ASSERT_EQ(peaks.size(), 2u);
  EXPECT_LT(peaks[0].x, 0.0);
  EXPECT_GT(peaks[1].x, 0.0);
}
