#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lelab/errors.hpp"
#include "lelab/fem.hpp"

using namespace lelab;

namespace {

TriMesh right_triangle() {
  TriMesh m;
  m.domain = DomainSpec::polygon({{0, 0}, {1, 0}, {0, 1}});
  m.vertices = {{0, 0}, {1, 0}, {0, 1}};
  m.triangles = {{0, 1, 2}};
  m.rebuild_boundary();
  return m;
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Exact integral of l0^a l1^b l2^c over a triangle of the given area.
double monomial(double area, int a, int b, int c) {
  return 2.0 * area * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2);
}

}  // namespace

TEST(Stiffness, HandIntegratedRightTriangle) {
  auto K = assemble_stiffness(right_triangle());
  const double expect[3][3] = {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(K.coeff(i, j), expect[i][j], 1e-15);
}

TEST(Stiffness, ConstantKernelAndSymmetry) {
  auto mesh = build_mesh(DomainSpec::ellipse(2, 1), 0.2);
  auto K = assemble_stiffness(mesh);
  Eigen::VectorXd one = Eigen::VectorXd::Ones(K.rows());
  EXPECT_LT((K * one).cwiseAbs().maxCoeff(), 1e-12);
  SparseSymMatrix Kt = K.transpose();
  EXPECT_EQ((K - Kt).norm(), 0.0);
}

TEST(Stiffness, DegenerateTriangle) {
  TriMesh m = right_triangle();
  m.vertices[2] = {0.5, 1e-15};
  try {
    assemble_stiffness(m);
    FAIL();
  } catch (const LabError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateTriangle);
  }
}

TEST(Mass, TotalsAndBilinearity) {
  auto mesh = build_mesh(DomainSpec::rectangle(1, 1), 0.1);
  auto M = assemble_mass(mesh);
  EXPECT_NEAR(M.sum(), 1.0, 1e-10);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(M.rows());
  EXPECT_EQ(assemble_mass(mesh, &zero).nonZeros() == 0 || assemble_mass(mesh, &zero).norm() == 0.0, true);
  Eigen::VectorXd two = Eigen::VectorXd::Constant(M.rows(), 2.0);
  SparseSymMatrix M2 = assemble_mass(mesh, &two);
  EXPECT_EQ((M2 - 2.0 * M).norm(), 0.0);
  Eigen::VectorXd neg = two;
  neg[3] = -1.0;
  try {
    assemble_mass(mesh, &neg);
    FAIL();
  } catch (const LabError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NegativeWeight);
  }
  EXPECT_NEAR(lumped_mass(mesh).sum(), 1.0, 1e-12);
}

TEST(Mass, ElementMatrixExact) {
  auto M = assemble_mass(right_triangle());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(M.coeff(i, j), (i == j ? 2.0 : 1.0) / 24.0, 1e-15);
}

TEST(PowerLoad, ZeroOneAndHomogeneity) {
  auto mesh = build_mesh(DomainSpec::unit_disk(), 0.2);
  const auto n = Eigen::Index(mesh.vertices.size());
  EXPECT_EQ(assemble_power_load(mesh, Eigen::VectorXd::Zero(n), 3.0).load.norm(), 0.0);
  auto M = assemble_mass(mesh);
  Eigen::VectorXd rows = M * Eigen::VectorXd::Ones(n);
  Eigen::VectorXd f1 = assemble_power_load(mesh, Eigen::VectorXd::Ones(n), 7.3).load;
  EXPECT_LT((f1 - rows).cwiseAbs().maxCoeff(), 1e-14);
  const double c = 1.3, p = 5.5;
  Eigen::VectorXd fc = assemble_power_load(mesh, Eigen::VectorXd::Constant(n, c), p).load;
  EXPECT_LT((fc - std::pow(c, p) * f1).cwiseAbs().maxCoeff(), 1e-12 * fc.cwiseAbs().maxCoeff());
}

TEST(PowerLoad, ClampAndOverflow) {
  auto mesh = build_mesh(DomainSpec::rectangle(1, 1), 0.25);
  Eigen::VectorXd u = Eigen::VectorXd::Ones(Eigen::Index(mesh.vertices.size()));
  u[0] = -1.0;
  u[1] = -0.5;
  EXPECT_EQ(assemble_power_load(mesh, u, 2.0).clamped_nodes, 2u);
  u.setConstant(1e200);
  try {
    assemble_power_load(mesh, u, 3.0);
    FAIL();
  } catch (const LabError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Overflow);
  }
}

TEST(PowerLoad, ExactForIntegerPowers) {
  auto mesh = right_triangle();
  const double area = 0.5;
  Eigen::VectorXd u(3);
  u << 0.7, 1.9, 0.4;
  for (int p : {2, 3}) {
    Eigen::VectorXd f = assemble_power_load(mesh, u, double(p)).load;
    // Expand (sum u_k l_k)^p l_i with the multinomial theorem.
    for (int i = 0; i < 3; ++i) {
      double exact = 0.0;
      for (int a = 0; a <= p; ++a)
        for (int b = 0; a + b <= p; ++b) {
          const int c = p - a - b;
          int e[3] = {a, b, c};
          e[i] += 1;
          const double coef = factorial(p) / (factorial(a) * factorial(b) * factorial(c));
          exact += coef * std::pow(u[0], a) * std::pow(u[1], b) * std::pow(u[2], c) *
                   monomial(area, e[0], e[1], e[2]);
        }
      EXPECT_NEAR(f[i], exact, 1e-12) << "p=" << p << " i=" << i;
    }
  }
}

TEST(Dirichlet, ZeroRhsAndLinearity) {
  auto mesh = std::make_shared<const TriMesh>(build_mesh(DomainSpec::unit_disk(), 0.1));
  auto K = assemble_stiffness(*mesh);
  const auto n = K.rows();
  EXPECT_EQ(solve_dirichlet(K, Eigen::VectorXd::Zero(n), mesh).values.norm(), 0.0);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1, 1);
  Eigen::VectorXd rhs(n);
  for (auto& x : rhs) x = U(rng);
  DirichletSystem sys(*mesh, K);
  Eigen::VectorXd a = sys.solve(rhs), b = sys.solve(3.7 * rhs);
  EXPECT_LT((b - 3.7 * a).cwiseAbs().maxCoeff(), 1e-12 * b.cwiseAbs().maxCoeff());
  for (std::size_t i = 0; i < mesh->vertices.size(); ++i)
    if (mesh->boundary_vertex[i]) EXPECT_EQ(a[Eigen::Index(i)], 0.0);
  // Interior residual.
  Eigen::VectorXd r = K * a - rhs;
  double rmax = 0.0;
  for (int i : sys.interior()) rmax = std::max(rmax, std::abs(r[i]));
  EXPECT_LE(rmax, 1e-10 * rhs.norm());
}

TEST(Dirichlet, DiskTorsionConvergesQuadratically) {
  std::vector<double> err;
  for (double h : {0.1, 0.05, 0.025}) {
    auto mesh = std::make_shared<const TriMesh>(build_mesh(DomainSpec::unit_disk(), h));
    auto K = assemble_stiffness(*mesh);
    auto M = assemble_mass(*mesh);
    Eigen::VectorXd rhs = M * Eigen::VectorXd::Ones(K.rows());
    auto u = solve_dirichlet(K, rhs, mesh);
    EXPECT_GE(u.values.minCoeff(), -1e-10);
    err.push_back(std::abs(u[0] - 0.25));
  }
  EXPECT_LT(err[0], 5e-4);
  // Pointwise P1 error behaves like h^2 log(1/h): ratios climb toward 4 from below.
  const double r1 = err[0] / err[1], r2 = err[1] / err[2];
  EXPECT_GE(r1, 3.2);
  EXPECT_LE(r2, 4.5);
  EXPECT_GT(r2, r1);
}

TEST(Dirichlet, PrescribedBoundaryValuesReproduceHarmonic) {
  auto mesh = build_mesh(DomainSpec::rectangle(1, 1), 0.1);
  auto K = assemble_stiffness(mesh);
  DirichletSystem sys(mesh, K);
  Eigen::VectorXd g(K.rows());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) g[Eigen::Index(i)] = 1.0 + 2 * mesh.vertices[i].x - mesh.vertices[i].y;
  Eigen::VectorXd x = sys.solve(Eigen::VectorXd::Zero(K.rows()), g);
  EXPECT_LT((x - g).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BoundaryFlux, TorsionNormalDerivative) {
  auto mesh = build_mesh(DomainSpec::unit_disk(), 0.05);
  auto K = assemble_stiffness(mesh);
  auto M = assemble_mass(mesh);
  Eigen::VectorXd f = M * Eigen::VectorXd::Ones(K.rows());
  DirichletSystem sys(mesh, K);
  Eigen::VectorXd u = sys.solve(f);
  BoundaryFlux flux(mesh);
  Eigen::VectorXd q = flux(K, u, f);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    if (mesh.boundary_vertex[i]) EXPECT_NEAR(q[Eigen::Index(i)], -0.5, 1.5e-2);
  // Gauss: the total flux equals -|Omega| for the discrete problem.
  const double total = boundary_integral(mesh, [&](Point2, Point2, int a, int b, double s) {
    return (1 - s) * q[a] + s * q[b];
  });
  EXPECT_NEAR(total, -mesh.area(), 1e-10);
}

TEST(Functional, GradientMatchesResidual) {
  auto mesh = build_mesh(DomainSpec::unit_disk(), 0.2);
  auto K = assemble_stiffness(mesh);
  const double p = 4.0;
  Eigen::VectorXd u(K.rows());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) u[Eigen::Index(i)] = 1.5 * (1 - dot(mesh.vertices[i], mesh.vertices[i]));
  Eigen::VectorXd grad = K * u - assemble_power_load(mesh, u, p).load;
  Eigen::VectorXd dir = Eigen::VectorXd::LinSpaced(u.size(), -1, 1);
  const double h = 1e-6;
  const double fd = (lane_emden_functional(mesh, K, u + h * dir, p) - lane_emden_functional(mesh, K, u - h * dir, p)) / (2 * h);
  EXPECT_NEAR(fd, grad.dot(dir), 1e-6 * std::abs(grad.dot(dir)));
}
