#include "lelab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "lelab/errors.hpp"

namespace lelab {

namespace {

constexpr double kLogFlush = -700.0;
constexpr double kDegenerateFraction = 0.999;
constexpr double kAcceptResidual = 1e-8;

double interp(const Eigen::VectorXd& v, const std::array<int, 3>& tri, const std::array<double, 3>& b) {
  const double v0 = v[tri[0]];
  return v0 + b[1] * (v[tri[1]] - v0) + b[2] * (v[tri[2]] - v0);
}

// p u^{p-1} in log space, flushed to zero below e^-700.
double weight(double u, double p) {
  if (u <= 0.0) return 0.0;
  const double e = std::log(p) + (p - 1.0) * std::log(u);
  return e < kLogFlush ? 0.0 : std::exp(e);
}

void check_weight(const Solution& sol) {
  const TriMesh& mesh = sol.mesh();
  const Eigen::VectorXd lm = lumped_mass(mesh);
  double zero_area = 0.0;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    if (weight(sol.u[i], sol.p) == 0.0) zero_area += lm[Eigen::Index(i)];
  if (zero_area > kDegenerateFraction * lm.sum())
    fail(ErrorKind::WeightDegenerate, "p u^{p-1} vanishes on more than 99.9% of the domain");
}

// Columns of Y made K-orthonormal by Gram-Schmidt with one reorthogonalization.
// Columns that collapse are replaced by fresh random vectors.
Eigen::MatrixXd k_orthonormalize(Eigen::MatrixXd Y, const SparseSymMatrix& K, const std::vector<int>& interior,
                                 std::mt19937& rng) {
  std::normal_distribution<double> normal;
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    for (int attempt = 0; attempt < 3; ++attempt) {
      const double before = std::sqrt(std::max(0.0, Y.col(j).dot(K * Y.col(j))));
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXd Kc = K * Y.col(j);
        for (Eigen::Index i = 0; i < j; ++i) Y.col(j) -= Y.col(i).dot(Kc) * Y.col(i);
      }
      const double nrm = std::sqrt(std::max(0.0, Y.col(j).dot(K * Y.col(j))));
      if (nrm > 1e-10 * before && nrm > 0.0) {
        Y.col(j) /= nrm;
        break;
      }
      Y.col(j).setZero();
      for (int r : interior) Y(r, j) = normal(rng);
    }
  }
  return Y;
}

double interior_norm(const Eigen::VectorXd& r, const std::vector<int>& interior) {
  double s = 0.0;
  for (int i : interior) s += r[i] * r[i];
  return std::sqrt(s);
}

ScalarField max_normalize(const ScalarField& v) {
  Eigen::Index imax = 0;
  v.values.cwiseAbs().maxCoeff(&imax);
  const double peak = v.values[imax];
  return ScalarField(v.mesh, v.values / peak);
}

}  // namespace

SpectrumReport linearized_spectrum(const Solution& sol, const SpectrumOptions& opts) {
  require(opts.count >= 1 && opts.guard >= 0, ErrorKind::InvalidArgument, "need count >= 1 and guard >= 0");
  const TriMesh& mesh = sol.mesh();
  const double p = sol.p;
  check_weight(sol);

  const SparseSymMatrix K = assemble_stiffness(mesh);
  const SparseSymMatrix B = assemble_linearized_mass(mesh, sol.u.values, p);
  const DirichletSystem sys(mesh, K);
  const auto& interior = sys.interior();
  const Eigen::Index n = Eigen::Index(mesh.vertices.size());
  const int count = std::min<int>(opts.count, int(interior.size()));
  const int block = std::min<int>(count + opts.guard, int(interior.size()));

  std::mt19937 rng(opts.seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, block);
  X.col(0) = sol.u.values;
  for (int j = 1; j < block; ++j)
    for (int r : interior) X(r, j) = normal(rng);

  SpectrumReport rep;
  rep.p = p;
  rep.delta = opts.delta.value_or(10.0 / (p * p));
  Eigen::MatrixXd V;
  Eigen::VectorXd mu;
  double worst = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iterations; ++it) {
    Eigen::MatrixXd Y(n, block);
    for (int j = 0; j < block; ++j) Y.col(j) = sys.solve(B * X.col(j));
    const Eigen::MatrixXd Q = k_orthonormalize(std::move(Y), K, interior, rng);
    const Eigen::MatrixXd Bq = Q.transpose() * (B * Q);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Bq + Bq.transpose()));
    if (es.info() != Eigen::Success) fail(ErrorKind::EigenFailure, "Rayleigh-Ritz eigensolve failed");
    // Descending mu is ascending lambda.
    mu = es.eigenvalues().reverse();
    V = Q * es.eigenvectors().rowwise().reverse();
    rep.iterations = it;

    worst = 0.0;
    rep.residuals.assign(std::size_t(count), 0.0);
    for (int j = 0; j < count; ++j) {
      if (!(mu[j] > 0.0)) {
        worst = std::numeric_limits<double>::infinity();
        break;
      }
      const Eigen::VectorXd Kv = K * V.col(j);
      const Eigen::VectorXd r = Kv - (1.0 / mu[j]) * (B * V.col(j));
      rep.residuals[std::size_t(j)] = interior_norm(r, interior) / interior_norm(Kv, interior);
      worst = std::max(worst, rep.residuals[std::size_t(j)]);
    }
    if (worst <= opts.tol) break;
    X = V;
  }
  if (!(worst <= kAcceptResidual))
    fail(ErrorKind::EigenFailure, "subspace iteration stagnated at relative residual " + std::to_string(worst));

  auto field_ptr = sol.u.mesh;
  for (int j = 0; j < count; ++j) {
    Eigen::VectorXd v = V.col(j) / std::sqrt(mu[j]);  // v^T K v = 1 so v^T B v = mu
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0.0) v = -v;
    rep.eigenvalues.push_back(1.0 / mu[j]);
    rep.eigenfields.emplace_back(field_ptr, v);
    rep.max_normalized.push_back(max_normalize(rep.eigenfields.back()));
  }
  const MorseCount mc = morse_index(rep);
  rep.morse = mc.m;
  rep.augmented = mc.m0;
  return rep;
}

std::vector<double> dense_spectrum(const Solution& sol, int count, std::size_t max_dofs) {
  const TriMesh& mesh = sol.mesh();
  const SparseSymMatrix K = assemble_stiffness(mesh);
  const SparseSymMatrix B = assemble_linearized_mass(mesh, sol.u.values, sol.p);
  std::vector<int> interior;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    if (!mesh.boundary_vertex[i]) interior.push_back(int(i));
  require(interior.size() <= max_dofs, ErrorKind::InvalidArgument,
          "dense reference limited to " + std::to_string(max_dofs) + " unknowns");
  const Eigen::Index m = Eigen::Index(interior.size());
  const Eigen::MatrixXd Kd = Eigen::MatrixXd(K)(interior, interior);
  const Eigen::MatrixXd Bd = Eigen::MatrixXd(B)(interior, interior);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Bd, Kd, Eigen::EigenvaluesOnly);
  if (ges.info() != Eigen::Success) fail(ErrorKind::EigenFailure, "dense generalized eigensolve failed");
  std::vector<double> lambda;
  for (Eigen::Index j = m - 1; j >= 0 && Eigen::Index(lambda.size()) < count; --j)
    if (ges.eigenvalues()[j] > 0.0) lambda.push_back(1.0 / ges.eigenvalues()[j]);
  return lambda;
}

MorseCount morse_index(const std::vector<double>& eigenvalues, double delta) {
  MorseCount mc;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    const double l = eigenvalues[i];
    if (l < 1.0 - delta) ++mc.m;
    if (l <= 1.0 + delta) ++mc.m0;
    if (std::abs(l - 1.0) <= delta) mc.near_degenerate.push_back(int(i));
  }
  return mc;
}

MorseCount morse_index(const SpectrumReport& report) { return morse_index(report.eigenvalues, report.delta); }

namespace {

struct Fluxes {
  Eigen::VectorXd du;  // du/dnu at boundary nodes
  Eigen::VectorXd dv;  // dv/dnu at boundary nodes
  double lambda = 0.0;
  const Eigen::VectorXd* v = nullptr;
};

Fluxes fluxes(const Solution& sol, const SpectrumReport& report, int i) {
  require(i >= 1 && i <= int(report.eigenvalues.size()), ErrorKind::InvalidArgument, "eigenpair index out of range");
  const TriMesh& mesh = sol.mesh();
  const SparseSymMatrix K = assemble_stiffness(mesh);
  const SparseSymMatrix B = assemble_linearized_mass(mesh, sol.u.values, sol.p);
  const BoundaryFlux flux(mesh);
  Fluxes f;
  f.lambda = report.eigenvalues[std::size_t(i - 1)];
  f.v = &report.eigenfields[std::size_t(i - 1)].values;
  f.du = flux(K, sol.u.values, assemble_power_load(mesh, sol.u.values, sol.p).load);
  f.dv = flux(K, *f.v, f.lambda * (B * *f.v));
  return f;
}

// (1 - lambda) p int u^{p-1} v g(x, grad u, u) over the domain.
template <class G>
double weighted_interior(const Solution& sol, const Eigen::VectorXd& v, double lambda, G&& g) {
  const TriMesh& mesh = sol.mesh();
  const auto& rule = triangle_rule();
  const auto& u = sol.u.values;
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto grads = hat_gradients(mesh, t);
    const Point2 gu = grads[0] * u[tri[0]] + grads[1] * u[tri[1]] + grads[2] * u[tri[2]];
    const Point2 P[3] = {mesh.vertices[std::size_t(tri[0])], mesh.vertices[std::size_t(tri[1])],
                         mesh.vertices[std::size_t(tri[2])]};
    const double area = mesh.signed_area(t);
    for (const auto& q : rule) {
      const double uq = interp(u, tri, q.bary);
      const double w = weight(uq, sol.p);
      if (w == 0.0) continue;
      const Point2 x = P[0] * q.bary[0] + P[1] * q.bary[1] + P[2] * q.bary[2];
      total += q.weight * area * w * interp(v, tri, q.bary) * g(x, gu, uq);
    }
  }
  return (1.0 - lambda) * total;
}

double edge_interp(const Eigen::VectorXd& f, int i0, int i1, double s) { return (1.0 - s) * f[i0] + s * f[i1]; }

}  // namespace

IdentityCheck pohozaev_residual(const Solution& sol, const SpectrumReport& report, int i, Point2 y) {
  const Fluxes f = fluxes(sol, report, i);
  IdentityCheck c;
  // On the boundary grad u = (du/dnu) nu.
  c.lhs = boundary_integral(sol.mesh(), [&](Point2 x, Point2 nu, int i0, int i1, double s) {
    return dot(x - y, nu) * edge_interp(f.du, i0, i1, s) * edge_interp(f.dv, i0, i1, s);
  });
  const double p = sol.p;
  c.rhs = weighted_interior(sol, *f.v, f.lambda,
                            [&](Point2 x, Point2 gu, double uq) { return dot(x - y, gu) + 2.0 * uq / (p - 1.0); });
  c.rel_residual = std::abs(c.lhs - c.rhs) / (std::abs(c.lhs) + std::abs(c.rhs) + std::numeric_limits<double>::epsilon());
  return c;
}

IdentityCheck pohozaev_star(const Solution& sol, const SpectrumReport& report, int i, int j) {
  require(j == 0 || j == 1, ErrorKind::InvalidArgument, "direction must be 0 or 1");
  const Fluxes f = fluxes(sol, report, i);
  IdentityCheck c;
  c.lhs = boundary_integral(sol.mesh(), [&](Point2, Point2 nu, int i0, int i1, double s) {
    return (j == 0 ? nu.x : nu.y) * edge_interp(f.du, i0, i1, s) * edge_interp(f.dv, i0, i1, s);
  });
  c.rhs = weighted_interior(sol, *f.v, f.lambda, [&](Point2, Point2 gu, double) { return j == 0 ? gu.x : gu.y; });
  c.rel_residual = std::abs(c.lhs - c.rhs) / (std::abs(c.lhs) + std::abs(c.rhs) + std::numeric_limits<double>::epsilon());
  return c;
}

double collinearity_with_solution(const Solution& sol, const SpectrumReport& report) {
  require(!report.eigenfields.empty(), ErrorKind::InvalidArgument, "empty report");
  const SparseSymMatrix B = assemble_linearized_mass(sol.mesh(), sol.u.values, sol.p);
  const Eigen::VectorXd& v = report.eigenfields.front().values;
  const Eigen::VectorXd& u = sol.u.values;
  return std::abs(v.dot(B * u)) / std::sqrt(v.dot(B * v) * u.dot(B * u));
}

nlohmann::json to_json(const SpectrumReport& report, bool include_fields) {
  nlohmann::json j;
  j["p"] = report.p;
  j["delta"] = report.delta;
  j["eigenvalues"] = report.eigenvalues;
  j["residuals"] = report.residuals;
  j["morse_index"] = report.morse;
  j["augmented_index"] = report.augmented;
  j["near_degenerate"] = morse_index(report).near_degenerate;
  j["iterations"] = report.iterations;
  if (include_fields) {
    auto& arr = j["eigenfields"] = nlohmann::json::array();
    for (const auto& f : report.eigenfields) arr.push_back(std::vector<double>(f.values.begin(), f.values.end()));
  }
  return j;
}

}  // namespace lelab
