#include "lelab/asymptotics.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lelab/errors.hpp"

namespace lelab {

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrtE = std::sqrt(std::numbers::e);
const double k8PiE = 8.0 * kPi * std::numbers::e;
const double kOddPeak = 1.0 / (2.0 * std::sqrt(8.0));

double rel_gap(double computed, double predicted) {
  return std::abs(computed - predicted) / std::abs(predicted);
}

}  // namespace

double liouville_U(Point2 y) { return -2.0 * std::log1p(dot(y, y) / 8.0); }

double e_U_ball_integral(double R) { return 8.0 * kPi * R * R / (8.0 + R * R); }

double e_U_ball_quadrature(double R, int angular_points) {
  require(R >= 0.0 && angular_points >= 3, ErrorKind::InvalidArgument, "need R >= 0 and >= 3 angles");
  double total = 0.0;
  for (int k = 0; k < angular_points; ++k) {
    const double th = 2.0 * kPi * k / angular_points;
    const Point2 dir{std::cos(th), std::sin(th)};
    auto radial = [&](double r) { return std::exp(liouville_U(dir * r)) * r; };
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(radial, 0.0, R, 15, 1e-14);
  }
  return total * 2.0 * kPi / angular_points;
}

double KernelFit::a_norm() const { return std::hypot(a1, a2) * kOddPeak; }
double KernelFit::b_norm() const { return std::abs(b); }

KernelFit fit_kernel(const RescaledField& f, double R_fit) {
  require(R_fit >= 3.0 && R_fit <= 10.0, ErrorKind::InvalidArgument, "R_fit must lie in [3, 10]");
  std::vector<std::array<double, 4>> rows;
  for (int i = 0; i < f.n; ++i)
    for (int j = 0; j < f.n; ++j) {
      const double y1 = f.coords[std::size_t(j)], y2 = f.coords[std::size_t(i)];
      const double r2 = y1 * y1 + y2 * y2;
      if (r2 > R_fit * R_fit) continue;
      rows.push_back({y1 / (8 + r2), y2 / (8 + r2), (8 - r2) / (8 + r2), f.at(i, j)});
    }
  Eigen::MatrixXd A(Eigen::Index(rows.size()), 3);
  Eigen::VectorXd v(Eigen::Index(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < 3; ++c) A(Eigen::Index(r), c) = rows[r][std::size_t(c)];
    v[Eigen::Index(r)] = rows[r][3];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (rows.size() < 3 || qr.rank() < 3) fail(ErrorKind::RankDeficient, "sample grid too coarse for the kernel basis");
  const Eigen::Vector3d c = qr.solve(v);
  KernelFit out;
  out.a1 = c[0];
  out.a2 = c[1];
  out.b = c[2];
  out.samples = rows.size();
  const double vn = v.norm();
  out.rel_residual = vn > 0 ? std::min(1.0, (A * c - v).norm() / vn) : 0.0;
  return out;
}

RescaledField rescale_field(const ScalarField& field, Point2 center, double eps, double R, int grid_n) {
  require(R > 0.0 && eps > 0.0 && grid_n >= 2, ErrorKind::InvalidArgument, "need R, eps > 0 and 2 grid points");
  MeshLocator loc(*field.mesh);
  RescaledField f;
  f.R = R;
  f.n = grid_n;
  for (int i = 0; i < grid_n; ++i) f.coords.push_back(-R + 2.0 * R * i / (grid_n - 1));
  f.w.resize(std::size_t(grid_n * grid_n));
  for (int i = 0; i < grid_n; ++i)
    for (int j = 0; j < grid_n; ++j) {
      const Point2 y{f.coords[std::size_t(j)], f.coords[std::size_t(i)]};
      const auto v = loc.interpolate_vec(field.values, center + y * eps);
      require(v.has_value(), ErrorKind::BallEscapesDomain, "rescaled window leaves the mesh");
      f.w[std::size_t(i * grid_n + j)] = *v;
    }
  return f;
}

PredictionReport predict(const Solution& sol, const RobinData& robin) {
  PredictionReport r;
  r.p = sol.p;
  r.eps = sol.eps_n;
  r.mu1 = robin.mu1;
  r.mu2 = robin.mu2;
  const double e2 = sol.eps_n * sol.eps_n;
  r.lambda2_hat = 1.0 + 24.0 * kPi * e2 * robin.mu1;
  r.lambda3_hat = 1.0 + 24.0 * kPi * e2 * robin.mu2;
  r.lambda4_hat = 1.0 + 6.0 / sol.p;
  r.u_max = sol.u_max;
  r.energy = sol.energy;
  r.energy_gap = std::abs(sol.energy - k8PiE) / k8PiE;
  r.u_max_gap = std::abs(sol.u_max - kSqrtE);
  return r;
}

void attach_spectrum(PredictionReport& rep, const SpectrumReport& s) {
  require(s.eigenvalues.size() >= 4, ErrorKind::InvalidArgument, "need at least four eigenvalues");
  rep.lambda2 = s.eigenvalues[1];
  rep.lambda3 = s.eigenvalues[2];
  rep.lambda4 = s.eigenvalues[3];
  rep.lambda2_gap = rel_gap(*rep.lambda2 - 1.0, rep.lambda2_hat - 1.0);
  rep.lambda3_gap = rel_gap(*rep.lambda3 - 1.0, rep.lambda3_hat - 1.0);
  rep.lambda4_gap = rel_gap(*rep.lambda4 - 1.0, rep.lambda4_hat - 1.0);
}

namespace {

// sup |v - fit| / sup |fit| after least squares of v onto the given columns.
double shape_deviation(const Eigen::MatrixXd& basis, const Eigen::VectorXd& v, Eigen::VectorXd* coef = nullptr) {
  const Eigen::VectorXd c = basis.colPivHouseholderQr().solve(v);
  const Eigen::VectorXd fit = basis * c;
  if (coef) *coef = c;
  const double scale = fit.cwiseAbs().maxCoeff();
  return scale > 0 ? (v - fit).cwiseAbs().maxCoeff() / scale : std::numeric_limits<double>::infinity();
}

}  // namespace

FarFieldReport far_field_check(const Solution& sol, const RobinSolver& green, Point2 x_inf,
                               const SpectrumReport* spectrum) {
  const TriMesh& mesh = sol.mesh();
  const DomainSpec& domain = mesh.domain;
  FarFieldReport out;
  out.inner = 0.25 * domain.diameter();
  out.outer = 0.45 * domain.diameter();
  if (!domain.contains(x_inf) || domain.distance_to_boundary(x_inf) < out.outer)
    fail(ErrorKind::AnnulusEscapesDomain, "the far-field annulus leaves the domain");

  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const double r = distance(mesh.vertices[i], x_inf);
    if (r >= out.inner && r <= out.outer) idx.push_back(i);
  }
  require(!idx.empty(), ErrorKind::AnnulusEscapesDomain, "no mesh vertices in the far-field annulus");
  out.samples = idx.size();

  const Eigen::VectorXd H = green.regular_part(x_inf);
  const Eigen::Index n = Eigen::Index(idx.size());
  Eigen::VectorXd G(n), u(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Point2 x = mesh.vertices[idx[std::size_t(k)]];
    G[k] = green.green(x, x_inf, H);
    u[k] = sol.p * sol.u[idx[std::size_t(k)]] / (8.0 * kPi * kSqrtE);
  }
  out.u_deviation = (u - G).cwiseAbs().maxCoeff() / G.cwiseAbs().maxCoeff();

  if (spectrum && spectrum->eigenfields.size() >= 4) {
    auto sample = [&](const ScalarField& f) {
      Eigen::VectorXd v(n);
      for (Eigen::Index k = 0; k < n; ++k) v[k] = f[idx[std::size_t(k)]];
      return v;
    };
    Eigen::VectorXd c;
    out.v4_deviation = shape_deviation(G, sample(spectrum->max_normalized[3]), &c);
    out.v4_scale = c[0];
    Eigen::MatrixXd dG(n, 2);
    for (int j = 0; j < 2; ++j) {
      const Eigen::VectorXd dH = green.regular_part_dy(x_inf, j);
      for (Eigen::Index k = 0; k < n; ++k) dG(k, j) = green.green_dy(mesh.vertices[idx[std::size_t(k)]], x_inf, j, dH);
    }
    out.v23_deviation = std::max(shape_deviation(dG, sample(spectrum->max_normalized[1])),
                                 shape_deviation(dG, sample(spectrum->max_normalized[2])));
  }
  return out;
}

Extrapolation extrapolate(const std::vector<double>& p, const std::vector<double>& values) {
  require(p.size() == values.size(), ErrorKind::InvalidArgument, "p and values differ in length");
  std::vector<double> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  const bool distinct = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
  if (p.size() < 3 || !distinct) fail(ErrorKind::InsufficientData, "need at least three values at distinct p");
  const int terms = p.size() >= 4 ? 3 : 2;
  Eigen::MatrixXd A(Eigen::Index(p.size()), terms);
  Eigen::VectorXd b(Eigen::Index(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (int c = 0; c < terms; ++c) A(Eigen::Index(i), c) = std::pow(1.0 / p[i], c);
    b[Eigen::Index(i)] = values[i];
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  Extrapolation e;
  e.limit = c[0];
  e.coefficients.assign(c.data(), c.data() + c.size());
  e.residual = (A * c - b).norm() / std::sqrt(double(p.size()));
  return e;
}

SandwichVerdict morse_sandwich_check(const MorseCount& counts, double mu1, double mu2) {
  const double zero = 1e-8 * std::abs(mu2);
  SandwichVerdict v;
  for (double mu : {mu1, mu2}) {
    if (mu < -zero) ++v.m_x;
    if (mu <= zero) ++v.m0_x;
  }
  v.m = counts.m;
  v.m0 = counts.m0;
  v.holds = 1 + v.m_x <= v.m && v.m <= v.m0 && v.m0 <= 1 + v.m0_x && 1 + v.m0_x <= 2;
  return v;
}

SandwichVerdict morse_sandwich_check(const SpectrumReport& spectrum, const RobinData& robin) {
  return morse_sandwich_check(morse_index(spectrum), robin.mu1, robin.mu2);
}

bool non_increasing(const std::vector<double>& gaps, int inversions) {
  int seen = 0;
  for (std::size_t i = 1; i < gaps.size(); ++i)
    if (gaps[i] > gaps[i - 1]) ++seen;
  return seen <= inversions;
}

namespace {

void put(nlohmann::json& j, const char* key, const std::optional<double>& v) {
  if (v) j[key] = *v;
}

}  // namespace

nlohmann::json to_json(const PredictionReport& r) {
  nlohmann::json j;
  j["p"] = r.p;
  j["eps"] = r.eps;
  j["mu1"] = r.mu1;
  j["mu2"] = r.mu2;
  j["lambda2_hat"] = r.lambda2_hat;
  j["lambda3_hat"] = r.lambda3_hat;
  j["lambda4_hat"] = r.lambda4_hat;
  put(j, "lambda2", r.lambda2);
  put(j, "lambda3", r.lambda3);
  put(j, "lambda4", r.lambda4);
  put(j, "lambda2_gap", r.lambda2_gap);
  put(j, "lambda3_gap", r.lambda3_gap);
  put(j, "lambda4_gap", r.lambda4_gap);
  j["u_max"] = r.u_max;
  j["energy"] = r.energy;
  j["energy_gap"] = r.energy_gap;
  j["u_max_gap"] = r.u_max_gap;
  put(j, "far_field_deviation", r.far_field_deviation);
  return j;
}

nlohmann::json to_json(const KernelFit& f) {
  return {{"a1", f.a1}, {"a2", f.a2}, {"b", f.b}, {"rel_residual", f.rel_residual}, {"samples", f.samples}};
}

nlohmann::json to_json(const FarFieldReport& f) {
  nlohmann::json j{{"u_deviation", f.u_deviation}, {"samples", f.samples}, {"inner", f.inner}, {"outer", f.outer}};
  put(j, "v4_deviation", f.v4_deviation);
  put(j, "v4_scale", f.v4_scale);
  put(j, "v23_deviation", f.v23_deviation);
  return j;
}

nlohmann::json to_json(const SandwichVerdict& v) {
  return {{"m_x", v.m_x}, {"m0_x", v.m0_x}, {"m", v.m}, {"m0", v.m0}, {"holds", v.holds}};
}

void write_sweep_csv(std::ostream& os, const std::vector<PredictionReport>& rows,
                     const std::vector<std::vector<double>>& eigenvalues) {
  require(rows.size() == eigenvalues.size(), ErrorKind::InvalidArgument, "one eigenvalue list per row");
  os << kSweepCsvHeader << '\n';
  os.precision(12);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << r.p << ',' << r.u_max << ',' << r.energy;
    for (std::size_t k = 0; k < 4; ++k) {
      os << ',';
      if (k < eigenvalues[i].size()) os << eigenvalues[i][k];
    }
    os << ',' << r.lambda2_hat << ',' << r.lambda3_hat << ',' << r.lambda4_hat << ',' << r.energy_gap << ','
       << r.u_max_gap << '\n';
  }
}

}  // namespace lelab
