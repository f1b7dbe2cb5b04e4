#include "lelab/lane_emden.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "lelab/errors.hpp"
#include "lelab/green_robin.hpp"

namespace lelab {

namespace {

const double kSqrtE = std::sqrt(std::numbers::e);
constexpr std::size_t kMemory = 5;
constexpr double kTorsionExponent = 2.0;

double liouville(double r) { return -2.0 * std::log1p(r * r / 8.0); }

struct Residual {
  Eigen::VectorXd r;  // K u - F(u), zero on boundary rows
  double norm = 0.0;
  double load_norm = 0.0;
};

Residual residual(const TriMesh& mesh, const SparseSymMatrix& K, const Eigen::VectorXd& u, double p) {
  Residual out;
  const Eigen::VectorXd F = assemble_power_load(mesh, u, p).load;
  out.r = K * u - F;
  double fn = 0.0;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (mesh.boundary_vertex[i]) {
      out.r[Eigen::Index(i)] = 0.0;
    } else {
      fn += F[Eigen::Index(i)] * F[Eigen::Index(i)];
    }
  }
  out.norm = out.r.norm();
  out.load_norm = std::sqrt(fn);
  return out;
}

// Rescaling predictor: the core keeps its profile in y = (x - x0)/eps, the
// far field scales like 1/p.
Eigen::VectorXd predict(const Solution& prev, const MeshLocator& prev_loc, const TriMesh& target, double p_new) {
  const double u0_old = prev.u_max;
  const double eps_old = prev.eps_n;
  // eps shrinks roughly like exp(-p/4); u_max barely moves.
  const double eps_new = eps_old * std::exp(-(p_new - prev.p) / 4.0);
  const double u0_new = u0_old;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(target.vertices.size()));
  for (std::size_t i = 0; i < target.vertices.size(); ++i) {
    if (target.boundary_vertex[i]) continue;
    const Point2 x = target.vertices[i];
    double far = 0.0;
    if (auto v = prev_loc.interpolate_vec(prev.u.values, x)) far = *v * prev.p / p_new;
    double core = 0.0;
    const Point2 xs = prev.x_n + (x - prev.x_n) * (eps_old / eps_new);
    if (auto v = prev_loc.interpolate_vec(prev.u.values, xs)) {
      const double w = prev.p * (*v / u0_old - 1.0);
      core = std::max(0.0, u0_new * (1.0 + w / p_new));
    }
    out[Eigen::Index(i)] = std::max(far, core);
  }
  return out;
}

// Torsion function -Δφ = 1 scaled onto the Nehari manifold int|∇φ|² = int φ^{p+1}.
ScalarField torsion_guess(const std::shared_ptr<const TriMesh>& mesh, double p) {
  const SparseSymMatrix K = assemble_stiffness(*mesh);
  const Eigen::VectorXd f = assemble_mass(*mesh, nullptr) * Eigen::VectorXd::Ones(Eigen::Index(mesh->vertices.size()));
  Eigen::VectorXd phi = solve_dirichlet(K, f, mesh).values.cwiseMax(0.0);
  phi *= std::pow(phi.dot(K * phi) / integrate_power(*mesh, phi, p + 1.0), 1.0 / (p - 1.0));
  return ScalarField(mesh, std::move(phi));
}

// Stationary point of a least-squares quadratic through the vertices near
// x_n. Falls back to the vertex when the fit is not a clean maximum.
void recover_peak(Solution& sol) {
  sol.peak = sol.x_n;
  sol.peak_value = sol.u_max;
  const TriMesh& mesh = sol.mesh();
  const double radius = std::max(0.5 * sol.eps_n, 2.5 * local_h(mesh, sol.x_n, 0.0));
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    if (!mesh.boundary_vertex[i] && distance(mesh.vertices[i], sol.x_n) <= radius) ids.push_back(i);
  if (ids.size() < 8) return;
  Eigen::MatrixXd A(Eigen::Index(ids.size()), 6);
  Eigen::VectorXd b(Eigen::Index(ids.size()));
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const Point2 d = (mesh.vertices[ids[k]] - sol.x_n) / radius;
    A.row(Eigen::Index(k)) << 1.0, d.x, d.y, d.x * d.x, d.x * d.y, d.y * d.y;
    b[Eigen::Index(k)] = sol.u[ids[k]];
  }
  const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  Eigen::Matrix2d H;
  H << 2 * c[3], c[4], c[4], 2 * c[5];
  if (H(0, 0) >= 0.0 || H.determinant() <= 0.0) return;
  const Eigen::Vector2d z = -H.inverse() * Eigen::Vector2d(c[1], c[2]);
  if (z.norm() > 0.5) return;
  sol.peak = sol.x_n + Point2{z[0], z[1]} * radius;
  sol.peak_value = std::max(sol.u_max, c[0] + 0.5 * (c[1] * z[0] + c[2] * z[1]));
}

}  // namespace

double spike_scale(double p, double u_max) {
  return std::exp(-0.5 * (std::log(p) + (p - 1.0) * std::log(u_max)));
}

ScalarField liouville_guess(std::shared_ptr<const TriMesh> mesh, double p, Point2 x0) {
  require(p > 1.0, ErrorKind::InvalidArgument, "p must exceed 1");
  const double eps = spike_scale(p, kSqrtE);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(Eigen::Index(mesh->vertices.size()));
  for (std::size_t i = 0; i < mesh->vertices.size(); ++i) {
    if (mesh->boundary_vertex[i]) continue;
    const double r = distance(mesh->vertices[i], x0) / eps;
    u[Eigen::Index(i)] = kSqrtE * std::max(0.0, 1.0 + liouville(r) / p);
  }
  return ScalarField(std::move(mesh), std::move(u));
}

void finalize_solution(Solution& sol, const SparseSymMatrix& K) {
  const auto& v = sol.u.values;
  Eigen::Index imax = 0;
  sol.u_max = v.maxCoeff(&imax);
  sol.x_n = sol.mesh().vertices[std::size_t(imax)];
  sol.eps_n = spike_scale(sol.p, sol.u_max);
  recover_peak(sol);
  sol.energy = sol.p * v.dot(K * v);
  sol.mesh_id = sol.mesh().id();
}

Solution newton_solve(const ScalarField& guess, double p, const NewtonOptions& opts) {
  require(p > 1.0, ErrorKind::InvalidArgument, "p must exceed 1");
  const TriMesh& mesh = *guess.mesh;
  Eigen::VectorXd u = guess.values;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    require(u[Eigen::Index(i)] >= 0.0, ErrorKind::InvalidArgument, "guess must be nonnegative");
    require(!mesh.boundary_vertex[i] || u[Eigen::Index(i)] == 0.0, ErrorKind::InvalidArgument,
            "guess must vanish on the boundary");
  }
  const SparseSymMatrix K = assemble_stiffness(mesh);

  Solution sol;
  sol.p = p;
  Residual res = residual(mesh, K, u, p);
  sol.iterations = 1;
  sol.residual_history.push_back(res.load_norm > 0 ? res.norm / res.load_norm : 0.0);
  while (true) {
    if (res.load_norm == 0.0) fail(ErrorKind::PositivityLost, "iterate vanished identically");
    if (res.norm <= opts.tol * res.load_norm) break;
    if (sol.iterations > opts.max_iterations)
      fail(ErrorKind::MaxIterations, "Newton did not converge in " + std::to_string(opts.max_iterations) + " steps");
    const SparseSymMatrix B = assemble_linearized_mass(mesh, u, p);
    const SparseSymMatrix J = K - B;
    DirichletSystem sys(mesh, J);
    const Eigen::VectorXd du = sys.solve(-res.r);
    // Non-monotone acceptance against the worst of the last few residuals.
    const auto& hist = sol.residual_history;
    const auto first = hist.size() > kMemory ? hist.end() - kMemory : hist.begin();
    const double reference = *std::max_element(first, hist.end());
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving, t *= 0.5) {
      Eigen::VectorXd trial = u + t * du;
      Residual tr = residual(mesh, K, trial, p);
      ++sol.iterations;
      if (std::isfinite(tr.norm) && tr.load_norm > 0.0 && tr.norm / tr.load_norm < reference) {
        u = std::move(trial);
        res = std::move(tr);
        accepted = true;
        break;
      }
    }
    if (!accepted) fail(ErrorKind::NewtonDiverged, "residual did not decrease after maximal damping");
    sol.residual_history.push_back(res.norm / res.load_norm);
  }
  sol.residual_norm = res.norm / res.load_norm;
  const auto& h = sol.residual_history;
  sol.quadratic = h.size() < 3 || h[h.size() - 1] <= 0.3 * h[h.size() - 2];
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    if (!mesh.boundary_vertex[i] && !(u[Eigen::Index(i)] > 0.0))
      fail(ErrorKind::PositivityLost, "solution is not positive at interior vertex " + std::to_string(i));
  sol.u = ScalarField(guess.mesh, std::move(u));
  finalize_solution(sol, K);
  return sol;
}

TriMesh spike_mesh(const DomainSpec& domain, double base_h, Point2 center, double eps,
                   const ContinuationOptions& opts) {
  const TriMesh base = build_mesh(domain, base_h, opts.mesh);
  return grade_toward(base, center, 0.5 * opts.core_fraction * eps, opts.grading, opts.mesh);
}

ScalarField transfer(const ScalarField& field, std::shared_ptr<const TriMesh> target) {
  MeshLocator loc(*field.mesh);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(Eigen::Index(target->vertices.size()));
  for (std::size_t i = 0; i < target->vertices.size(); ++i) {
    if (target->boundary_vertex[i]) continue;
    if (auto x = loc.interpolate_vec(field.values, target->vertices[i])) v[Eigen::Index(i)] = std::max(0.0, *x);
  }
  return ScalarField(std::move(target), std::move(v));
}

Branch continuation_sweep(const DomainSpec& domain, const std::vector<double>& p_values, double base_h,
                          const ContinuationOptions& opts) {
  Branch branch;
  branch.domain = domain;
  if (p_values.empty()) return branch;
  require(p_values.front() > 1.0 && p_values.front() <= 5.0, ErrorKind::InvalidArgument,
          "the first exponent must lie in (1, 5]");
  for (std::size_t i = 1; i < p_values.size(); ++i)
    require(p_values[i] > p_values[i - 1], ErrorKind::InvalidArgument, "p values must increase");

  Point2 seed;
  if (opts.seed) {
    seed = *opts.seed;
  } else if (domain.convex()) {
    RobinOptions ro;
    ro.mesh = opts.mesh;
    seed = robin_critical_point(domain, base_h, ro).x_inf;
  } else {
    seed = domain.centroid();
  }

  auto attach_p = [](double p, const LabError& e) {
    const std::string msg = std::string(e.what()).substr(to_string(e.kind()).size() + 2);
    throw LabError(e.kind(), msg + " [p = " + std::to_string(p) + "]");
  };

  const double dp_cap = -4.0 * std::log(1.0 - opts.max_eps_change);
  double dp = opts.dp_initial;
  Point2 center = seed;
  Solution current;

  // Steps the branch from current.p up to `target`, remeshing toward the peak.
  auto advance = [&](double target) {
    while (current.p < target) {
      const double step = std::min({dp, dp_cap, target - current.p});
      const double p_new = target - current.p - step < 1e-12 ? target : current.p + step;
      const double eps_pred = current.eps_n * std::exp(-(p_new - current.p) / 4.0);

      // Remesh when the core is too coarse for the predicted spike or the peak drifted.
      auto step_mesh = current.u.mesh;
      bool remeshed = false;
      const double h_peak = local_h(*step_mesh, current.x_n, 0.0);
      const bool drifted = distance(current.x_n, center) > std::max(eps_pred, 2.0 * h_peak);
      if (h_peak > opts.core_fraction * eps_pred || drifted) {
        if (drifted) center = current.x_n;
        step_mesh = std::make_shared<const TriMesh>(spike_mesh(domain, base_h, center, eps_pred, opts));
        remeshed = true;
      }
      MeshLocator loc(current.mesh());
      ScalarField guess(step_mesh, predict(current, loc, *step_mesh, p_new));
      try {
        Solution next = newton_solve(guess, p_new, opts.newton);
        branch.steps.push_back({p_new, p_new - current.p, next.iterations, remeshed, step_mesh->vertices.size(), next.eps_n});
        if (remeshed) ++branch.remesh_events;
        if (next.iterations <= 6) dp *= 1.5;
        current = std::move(next);
      } catch (const LabError& e) {
        dp *= 0.5;
        if (dp < opts.dp_min) attach_p(p_new, e);
      }
    }
  };

  const double p0 = p_values.front();
  auto mesh = std::make_shared<const TriMesh>(spike_mesh(domain, base_h, seed, spike_scale(p0, kSqrtE), opts));
  try {
    current = newton_solve(liouville_guess(mesh, p0, seed), p0, opts.newton);
    branch.steps.push_back({p0, 0.0, current.iterations, true, mesh->vertices.size(), current.eps_n});
  } catch (const LabError& first_error) {
    // The bubble is a poor guess at small p on domains much smaller than its
    // support; start from the scaled torsion function at a lower exponent.
    const double p_low = std::min(kTorsionExponent, p0);
    try {
      current = newton_solve(torsion_guess(mesh, p_low), p_low, opts.newton);
      branch.steps.push_back({p_low, 0.0, current.iterations, true, mesh->vertices.size(), current.eps_n});
      advance(p0);
    } catch (const LabError&) {
      attach_p(p0, first_error);
    }
  }
  branch.solutions.push_back(current);

  for (std::size_t target = 1; target < p_values.size(); ++target) {
    advance(p_values[target]);
    branch.solutions.push_back(current);
  }
  return branch;
}

// ---------------------------------------------------------------- rescaling, peaks

RescaledField rescale_solution(const Solution& sol, double R, int grid_n) {
  require(R > 0.0 && grid_n >= 2, ErrorKind::InvalidArgument, "need R > 0 and at least 2 grid points");
  const DomainSpec& domain = sol.mesh().domain;
  if (!domain.contains(sol.peak) || domain.distance_to_boundary(sol.peak) <= R * sol.eps_n)
    fail(ErrorKind::BallEscapesDomain, "the rescaled window leaves the domain");
  RescaledField f;
  f.R = R;
  f.n = grid_n;
  for (int i = 0; i < grid_n; ++i) f.coords.push_back(-R + 2.0 * R * i / (grid_n - 1));
  MeshLocator loc(sol.mesh());
  f.w.resize(std::size_t(grid_n * grid_n));
  for (int i = 0; i < grid_n; ++i)
    for (int j = 0; j < grid_n; ++j) {
      const Point2 y{f.coords[std::size_t(j)], f.coords[std::size_t(i)]};
      double w = 0.0;
      if (!(y.x == 0.0 && y.y == 0.0)) {
        auto v = loc.interpolate_vec(sol.u.values, sol.peak + y * sol.eps_n);
        require(v.has_value(), ErrorKind::BallEscapesDomain, "sample outside the mesh");
        w = sol.p / sol.peak_value * (*v - sol.peak_value);
      }
      f.w[std::size_t(i * grid_n + j)] = w;
    }
  return f;
}

double rescaled_deficit(const RescaledField& f, double radius) {
  double sup = 0.0;
  for (int i = 0; i < f.n; ++i)
    for (int j = 0; j < f.n; ++j) {
      const double r = std::hypot(f.coords[std::size_t(j)], f.coords[std::size_t(i)]);
      if (r <= radius) sup = std::max(sup, std::abs(f.at(i, j) - liouville(r)));
    }
  return sup;
}

std::vector<Point2> detect_peaks(const Solution& sol, std::optional<double> threshold) {
  const TriMesh& mesh = sol.mesh();
  const auto& u = sol.u.values;
  const double thr = threshold.value_or(0.5 * sol.u_max);
  std::vector<std::vector<int>> adj(mesh.vertices.size());
  for (const auto& t : mesh.triangles)
    for (int k = 0; k < 3; ++k) {
      adj[std::size_t(t[std::size_t(k)])].push_back(t[std::size_t((k + 1) % 3)]);
      adj[std::size_t(t[std::size_t((k + 1) % 3)])].push_back(t[std::size_t(k)]);
    }
  std::vector<int> cand;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (!(u[Eigen::Index(i)] > thr)) continue;
    bool is_max = true;
    for (int j : adj[i])
      if (u[j] > u[Eigen::Index(i)]) is_max = false;
    if (is_max) cand.push_back(int(i));
  }
  std::sort(cand.begin(), cand.end(), [&](int a, int b) { return u[a] > u[b]; });
  std::vector<Point2> peaks;
  for (int c : cand) {
    const Point2 x = mesh.vertices[std::size_t(c)];
    bool separated = true;
    for (const Point2& q : peaks)
      if (distance(q, x) < 10.0 * sol.eps_n) separated = false;
    if (separated) peaks.push_back(x);
  }
  return peaks;
}

nlohmann::json to_json(const Solution& sol, bool include_field) {
  nlohmann::json j;
  j["p"] = sol.p;
  j["u_max"] = sol.u_max;
  j["x_n"] = {sol.x_n.x, sol.x_n.y};
  j["peak"] = {sol.peak.x, sol.peak.y};
  j["peak_value"] = sol.peak_value;
  j["eps_n"] = sol.eps_n;
  j["energy"] = sol.energy;
  j["residual_norm"] = sol.residual_norm;
  j["mesh_id"] = sol.mesh_id;
  j["iterations"] = sol.iterations;
  j["quadratic"] = sol.quadratic;
  if (include_field) j["u"] = std::vector<double>(sol.u.values.begin(), sol.u.values.end());
  return j;
}

}  // namespace lelab
