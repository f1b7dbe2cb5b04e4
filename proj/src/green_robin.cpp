#include "lelab/green_robin.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>


#include "lelab/errors.hpp"

namespace lelab {

namespace {

constexpr double kInv2Pi = 0.5 / std::numbers::pi;

// d/dy_k of -(1/2pi) log|x - y|.
double fundamental_dy(Point2 x, Point2 y, int k) {
  const Point2 d = x - y;
  return kInv2Pi * (k == 0 ? d.x : d.y) / dot(d, d);
}

// Normal derivative in x of -(1/2pi) log|x - y|.
double fundamental_dnu(Point2 x, Point2 y, Point2 nu) {
  const Point2 d = x - y;
  return -kInv2Pi * dot(d, nu) / dot(d, d);
}

// d/dy_k of the normal derivative above.
double fundamental_dnu_dy(Point2 x, Point2 y, Point2 nu, int k) {
  const Point2 d = x - y;
  const double r2 = dot(d, d);
  const double nk = k == 0 ? nu.x : nu.y;
  const double dk = k == 0 ? d.x : d.y;
  return -kInv2Pi * (-nk / r2 + 2.0 * dot(d, nu) * dk / (r2 * r2));
}

double halton(unsigned index, unsigned base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

double bump(double s2) { return s2 < 1.0 ? std::exp(-1.0 / (1.0 - s2)) : 0.0; }

}  // namespace

double fundamental_solution(Point2 x, Point2 y) { return -kInv2Pi * std::log(distance(x, y)); }

double relative_residual(double lhs, double rhs) {
  return std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + std::numeric_limits<double>::epsilon());
}

RobinSolver::RobinSolver(std::shared_ptr<const TriMesh> mesh) : mesh_(std::move(mesh)) {
  K_ = assemble_stiffness(*mesh_);
  system_ = std::make_unique<DirichletSystem>(*mesh_, K_);
  flux_ = std::make_unique<BoundaryFlux>(*mesh_);
  locator_ = std::make_unique<MeshLocator>(*mesh_);
  h_ = mesh_->max_h();
}

double RobinSolver::fd_step() const { return 1e-3 * mesh_->domain.diameter(); }

void RobinSolver::check_interior(Point2 y) const {
  if (!mesh_->domain.contains(y) || mesh_->domain.distance_to_boundary(y) < 2.0 * h_)
    fail(ErrorKind::PointTooCloseToBoundary,
         "source point must lie at least 2h = " + std::to_string(2.0 * h_) + " inside the domain");
}

Eigen::VectorXd RobinSolver::harmonic_extension(const Eigen::VectorXd& g) const {
  return system_->solve(Eigen::VectorXd::Zero(g.size()), g);
}

Eigen::VectorXd RobinSolver::regular_part(Point2 y) const {
  check_interior(y);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(Eigen::Index(mesh_->vertices.size()));
  for (std::size_t i = 0; i < mesh_->vertices.size(); ++i)
    if (mesh_->boundary_vertex[i]) g[Eigen::Index(i)] = fundamental_solution(mesh_->vertices[i], y);
  return harmonic_extension(g);
}

Eigen::VectorXd RobinSolver::regular_part_dy(Point2 y, int k) const {
  check_interior(y);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(Eigen::Index(mesh_->vertices.size()));
  for (std::size_t i = 0; i < mesh_->vertices.size(); ++i)
    if (mesh_->boundary_vertex[i]) g[Eigen::Index(i)] = fundamental_dy(mesh_->vertices[i], y, k);
  return harmonic_extension(g);
}

double RobinSolver::green(Point2 x, Point2 y, const Eigen::VectorXd& H) const {
  auto h = locator_->interpolate_vec(H, x);
  require(h.has_value(), ErrorKind::InvalidArgument, "evaluation point outside the mesh");
  return fundamental_solution(x, y) - *h;
}

double RobinSolver::green_dy(Point2 x, Point2 y, int k, const Eigen::VectorXd& dH) const {
  auto h = locator_->interpolate_vec(dH, x);
  require(h.has_value(), ErrorKind::InvalidArgument, "evaluation point outside the mesh");
  return fundamental_dy(x, y, k) - *h;
}

double RobinSolver::robin_value(Point2 x) const {
  const Eigen::VectorXd H = regular_part(x);
  auto v = locator_->interpolate_vec(H, x);
  require(v.has_value(), ErrorKind::InvalidArgument, "evaluation point outside the mesh");
  return *v;
}

double RobinSolver::robin_smooth(Point2 x) const {
  const Eigen::VectorXd H = regular_part(x);
  const double rho = std::max(3.0 * h_, std::min(0.125 * mesh_->domain.diameter(), 0.45 * mesh_->domain.distance_to_boundary(x)));
  auto hit = locator_->locate(x);
  require(hit.has_value(), ErrorKind::InvalidArgument, "evaluation point outside the mesh");
  const auto& rule = triangle_rule();
  const auto& nb = locator_->neighbors();
  std::vector<std::uint8_t> seen(mesh_->triangles.size(), 0);
  std::vector<std::size_t> stack{hit->triangle};
  seen[hit->triangle] = 1;
  double num = 0.0, den = 0.0;
  while (!stack.empty()) {
    const std::size_t t = stack.back();
    stack.pop_back();
    const auto& v = mesh_->triangles[t];
    const Point2 P[3] = {mesh_->vertices[std::size_t(v[0])], mesh_->vertices[std::size_t(v[1])],
                         mesh_->vertices[std::size_t(v[2])]};
    const double area = mesh_->signed_area(t);
    for (const auto& q : rule) {
      const Point2 z = P[0] * q.bary[0] + P[1] * q.bary[1] + P[2] * q.bary[2];
      const Point2 d = (z - x) / rho;
      const double w = bump(dot(d, d)) * q.weight * area;
      if (w == 0.0) continue;
      num += w * (q.bary[0] * H[v[0]] + q.bary[1] * H[v[1]] + q.bary[2] * H[v[2]]);
      den += w;
    }
    for (int k = 0; k < 3; ++k) {
      const int n = nb[t][std::size_t(k)];
      if (n < 0 || seen[std::size_t(n)]) continue;
      // Visit the neighbor if the shared edge comes within rho of x.
      const Point2 a = P[(k + 1) % 3], b = P[(k + 2) % 3];
      const Point2 ab = b - a;
      const double s = std::clamp(dot(x - a, ab) / dot(ab, ab), 0.0, 1.0);
      if (distance(x, a + ab * s) < rho) {
        seen[std::size_t(n)] = 1;
        stack.push_back(std::size_t(n));
      }
    }
  }
  require(den > 0.0, ErrorKind::InvalidArgument, "mollifier support holds no quadrature points");
  return num / den;
}

Point2 RobinSolver::robin_gradient(Point2 x, std::optional<double> step) const {
  const double h = step.value_or(fd_step());
  auto central = [&](double s) {
    return Point2{(robin_smooth({x.x + s, x.y}) - robin_smooth({x.x - s, x.y})) / (2 * s),
                  (robin_smooth({x.x, x.y + s}) - robin_smooth({x.x, x.y - s})) / (2 * s)};
  };
  const Point2 d1 = central(h), d2 = central(0.5 * h);
  return (d2 * 4.0 - d1) / 3.0;
}

Sym2 RobinSolver::robin_hessian(Point2 x, std::optional<double> step) const {
  const double h = step.value_or(fd_step());
  const double r0 = robin_smooth(x);
  auto second = [&](double s) {
    auto R = [&](double dx, double dy) { return robin_smooth({x.x + dx, x.y + dy}); };
    Sym2 m;
    m.xx = (R(s, 0) - 2 * r0 + R(-s, 0)) / (s * s);
    m.yy = (R(0, s) - 2 * r0 + R(0, -s)) / (s * s);
    m.xy = (R(s, s) - R(s, -s) - R(-s, s) + R(-s, -s)) / (4 * s * s);
    return m;
  };
  const Sym2 a = second(h), b = second(0.5 * h);
  return {(4 * b.xx - a.xx) / 3, (4 * b.xy - a.xy) / 3, (4 * b.yy - a.yy) / 3};
}

Eigen::VectorXd RobinSolver::harmonic_flux(const Eigen::VectorXd& field) const {
  return (*flux_)(K_, field, Eigen::VectorXd::Zero(field.size()));
}

// ---------------------------------------------------------------- critical point

RobinData robin_critical_point(const DomainSpec& domain, double h, const RobinOptions& opts) {
  auto mesh = std::make_shared<const TriMesh>(build_mesh(domain, h, opts.mesh));
  RobinSolver solver(mesh);
  return robin_critical_point(solver, opts);
}

RobinData robin_critical_point(const RobinSolver& solver, const RobinOptions& opts) {
  const TriMesh& mesh = solver.mesh();
  const DomainSpec& domain = mesh.domain;
  RobinData out;
  out.domain = domain;
  const double diam = domain.diameter();

  Point2 lo = mesh.vertices.front(), hi = lo;
  for (const auto& v : mesh.vertices) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
  }
  const Point2 c = domain.centroid();
  const double margin = std::max(4.0 * solver.mesh_h(), 10.0 * solver.fd_step());
  if (domain.contains(c) && domain.distance_to_boundary(c) > margin) out.seeds.push_back(c);
  const double keep = std::max(margin, 0.25 * (domain.contains(c) ? domain.distance_to_boundary(c) : 0.0));
  for (unsigned i = opts.random_seed + 1; out.seeds.size() < std::size_t(opts.seed_count) + 1 && i < opts.random_seed + 20000; ++i) {
    const Point2 x{lo.x + (hi.x - lo.x) * halton(i, 2), lo.y + (hi.y - lo.y) * halton(i, 3)};
    if (domain.contains(x) && domain.distance_to_boundary(x) >= keep) out.seeds.push_back(x);
  }
  require(!out.seeds.empty(), ErrorKind::InvalidDomain, "no interior seed points for the Robin search");

  for (const Point2 seed : out.seeds) {
    Point2 x = seed;
    bool converged = false;
    for (int it = 0; it < opts.max_iterations; ++it) {
      const Point2 g = solver.robin_gradient(x);
      if (norm(g) <= opts.grad_tol) {
        converged = true;
        break;
      }
      const Sym2 H = solver.robin_hessian(x);
      const double det = H.xx * H.yy - H.xy * H.xy;
      Point2 step = std::abs(det) > 1e-300 ? Point2{(H.yy * g.x - H.xy * g.y) / det, (H.xx * g.y - H.xy * g.x) / det}
                                           : g;
      // Keep iterates well inside the domain.
      const double room = 0.5 * (domain.distance_to_boundary(x) - margin);
      if (norm(step) > room && room > 0.0) step = step * (room / norm(step));
      x = x - step;
      if (!domain.contains(x) || domain.distance_to_boundary(x) < margin)
        fail(ErrorKind::NewtonDiverged, "Robin critical-point iteration left the domain");
      if (norm(step) <= 1e-12 * diam) {
        converged = true;
        break;
      }
    }
    if (!converged) fail(ErrorKind::NewtonDiverged, "Robin critical-point iteration did not converge");
    out.limits.push_back(x);
  }

  // Lowest R among the limits is reported; distinct limits are flagged.
  std::size_t best = 0;
  std::vector<double> values;
  for (const Point2 x : out.limits) values.push_back(solver.robin_smooth(x));
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] < values[best]) best = i;
  for (const Point2 x : out.limits)
    if (distance(x, out.limits[best]) > 1e-4 * diam) out.multiple_limits = true;
  if (out.multiple_limits && domain.convex())
    fail(ErrorKind::MultipleCriticalPoints, "seeds converged to distinct critical points on a convex domain");

  out.x_inf = out.limits[best];
  out.R_inf = values[best];
  out.grad_R = solver.robin_gradient(out.x_inf);
  out.hessian = solver.robin_hessian(out.x_inf);
  const auto mu = out.hessian.eigenvalues();
  out.mu1 = mu[0];
  out.mu2 = mu[1];
  out.mu1_direction = out.hessian.lower_eigenvector();
  out.laplacian_R = out.hessian.trace();

  if (opts.sample_grid > 1) {
    const int n = opts.sample_grid;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Point2 x{lo.x + (hi.x - lo.x) * (j + 0.5) / n, lo.y + (hi.y - lo.y) * (i + 0.5) / n};
        if (domain.contains(x) && domain.distance_to_boundary(x) >= 2.0 * solver.mesh_h())
          out.samples.push_back({x, solver.robin_value(x)});
      }
  }
  return out;
}

// ---------------------------------------------------------------- identities

IdentityResult boundary_identity(const RobinSolver& solver, Point2 y, BoundaryIdentity which, int j, int k) {
  require(j >= 0 && j < 2 && k >= 0 && k < 2, ErrorKind::InvalidArgument, "coordinate index must be 0 or 1");
  const TriMesh& mesh = solver.mesh();
  const Eigen::VectorXd q0 = solver.harmonic_flux(solver.regular_part(y));
  const int dk = which == BoundaryIdentity::R2 ? k : j;
  Eigen::VectorXd qk;
  if (which == BoundaryIdentity::G2 || which == BoundaryIdentity::R2)
    qk = solver.harmonic_flux(solver.regular_part_dy(y, dk));

  auto dG = [&](Point2 x, Point2 nu, int a, int b, double s) {
    return fundamental_dnu(x, y, nu) - ((1 - s) * q0[a] + s * q0[b]);
  };
  auto dG_dy = [&](Point2 x, Point2 nu, int a, int b, double s) {
    return fundamental_dnu_dy(x, y, nu, dk) - ((1 - s) * qk[a] + s * qk[b]);
  };
  auto comp = [](Point2 v, int i) { return i == 0 ? v.x : v.y; };

  IdentityResult r;
  switch (which) {
    case BoundaryIdentity::G1:
      r.lhs = boundary_integral(mesh, [&](Point2 x, Point2 nu, int a, int b, double s) {
        const double g = dG(x, nu, a, b, s);
        return dot(x - y, nu) * g * g;
      });
      r.rhs = kInv2Pi;
      break;
    case BoundaryIdentity::G2:
      r.lhs = 2.0 * boundary_integral(mesh, [&](Point2 x, Point2 nu, int a, int b, double s) {
        return dot(x - y, nu) * dG(x, nu, a, b, s) * dG_dy(x, nu, a, b, s);
      });
      r.rhs = comp(solver.robin_gradient(y), j);
      break;
    case BoundaryIdentity::R1:
      r.lhs = boundary_integral(mesh, [&](Point2 x, Point2 nu, int a, int b, double s) {
        const double g = dG(x, nu, a, b, s);
        return comp(nu, j) * g * g;
      });
      r.rhs = comp(solver.robin_gradient(y), j);
      break;
    case BoundaryIdentity::R2: {
      r.lhs = boundary_integral(mesh, [&](Point2 x, Point2 nu, int a, int b, double s) {
        return comp(nu, j) * dG(x, nu, a, b, s) * dG_dy(x, nu, a, b, s);
      });
      const Sym2 H = solver.robin_hessian(y);
      r.rhs = 0.5 * (j != k ? H.xy : (j == 0 ? H.xx : H.yy));
      break;
    }
  }
  r.rel_residual = relative_residual(r.lhs, r.rhs);
  return r;
}

// ---------------------------------------------------------------- output

nlohmann::json to_json(const RobinData& d) {
  nlohmann::json j;
  j["domain"] = domain_to_json(d.domain);
  j["x_inf"] = {d.x_inf.x, d.x_inf.y};
  j["R_inf"] = d.R_inf;
  j["grad_R"] = {d.grad_R.x, d.grad_R.y};
  j["hessian"] = {{d.hessian.xx, d.hessian.xy}, {d.hessian.xy, d.hessian.yy}};
  j["mu1"] = d.mu1;
  j["mu2"] = d.mu2;
  j["mu1_direction"] = {d.mu1_direction.x, d.mu1_direction.y};
  j["laplacian_R"] = d.laplacian_R;
  j["multiple_limits"] = d.multiple_limits;
  auto& lim = j["limits"] = nlohmann::json::array();
  for (const auto& x : d.limits) lim.push_back({x.x, x.y});
  j["sample_count"] = d.samples.size();
  return j;
}

void write_robin_csv(std::ostream& os, const RobinData& d) {
  os << "x,y,R\n";
  os.precision(17);
  for (const auto& s : d.samples) os << s.x.x << ',' << s.x.y << ',' << s.R << '\n';
}

}  // namespace lelab
