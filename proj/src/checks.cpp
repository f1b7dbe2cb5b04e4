#include "lelab/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "lelab/errors.hpp"
#include "lelab/radial_oracle.hpp"

namespace lelab::checks {

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrtE = std::sqrt(std::numbers::e);
const double k8PiE = 8.0 * kPi * std::numbers::e;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string tag(const DomainSpec& d, double p) { return d.name() + ".p" + num(p); }

std::string key(const DomainSpec& d, const std::vector<double>& p) {
  std::string k = d.name();
  for (double v : p) k += "," + num(v);
  return k;
}

const char* compare_name(Compare c) {
  switch (c) {
    case Compare::AbsLe: return "abs_le";
    case Compare::RelLe: return "rel_le";
    case Compare::Le: return "le";
    case Compare::Ge: return "ge";
    case Compare::Lt: return "lt";
    case Compare::Gt: return "gt";
    case Compare::Equal: return "equal";
  }
  return "";
}

// Runs `body`, turning a solver error into a failed report rather than an exception.
template <class F>
CheckReport guarded(const std::string& target, F&& body) {
  CheckReport rep;
  rep.target = target;
  try {
    body(rep);
  } catch (const LabError& e) {
    rep.error = e.what();
  }
  return rep;
}

std::vector<radial::RadialProfile> profiles(const std::vector<double>& p) {
  std::vector<radial::RadialProfile> out;
  for (double q : p) out.push_back(radial::shoot_radial(q));
  return out;
}

// Adds one strict-decrease record per consecutive pair.
void strictly_decreasing(CheckReport& rep, const std::string& claim, const std::string& anchor,
                         const std::vector<double>& p, const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    rep.add(make_check(claim + ".p" + num(p[i - 1]) + "_to_p" + num(p[i]), anchor, v[i], v[i - 1], 0.0, Compare::Lt));
}

}  // namespace

CheckRecord make_check(std::string claim, std::string anchor, double computed, double expected, double tolerance,
                       Compare compare) {
  CheckRecord r{std::move(claim), std::move(anchor), computed, expected, tolerance, compare, false};
  const double diff = std::abs(computed - expected);
  switch (compare) {
    case Compare::AbsLe: r.pass = diff <= tolerance; break;
    case Compare::RelLe: r.pass = diff <= tolerance * std::abs(expected); break;
    case Compare::Le: r.pass = computed <= expected; break;
    case Compare::Ge: r.pass = computed >= expected; break;
    case Compare::Lt: r.pass = computed < expected; break;
    case Compare::Gt: r.pass = computed > expected; break;
    case Compare::Equal: r.pass = computed == expected; break;
  }
  if (!std::isfinite(computed)) r.pass = false;
  return r;
}

bool CheckReport::pass() const {
  return error.empty() && !records.empty() &&
         std::all_of(records.begin(), records.end(), [](const CheckRecord& r) { return r.pass; });
}

nlohmann::json to_json(const CheckRecord& r) {
  return {{"claim", r.claim},         {"anchor", r.anchor},       {"computed", r.computed},
          {"expected", r.expected},   {"tolerance", r.tolerance}, {"compare", compare_name(r.compare)},
          {"pass", r.pass}};
}

nlohmann::json to_json(const CheckReport& r) {
  nlohmann::json j{{"target", r.target}, {"pass", r.pass()}, {"checks", nlohmann::json::array()}};
  for (const auto& c : r.records) j["checks"].push_back(to_json(c));
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

Workspace::Workspace(std::vector<double> schedule, double base_h) : schedule_(std::move(schedule)), base_h_(base_h) {
  require(std::is_sorted(schedule_.begin(), schedule_.end()) && !schedule_.empty() && schedule_.front() > 5.0,
          ErrorKind::InvalidArgument, "schedule must be increasing and above 5");
}

const Branch& Workspace::branch(const DomainSpec& domain, const std::vector<double>& p_values) {
  const std::string k = key(domain, p_values);
  auto it = branches_.find(k);
  if (it == branches_.end()) {
    std::vector<double> full{5.0};
    full.insert(full.end(), p_values.begin(), p_values.end());
    it = branches_.emplace(k, continuation_sweep(domain, full, base_h_)).first;
  }
  return it->second;
}

const Solution& Workspace::solution(const DomainSpec& domain, double p) {
  const bool scheduled = std::find(schedule_.begin(), schedule_.end(), p) != schedule_.end();
  const Branch& b = branch(domain, scheduled ? schedule_ : std::vector<double>{p});
  for (const Solution& s : b.solutions)
    if (s.p == p) return s;
  fail(ErrorKind::InvalidArgument, "exponent missing from branch");
}

const SpectrumReport& Workspace::spectrum(const DomainSpec& domain, double p) {
  const std::string k = domain.name() + "@" + num(p);
  auto it = spectra_.find(k);
  if (it == spectra_.end()) it = spectra_.emplace(k, linearized_spectrum(solution(domain, p))).first;
  return it->second;
}

const RobinSolver& Workspace::robin_solver(const DomainSpec& domain, double h) {
  const std::string k = domain.name() + "@" + num(h);
  auto& slot = solvers_[k];
  if (!slot) slot = std::make_unique<RobinSolver>(std::make_shared<const TriMesh>(build_mesh(domain, h)));
  return *slot;
}

const RobinData& Workspace::robin(const DomainSpec& domain, double h) {
  const std::string k = domain.name() + "@" + num(h);
  auto it = robin_.find(k);
  if (it == robin_.end()) it = robin_.emplace(k, robin_critical_point(robin_solver(domain, h))).first;
  return it->second;
}

double robin_h(const DomainSpec& domain) { return 0.015 * domain.diameter(); }

CheckReport lambda1(Workspace& ws, const std::vector<DomainSpec>& domains, const std::vector<double>& p) {
  return guarded("lambda1", [&](CheckReport& rep) {
    for (const DomainSpec& d : domains)
      for (double q : p) {
        const Solution& s = ws.solution(d, q);
        const SpectrumReport& r = ws.spectrum(d, q);
        rep.add(make_check("lambda1." + tag(d, q) + ".lambda1_times_p", "lambda_1 = 1/p with v_1 proportional to u",
                           r.eigenvalues[0] * q, 1.0, 1e-6, Compare::RelLe));
        const double dev = (r.max_normalized[0].values - s.u.values / s.u_max).cwiseAbs().maxCoeff();
        rep.add(make_check("lambda1." + tag(d, q) + ".v1_vs_u_sup_deviation",
                           "lambda_1 = 1/p with v_1 proportional to u", dev, 0.0, 1e-4, Compare::AbsLe));
      }
  });
}

CheckReport energy(const std::vector<double>& p) {
  return guarded("energy", [&](CheckReport& rep) {
    std::vector<double> pe;
    for (const auto& prof : profiles(p)) pe.push_back(prof.energy);
    const Extrapolation e = extrapolate(p, pe);
    const char* anchor = "p int |grad u_p|^2 -> 8 pi e";
    rep.add(make_check("energy.extrapolated_pE", anchor, e.limit, k8PiE, 1e-2, Compare::RelLe));
    rep.add(make_check("energy.p" + num(p.back()) + ".raw_pE", anchor, pe.back(), k8PiE, 5e-2, Compare::RelLe));
  });
}

CheckReport sup_norm(const std::vector<double>& p) {
  return guarded("sup_norm", [&](CheckReport& rep) {
    std::vector<double> u0, gap;
    for (const auto& prof : profiles(p)) {
      u0.push_back(prof.u0);
      gap.push_back(std::abs(prof.u0 - kSqrtE));
    }
    const char* anchor = "||u_p||_inf -> sqrt e";
    rep.add(make_check("sup_norm.extrapolated_u_max", anchor, extrapolate(p, u0).limit, kSqrtE, 1e-2, Compare::AbsLe));
    strictly_decreasing(rep, "sup_norm.gap_decreasing", anchor, p, gap);
  });
}

CheckReport lambda4(const std::vector<double>& p) {
  return guarded("lambda4", [&](CheckReport& rep) {
    std::vector<double> scaled;
    for (const auto& prof : profiles(p)) scaled.push_back(prof.p * radial::radial_spectrum(prof).merged_minus_one[3]);
    const char* anchor = "lambda_4 = 1 + 6/p + o(1/p)";
    rep.add(make_check("lambda4.extrapolated_p_lambda4_minus_1", anchor, extrapolate(p, scaled).limit, 6.0, 5e-2,
                       Compare::RelLe));
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] == 80.0)
        rep.add(make_check("lambda4.p80.raw_p_lambda4_minus_1", anchor, scaled[i], 6.0, 0.15, Compare::RelLe));
  });
}

CheckReport lambda23(Workspace& ws, const std::vector<double>& oracle_p, const std::vector<double>& fem_p) {
  return guarded("lambda23", [&](CheckReport& rep) {
    const char* anchor = "lambda_{2,3} = 1 + 24 pi mu_{1,2} eps^2 + o(eps^2)";
    std::vector<double> scaled;
    for (const auto& prof : profiles(oracle_p)) {
      const radial::RadialSpectrum s = radial::radial_spectrum(prof);
      scaled.push_back(s.merged_minus_one[1] / (s.eps * s.eps));
      rep.add(make_check("lambda23.oracle.p" + num(prof.p) + ".lambda2_equals_lambda3", anchor, s.merged[2],
                         s.merged[1], 0.0, Compare::Equal));
    }
    // disk: 24 pi mu with mu = 1/pi
    rep.add(make_check("lambda23.oracle.extrapolated_lambda2_minus_1_over_eps2", anchor,
                       extrapolate(oracle_p, scaled).limit, 24.0, 0.1, Compare::RelLe));
    for (double q : fem_p) {
      const SpectrumReport& r = ws.spectrum(DomainSpec::unit_disk(), q);
      rep.add(make_check("lambda23.fem." + tag(DomainSpec::unit_disk(), q) + ".lambda3_over_lambda2", anchor,
                         r.eigenvalues[2] / r.eigenvalues[1], 1.0, 1e-2, Compare::RelLe));
    }
  });
}

CheckReport morse(Workspace& ws, const std::vector<DomainSpec>& domains, const std::vector<double>& p) {
  return guarded("morse", [&](CheckReport& rep) {
    const char* anchor = "1 + m(x_inf) <= m(u_p) <= m0(u_p) <= 1 + m0(x_inf) <= 2";
    for (const DomainSpec& d : domains) {
      const RobinData& rd = ws.robin(d, robin_h(d));
      for (double q : p) {
        const SpectrumReport& r = ws.spectrum(d, q);
        const SandwichVerdict v = morse_sandwich_check(r, rd);
        const std::string t = "morse." + tag(d, q);
        rep.add(make_check(t + ".m", anchor, v.m, 1, 0.0, Compare::Equal));
        rep.add(make_check(t + ".m0", anchor, v.m0, 1, 0.0, Compare::Equal));
        rep.add(make_check(t + ".m_x_inf", anchor, v.m_x, 0, 0.0, Compare::Equal));
        rep.add(make_check(t + ".m0_x_inf", anchor, v.m0_x, 0, 0.0, Compare::Equal));
        rep.add(make_check(t + ".sandwich_holds", anchor, v.holds, 1, 0.0, Compare::Equal));
      }
    }
  });
}

CheckReport robin_oracle(double h_coarse, double h_fine) {
  return guarded("robin", [&](CheckReport& rep) {
    const char* anchor = "R(x) = -(1/2pi) log(1 - |x|^2) on the unit disk";
    std::vector<double> errs;
    for (double h : {h_coarse, h_fine}) {
      const RobinSolver s(std::make_shared<const TriMesh>(build_mesh(DomainSpec::unit_disk(), h)));
      double e = 0.0;
      for (int i = -9; i <= 9; ++i)
        for (int j = -9; j <= 9; ++j) {
          const Point2 x{0.1 * i, 0.1 * j};
          if (dot(x, x) > 0.81 + 1e-12) continue;
          e = std::max(e, std::abs(s.robin_value(x) - radial::disk_robin(x).value));
        }
      errs.push_back(e);
    }
    rep.add(make_check("robin.disk.h" + num(h_fine) + ".sup_error", anchor, errs[1], 0.0, 1e-3, Compare::AbsLe));
    const double ratio = errs[0] / errs[1];
    rep.add(make_check("robin.disk.error_ratio_min", "second-order convergence of R", ratio, 3.5, 0.0, Compare::Ge));
    rep.add(make_check("robin.disk.error_ratio_max", "second-order convergence of R", ratio, 4.5, 0.0, Compare::Le));

    const DomainSpec square = DomainSpec::rectangle(1, 1);
    const RobinData sq = robin_critical_point(square, robin_h(square));
    rep.add(make_check("robin.square.critical_point_offset", "grad R(x_inf) = 0, symmetric centre",
                       distance(sq.x_inf, {0.5, 0.5}), 0.0, 1e-3, Compare::AbsLe));
    for (const DomainSpec& d : {DomainSpec::unit_disk(), square, DomainSpec::ellipse(2, 1)}) {
      const RobinData rd = d.kind() == DomainKind::Rectangle ? sq : robin_critical_point(d, robin_h(d));
      rep.add(make_check("robin." + d.name() + ".mu1_positive", "D^2 R(x_inf) positive definite on convex domains",
                         rd.mu1, 0.0, 0.0, Compare::Gt));
    }
  });
}

CheckReport boundary_identities(double h) {
  return guarded("identities", [&](CheckReport& rep) {
    const RobinSolver disk(std::make_shared<const TriMesh>(build_mesh(DomainSpec::unit_disk(), h)));
    const RobinSolver square(std::make_shared<const TriMesh>(build_mesh(DomainSpec::rectangle(1, 1), h)));
    const char* g1 = "int (x-y).nu (dG/dnu)^2 = 1/(2 pi)";
    const auto gd = boundary_identity(disk, {0.3, 0.2}, BoundaryIdentity::G1);
    rep.add(make_check("identities.disk.G1", g1, gd.lhs, 1 / (2 * kPi), 1e-2, Compare::RelLe));
    const auto gs = boundary_identity(square, {0.4, 0.55}, BoundaryIdentity::G1);
    rep.add(make_check("identities.square.G1", g1, gs.lhs, 1 / (2 * kPi), 5e-2, Compare::RelLe));
    for (Point2 y : {Point2{0.3, 0.2}, Point2{-0.4, 0.1}, Point2{0.1, -0.5}}) {
      const std::string at = "identities.disk.y(" + num(y.x) + "," + num(y.y) + ")";
      for (int j : {0, 1}) {
        const auto r1 = boundary_identity(disk, y, BoundaryIdentity::R1, j);
        rep.add(make_check(at + ".R1.j" + std::to_string(j), "int nu_j (dG/dnu)^2 = dR/dy_j", r1.lhs, r1.rhs, 5e-2,
                           Compare::RelLe));
        for (int k = j; k < 2; ++k) {
          const auto r2 = boundary_identity(disk, y, BoundaryIdentity::R2, j, k);
          rep.add(make_check(at + ".R2.j" + std::to_string(j) + "k" + std::to_string(k),
                             "int nu_j dG/dnu d/dy_k dG/dnu = (1/2) d^2R/dy_j dy_k", r2.lhs, r2.rhs, 5e-2,
                             Compare::RelLe));
        }
      }
    }
  });
}

CheckReport far_field(Workspace& ws, const std::vector<double>& p) {
  return guarded("far_field", [&](CheckReport& rep) {
    const DomainSpec disk = DomainSpec::unit_disk();
    const RobinSolver& green = ws.robin_solver(disk, robin_h(disk));
    const char* anchor = "p u_p -> 8 pi sqrt(e) G(., x_inf) away from x_inf";
    std::vector<double> dev;
    for (double q : p) {
      const Solution& s = ws.solution(disk, q);
      dev.push_back(far_field_check(s, green, {0, 0}).u_deviation);
    }
    rep.add(make_check("far_field.disk.p" + num(p.back()) + ".deviation", anchor, dev.back(), 0.0, 0.1,
                       Compare::AbsLe));
    strictly_decreasing(rep, "far_field.disk.deviation_decreasing", anchor, p, dev);
  });
}

CheckReport eigen_structure(Workspace& ws, const std::vector<double>& p) {
  return guarded("eigen_structure", [&](CheckReport& rep) {
    const DomainSpec disk = DomainSpec::unit_disk();
    for (double q : p) {
      const Solution& s = ws.solution(disk, q);
      const SpectrumReport& r = ws.spectrum(disk, q);
      std::vector<KernelFit> f;
      for (std::size_t k = 1; k <= 3; ++k)
        f.push_back(fit_kernel(rescale_field(r.max_normalized[k], s.peak, s.eps_n, 6.0, 41), 5.0));
      const std::string t = "eigen_structure." + tag(disk, q);
      const char* odd = "rescaled v_2, v_3 -> (a . y)/(8 + |y|^2)";
      for (int k : {0, 1})
        rep.add(make_check(t + ".v" + std::to_string(k + 2) + ".b_over_a", odd, f[std::size_t(k)].b_norm() / f[std::size_t(k)].a_norm(), 0.0,
                           0.1, Compare::AbsLe));
      const double cosang = (f[0].a1 * f[1].a1 + f[0].a2 * f[1].a2) /
                            (std::hypot(f[0].a1, f[0].a2) * std::hypot(f[1].a1, f[1].a2));
      const double angle = std::acos(std::clamp(std::abs(cosang), 0.0, 1.0)) * 180.0 / kPi;
      rep.add(make_check(t + ".a2_a3_angle_deg", odd, angle, 90.0, 10.0, Compare::AbsLe));
      rep.add(make_check(t + ".v4.a_over_b", "rescaled v_4 -> b (8 - |y|^2)/(8 + |y|^2)", f[2].a_norm() / f[2].b_norm(),
                         0.0, 0.1, Compare::AbsLe));
    }
  });
}

CheckReport liouville(Workspace& ws, const std::vector<double>& p) {
  return guarded("liouville", [&](CheckReport& rep) {
    const char* ball = "int_{|y|<R} e^U = 8 pi R^2/(8 + R^2)";
    rep.add(make_check("liouville.ball_integral_sqrt8", ball, e_U_ball_integral(std::sqrt(8.0)), 4 * kPi, 1e-12,
                       Compare::AbsLe));
    for (double R : {std::sqrt(8.0), 10.0})
      rep.add(make_check("liouville.quadrature_R" + num(R), ball, e_U_ball_quadrature(R), e_U_ball_integral(R), 1e-6,
                         Compare::AbsLe));
    const char* anchor = "w_p -> U = -2 log(1 + |y|^2/8) locally uniformly";
    std::vector<double> def;
    for (double q : p) def.push_back(rescaled_deficit(rescale_solution(ws.solution(DomainSpec::unit_disk(), q), 5.0, 41), 5.0));
    rep.add(make_check("liouville.disk.p" + num(p.back()) + ".deficit", anchor, def.back(), 0.0, 0.2, Compare::AbsLe));
    strictly_decreasing(rep, "liouville.disk.deficit_decreasing", anchor, p, def);
  });
}

CheckReport pohozaev(Workspace& ws, const std::vector<double>& p) {
  return guarded("pohozaev", [&](CheckReport& rep) {
    const DomainSpec disk = DomainSpec::unit_disk();
    for (double q : p) {
      const Solution& s = ws.solution(disk, q);
      const SpectrumReport& r = ws.spectrum(disk, q);
      const std::string t = "pohozaev." + tag(disk, q);
      for (int i = 1; i <= 4; ++i) {
        const double tol = i == 1 ? 2e-2 : 5e-2;
        int which = 0;
        for (Point2 y : {s.x_n, s.x_n + Point2{0.3, 0.0}}) {
          const IdentityCheck c = pohozaev_residual(s, r, i, y);
          rep.add(make_check(t + ".v" + std::to_string(i) + ".y" + std::to_string(which++) + ".rel_residual",
                             "int (x-y).grad u dv/dnu = (1-lambda) p int u^{p-1} v ((x-y).grad u + 2u/(p-1))",
                             c.rel_residual, 0.0, tol, Compare::AbsLe));
        }
        for (int j : {0, 1}) {
          const IdentityCheck c = pohozaev_star(s, r, i, j);
          rep.add(make_check(t + ".v" + std::to_string(i) + ".star.j" + std::to_string(j) + ".rel_residual",
                             "int du/dx_j dv/dnu = (1-lambda) p int u^{p-1} du/dx_j v", c.rel_residual, 0.0, tol,
                             Compare::AbsLe));
        }
      }
    }
  });
}

CheckReport oracle_equivalence(Workspace& ws, const std::vector<double>& p) {
  return guarded("oracle", [&](CheckReport& rep) {
    auto mesh = std::make_shared<const TriMesh>(build_mesh(DomainSpec::unit_disk(), 0.1));
    const Solution coarse = newton_solve(liouville_guess(mesh, 5.0, {0, 0}), 5.0);
    const SpectrumReport it = linearized_spectrum(coarse);
    const std::vector<double> dense = dense_spectrum(coarse, int(it.eigenvalues.size()));
    double worst = 0.0;
    for (std::size_t i = 0; i < dense.size(); ++i) worst = std::max(worst, std::abs(dense[i] - it.eigenvalues[i]));
    rep.add(make_check("oracle.dense_vs_iterative.max_abs_diff", "dense and iterative eigensolvers agree", worst, 0.0,
                       1e-9, Compare::AbsLe));
    const DomainSpec disk = DomainSpec::unit_disk();
    for (double q : p) {
      const radial::RadialProfile prof = radial::shoot_radial(q);
      const radial::RadialSpectrum rs = radial::radial_spectrum(prof);
      const Solution& s = ws.solution(disk, q);
      const SpectrumReport& r = ws.spectrum(disk, q);
      const std::string t = "oracle." + tag(disk, q);
      rep.add(make_check(t + ".u_max", "FEM matches the radial oracle", s.u_max, prof.u0, 1e-2, Compare::RelLe));
      for (std::size_t i = 0; i < 4; ++i)
        rep.add(make_check(t + ".lambda" + std::to_string(i + 1), "FEM matches the radial oracle", r.eigenvalues[i],
                           rs.merged[i], 2e-2, Compare::RelLe));
    }
  });
}

}  // namespace lelab::checks
