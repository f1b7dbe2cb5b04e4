#include "lelab/radial_oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "lelab/errors.hpp"

namespace lelab::radial {

namespace odeint = boost::numeric::odeint;

namespace {

constexpr double kPi = std::numbers::pi;

double pos_pow(double u, double e) { return u > 0.0 ? std::pow(u, e) : 0.0; }

// Series start u = a - a^p r^2/4 + p a^{2p-1} r^4/64 near r = 0.
std::array<double, 2> series_start(double p, double u0, double r) {
  const double ap = std::pow(u0, p);
  const double c4 = p * std::pow(u0, 2.0 * p - 1.0) / 64.0;
  const double r2 = r * r;
  return {u0 - ap * r2 / 4.0 + c4 * r2 * r2, -ap * r2 / 2.0 + 4.0 * c4 * r2 * r2};
}

double inner_radius(double p, double u0) {
  const double eps = 1.0 / std::sqrt(p * std::pow(u0, p - 1.0));
  return 1e-3 * eps;
}

template <std::size_t N>
auto make_stepper(double tol) {
  return odeint::make_controlled(tol, tol, odeint::runge_kutta_fehlberg78<std::array<double, N>>());
}

// u(t = 0) for a given u0.
double boundary_value(double p, double u0, double tol) {
  const double rmin = inner_radius(p, u0);
  auto s = series_start(p, u0, rmin);
  std::array<double, 2> y{s[0], s[1]};
  auto sys = [p](const std::array<double, 2>& x, std::array<double, 2>& dx, double t) {
    dx[0] = x[1];
    dx[1] = -std::exp(2.0 * t) * pos_pow(x[0], p);
  };
  odeint::integrate_adaptive(make_stepper<2>(tol), sys, y, std::log(rmin), 0.0, 1e-3);
  return y[0];
}

struct ModeSystem {
  double p;
  double m2;
  double lambda;
  // y = (u, u_t, phi, phi_t, I) with I_t = w phi u_r.
  void operator()(const std::array<double, 5>& y, std::array<double, 5>& dy, double t) const {
    const double e2 = std::exp(2.0 * t);
    const double up = pos_pow(y[0], p - 1.0);
    const double w = p * e2 * up;
    dy[0] = y[1];
    dy[1] = -e2 * up * std::max(y[0], 0.0);
    dy[2] = y[3];
    dy[3] = (m2 - lambda * w) * y[2];
    dy[4] = w * y[2] * y[1] * std::exp(-t);
  }
};

struct Sided {
  std::array<double, 5> left;
  std::array<double, 5> right;
};

class ModeShooter {
public:
  ModeShooter(const RadialProfile& prof, int m, double tol)
      : prof_(prof), m_(m), tol_(tol) {
    // Match at the peak of the weight.
    std::size_t best = 0;
    double wmax = -1.0;
    for (std::size_t i = 0; i < prof.t.size(); ++i) {
      const double w = prof.weight_t(i);
      if (w > wmax) {
        wmax = w;
        best = i;
      }
    }
    t_match_ = prof.t[best];
  }

  double t_match() const { return t_match_; }

  std::array<double, 5> left_start(double lambda) const {
    const double r = std::exp(prof_.t_min);
    auto s = series_start(prof_.p, prof_.u0, r);
    if (m_ == 0) {
      const double c = lambda * prof_.p * std::pow(prof_.u0, prof_.p - 1.0);
      return {s[0], s[1], 1.0 - c * r * r / 4.0, -c * r * r / 2.0, 0.0};
    }
    return {s[0], s[1], 1.0, static_cast<double>(m_), 0.0};
  }

  std::array<double, 5> right_start() const {
    return {0.0, prof_.u_t.back(), 0.0, 1.0, 0.0};
  }

  template <class Observer>
  std::array<double, 5> integrate(std::array<double, 5> y, double t0, double t1, double lambda,
                                  Observer&& obs) const {
    ModeSystem sys{prof_.p, double(m_ * m_), lambda};
    std::vector<double> times;
    const double sgn = t1 > t0 ? 1.0 : -1.0;
    times.push_back(t0);
    for (double t : prof_.t)
      if ((t - t0) * sgn > 0.0 && (t1 - t) * sgn > 0.0) times.push_back(t);
    if (sgn < 0.0) std::sort(times.begin() + 1, times.end(), std::greater<>());
    times.push_back(t1);
    odeint::integrate_times(make_stepper<5>(tol_), sys, y, times.begin(), times.end(), sgn * 1e-3,
                            [&](const std::array<double, 5>& x, double t) { obs(x, t); });
    return y;
  }

  std::array<double, 5> integrate(std::array<double, 5> y, double t0, double t1, double lambda) const {
    ModeSystem sys{prof_.p, double(m_ * m_), lambda};
    odeint::integrate_adaptive(make_stepper<5>(tol_), sys, y, t0, t1, (t1 > t0 ? 1e-3 : -1e-3));
    return y;
  }

  Sided shoot(double lambda) const {
    return {integrate(left_start(lambda), prof_.t_min, t_match_, lambda),
            integrate(right_start(), 0.0, t_match_, lambda)};
  }

  // Normalized Wronskian mismatch at the match point.
  double mismatch(double lambda) const {
    const auto s = shoot(lambda);
    const double wr = s.left[2] * s.right[3] - s.left[3] * s.right[2];
    return wr / (std::hypot(s.left[2], s.left[3]) * std::hypot(s.right[2], s.right[3]));
  }

  // lambda - 1 from the identity (1 - lambda) int w phi u_r dt = u_r(1) phi'(1), with
  // phi integrated inward from r = 1 at the given lambda.
  double wronskian_deviation(double lambda) const {
    auto y = integrate(right_start(), 0.0, prof_.t_min, lambda);
    const double integral = -y[4];
    return -prof_.u_t.back() * 1.0 / integral;
  }

  std::vector<double> eigenfunction(double lambda) const {
    std::vector<double> phi(prof_.t.size(), 0.0);
    std::vector<double> tl, tr;
    std::vector<double> pl, pr;
    auto yl = integrate(left_start(lambda), prof_.t_min, t_match_, lambda,
                        [&](const std::array<double, 5>& x, double t) {
                          tl.push_back(t);
                          pl.push_back(x[2]);
                        });
    auto yr = integrate(right_start(), 0.0, t_match_, lambda,
                        [&](const std::array<double, 5>& x, double t) {
                          tr.push_back(t);
                          pr.push_back(x[2]);
                        });
    const double scale = (yl[2] * yr[2] + yl[3] * yr[3]) / (yr[2] * yr[2] + yr[3] * yr[3]);
    auto assign = [&](const std::vector<double>& ts, const std::vector<double>& vs, double s) {
      for (std::size_t k = 0; k < ts.size(); ++k) {
        auto it = std::lower_bound(prof_.t.begin(), prof_.t.end(), ts[k] - 1e-12);
        if (it != prof_.t.end() && std::abs(*it - ts[k]) < 1e-9)
          phi[std::size_t(it - prof_.t.begin())] = s * vs[k];
      }
    };
    assign(tl, pl, 1.0);
    assign(tr, pr, scale);
    double mx = 0.0;
    for (double v : phi) mx = std::max(mx, std::abs(v));
    double sign = 1.0;
    for (double v : phi)
      if (std::abs(v) > 0.5 * mx) {
        sign = v > 0 ? 1.0 : -1.0;
        break;
      }
    for (double& v : phi) v *= sign / mx;
    return phi;
  }

private:
  const RadialProfile& prof_;
  int m_;
  double tol_;
  double t_match_ = 0.0;
};

// Second-order finite-volume discretization on the stored grid; eigenvalues by
// Sturm counting on the symmetric tridiagonal pencil A - lambda W.
class FdPencil {
public:
  FdPencil(const RadialProfile& prof, int m) {
    const std::size_t n = prof.t.size() - 1;  // last node is the Dirichlet boundary
    const std::size_t first = m == 0 ? 0 : 1;
    for (std::size_t i = first; i < n; ++i) {
      const double h_left = i > 0 ? prof.t[i] - prof.t[i - 1] : 0.0;
      const double h_right = prof.t[i + 1] - prof.t[i];
      const double vol = 0.5 * (h_left + h_right);
      double diag = 1.0 / h_right + (i > 0 ? 1.0 / h_left : 0.0);
      if (m > 0 && i == first) diag = 1.0 / h_right + 1.0 / h_left;
      diag_.push_back(diag + double(m * m) * vol);
      off_.push_back(i + 1 < n ? -1.0 / h_right : 0.0);
      weight_.push_back(prof.weight_t(i) * vol);
    }
  }

  std::size_t count_below(double lambda) const {
    std::size_t neg = 0;
    double d = 1.0;
    for (std::size_t i = 0; i < diag_.size(); ++i) {
      const double a = diag_[i] - lambda * weight_[i];
      d = i == 0 ? a : a - off_[i - 1] * off_[i - 1] / d;
      if (d == 0.0) d = -1e-300;
      if (d < 0.0) ++neg;
    }
    return neg;
  }

  double eigenvalue(std::size_t k) const {
    double lo = 0.0;
    double hi = 1.0;
    while (count_below(hi) < k) {
      hi *= 2.0;
      if (hi > 1e8) fail(ErrorKind::EigenFailure, "finite-difference bracket not found");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (count_below(mid) >= k ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  }

private:
  std::vector<double> diag_;
  std::vector<double> off_;
  std::vector<double> weight_;
};

}  // namespace

double RadialProfile::weight_t(std::size_t i) const {
  return p * std::exp(2.0 * t[i]) * pos_pow(u[i], p - 1.0);
}

double RadialProfile::value(double r) const {
  if (r <= 0.0) return u0;
  if (r >= 1.0) return 0.0;
  const double tt = std::log(r);
  if (tt <= t_min) return series_start(p, u0, r)[0];
  auto it = std::upper_bound(t.begin(), t.end(), tt);
  std::size_t j = std::min<std::size_t>(std::size_t(it - t.begin()), t.size() - 1);
  const std::size_t i = j - 1;
  const double h = t[j] - t[i];
  const double s = (tt - t[i]) / h;
  auto second = [&](std::size_t k) { return -std::exp(2.0 * t[k]) * pos_pow(u[k], p); };
  // Quintic Hermite on (u, u_t, u_tt).
  const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
  const double h00 = 1 - 10 * s3 + 15 * s4 - 6 * s5;
  const double h10 = s - 6 * s3 + 8 * s4 - 3 * s5;
  const double h20 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
  const double h01 = 10 * s3 - 15 * s4 + 6 * s5;
  const double h11 = -4 * s3 + 7 * s4 - 3 * s5;
  const double h21 = 0.5 * s3 - s4 + 0.5 * s5;
  return h00 * u[i] + h10 * h * u_t[i] + h20 * h * h * second(i) + h01 * u[j] + h11 * h * u_t[j] +
         h21 * h * h * second(j);
}

double RadialProfile::rescaled(double y_radius) const {
  return p * (value(eps * y_radius) / u0 - 1.0);
}

RadialProfile shoot_radial(double p, const ShootingOptions& opts) {
  require(p > 1.0, ErrorKind::InvalidArgument, "exponent must exceed 1");
  auto f = [&](double a) { return boundary_value(p, a, opts.ode_tol); };
  double lo = opts.bracket_lo, hi = opts.bracket_hi;
  double flo = f(lo), fhi = f(hi);
  if (!(flo > 0.0 && fhi < 0.0))
    fail(ErrorKind::ShootingFailed, "u(1) does not change sign for u0 in (" + std::to_string(lo) +
                                        ", " + std::to_string(hi) + ") at p=" + std::to_string(p));
  int it = 0;
  while (hi - lo > 1e-4 && it++ < opts.max_iterations) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm > 0.0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
  }
  // Safeguarded secant inside the bracket.
  double a = lo, fa = flo, b = hi, fb = fhi;
  double x = b, fx = fb;
  for (; it < opts.max_iterations; ++it) {
    double cand = b - fb * (b - a) / (fb - fa);
    if (!(cand > lo && cand < hi)) cand = 0.5 * (lo + hi);
    x = cand;
    fx = f(x);
    if (fx > 0.0) lo = x; else hi = x;
    a = b;
    fa = fb;
    b = x;
    fb = fx;
    if (std::abs(fx) <= opts.tol || hi - lo < 4e-16 * x) break;
  }
  if (std::abs(fx) > opts.tol * 100.0)
    fail(ErrorKind::ShootingFailed, "secant did not reach tolerance at p=" + std::to_string(p));

  RadialProfile prof;
  prof.p = p;
  prof.u0 = x;
  prof.eps = 1.0 / std::sqrt(p * std::pow(x, p - 1.0));
  prof.residual = std::abs(fx);
  const double rmin = inner_radius(p, x);
  prof.t_min = std::log(rmin);
  const auto n = static_cast<std::size_t>(std::ceil(-prof.t_min / opts.sample_dt));
  std::vector<double> times(n + 1);
  for (std::size_t i = 0; i <= n; ++i) times[i] = prof.t_min * (1.0 - double(i) / double(n));
  times.back() = 0.0;

  auto s = series_start(p, x, rmin);
  std::array<double, 4> y{s[0], s[1], 0.0, 0.0};
  auto sys = [p](const std::array<double, 4>& z, std::array<double, 4>& dz, double t) {
    const double e2 = std::exp(2.0 * t);
    const double up = pos_pow(z[0], p);
    dz[0] = z[1];
    dz[1] = -e2 * up;
    dz[2] = z[1] * z[1];
    dz[3] = e2 * up * std::max(z[0], 0.0);
  };
  odeint::integrate_times(make_stepper<4>(opts.ode_tol), sys, y, times.begin(), times.end(), 1e-3,
                          [&](const std::array<double, 4>& z, double t) {
                            prof.t.push_back(t);
                            prof.u.push_back(z[0]);
                            prof.u_t.push_back(z[1]);
                          });
  prof.u.back() = 0.0;
  prof.boundary_slope = prof.u_t.back();
  prof.energy = p * 2.0 * kPi * y[2];
  prof.potential = p * 2.0 * kPi * y[3];
  return prof;
}

const RadialMode& RadialSpectrum::mode(int m, int index) const {
  for (const auto& md : modes)
    if (md.m == m && md.index == index) return md;
  fail(ErrorKind::InvalidArgument, "mode not computed");
}

RadialSpectrum radial_spectrum(const RadialProfile& profile, const std::vector<int>& m_modes,
                               int count_per_mode) {
  require(count_per_mode >= 1, ErrorKind::InvalidArgument, "count_per_mode must be >= 1");
  RadialSpectrum out;
  out.p = profile.p;
  out.eps = profile.eps;
  constexpr double kShootTol = 1e-13;
  for (int m : m_modes) {
    FdPencil fd(profile, m);
    std::vector<double> fd_vals;
    for (int k = 1; k <= count_per_mode + 1; ++k) fd_vals.push_back(fd.eigenvalue(std::size_t(k)));
    ModeShooter shooter(profile, m, kShootTol);
    for (int k = 1; k <= count_per_mode; ++k) {
      const double est = fd_vals[std::size_t(k - 1)];
      double lo = k == 1 ? 0.5 * est : 0.5 * (fd_vals[std::size_t(k - 2)] + est);
      double hi = 0.5 * (est + fd_vals[std::size_t(k)]);
      auto g = [&](double l) { return shooter.mismatch(l); };
      double glo = g(lo), ghi = g(hi);
      if (glo * ghi > 0.0)
        fail(ErrorKind::EigenFailure, "shooting bracket has no sign change (m=" + std::to_string(m) +
                                          ", k=" + std::to_string(k) + ")");
      std::uintmax_t iters = 200;
      auto root = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi,
                                                    boost::math::tools::eps_tolerance<double>(52), iters);
      if (iters >= 200) fail(ErrorKind::EigenFailure, "shooting root did not converge");
      RadialMode md;
      md.m = m;
      md.index = k;
      md.lambda_fd = est;
      md.lambda = 0.5 * (root.first + root.second);
      md.lambda_minus_one = md.lambda - 1.0;
      if (m == 1 && k == 1) {
        // The translation mode sits within O(eps^2) of 1; resolve lambda - 1
        // by fixed-point iteration on the Wronskian identity against u'.
        double dev = md.lambda - 1.0;
        for (int i = 0; i < 12; ++i) {
          const double next = shooter.wronskian_deviation(1.0 + dev);
          const bool done = std::abs(next - dev) <= 1e-13 * std::abs(next);
          dev = next;
          if (done) break;
        }
        md.lambda_minus_one = dev;
        md.lambda = 1.0 + dev;
      }
      md.phi = shooter.eigenfunction(md.lambda);
      out.modes.push_back(std::move(md));
    }
  }
  struct Entry {
    double lambda, dev;
    int m;
  };
  std::vector<Entry> entries;
  for (const auto& md : out.modes) {
    const int mult = md.m == 0 ? 1 : 2;
    for (int c = 0; c < mult; ++c) entries.push_back({md.lambda, md.lambda_minus_one, md.m});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.dev < b.dev;
  });
  for (const auto& e : entries) {
    out.merged.push_back(e.lambda);
    out.merged_minus_one.push_back(e.dev);
    out.merged_m.push_back(e.m);
  }
  return out;
}

DiskRobin disk_robin(Point2 x) {
  const double r2 = dot(x, x);
  require(r2 < 1.0, ErrorKind::OutsideDisk, "point outside the unit disk");
  const double q = 1.0 - r2;
  DiskRobin out;
  out.value = -std::log(q) / (2.0 * kPi);
  out.gradient = x / (kPi * q);
  out.hessian.xx = (1.0 / q + 2.0 * x.x * x.x / (q * q)) / kPi;
  out.hessian.xy = (2.0 * x.x * x.y / (q * q)) / kPi;
  out.hessian.yy = (1.0 / q + 2.0 * x.y * x.y / (q * q)) / kPi;
  return out;
}

double disk_green(Point2 x, Point2 y) {
  const double d = distance(x, y);
  const double ny = norm(y);
  // |y| * |x - y*| with y* = y / |y|^2; tends to 1 as y -> 0.
  const double image = ny > 0.0 ? norm(x * ny - y / ny) : 1.0;
  return -(std::log(d) - std::log(image)) / (2.0 * kPi);
}

}  // namespace lelab::radial
