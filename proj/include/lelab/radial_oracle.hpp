#pragma once

// Independent high-accuracy oracle on the unit disk.
//
// Positive solutions on the unit disk are radial, so the Lane-Emden problem
// reduces to u'' + u'/r + u^p = 0, u'(0) = 0, u(1) = 0. Everything here works
// in the logarithmic variable t = log r, where the ODE becomes
//
//     u_tt = -e^{2t} u^p,
//
// and a uniform t-grid is geometrically graded toward r = 0. The linearized
// eigenproblem separates into angular modes m:
//
//     -phi_tt + m^2 phi = lambda * p e^{2t} u^{p-1} phi,   phi(t = 0) = 0.

#include <vector>

#include "lelab/point.hpp"

namespace lelab::radial {

struct ShootingOptions {
  double tol = 1e-12;          ///< |u(1)| at convergence
  double ode_tol = 1e-13;      ///< relative/absolute ODE step tolerance
  double sample_dt = 1.0 / 64; ///< spacing of the stored t-grid
  double bracket_lo = 1.0;     ///< initial u0 bracket
  double bracket_hi = 2.0;
  int max_iterations = 200;
};

/// Radial solution sampled on a uniform grid in t = log r.
struct RadialProfile {
  double p = 0.0;
  double u0 = 0.0;          ///< u(0) = sup norm
  double eps = 0.0;         ///< spike scale [p u0^{p-1}]^{-1/2}
  double energy = 0.0;      ///< p * int |grad u|^2 over the disk
  double potential = 0.0;   ///< p * int u^{p+1} (equals energy for a solution)
  double boundary_slope = 0.0;  ///< u'(1) (negative)
  double residual = 0.0;    ///< |u(1)| reached by the shooting
  double t_min = 0.0;       ///< inner end of the grid; series expansion below
  std::vector<double> t;
  std::vector<double> u;
  std::vector<double> u_t;

  /// u at radius r in [0, 1] (quintic Hermite between samples, series near 0).
  double value(double r) const;
  /// Linearized weight p u^{p-1} e^{2t} at grid index i.
  double weight_t(std::size_t i) const;
  /// Rescaled profile p (u(eps |y|) / u0 - 1) at rescaled radius |y|.
  double rescaled(double y_radius) const;
};

/// Shoot on u0 so that u(1) = 0: bisection to bracket, then secant.
/// Throws ShootingFailed when u(1) does not change sign over the bracket.
RadialProfile shoot_radial(double p, const ShootingOptions& opts = {});

struct RadialMode {
  int m = 0;
  int index = 0;                 ///< 1-based within the angular mode
  double lambda = 0.0;
  double lambda_minus_one = 0.0; ///< lambda - 1 with full relative precision
  double lambda_fd = 0.0;        ///< finite-difference estimate used to bracket
  std::vector<double> phi;       ///< eigenfunction on profile.t, max |phi| = 1
};

struct RadialSpectrum {
  double p = 0.0;
  double eps = 0.0;
  std::vector<RadialMode> modes;        ///< per (m, index)
  std::vector<double> merged;           ///< sorted, m >= 1 entries doubled
  std::vector<double> merged_minus_one; ///< lambda - 1 for each merged entry
  std::vector<int> merged_m;            ///< angular mode of each merged entry

  const RadialMode& mode(int m, int index) const;
};

/// Eigenvalues of the separated linearized operator for each angular mode.
/// Finite-difference Sturm bisection locates every eigenvalue; two-sided
/// shooting polishes it; the m = 1 ground state is refined through the exact
/// Wronskian identity against u' so that lambda - 1 keeps its relative
/// precision when it is far below machine epsilon.
RadialSpectrum radial_spectrum(const RadialProfile& profile,
                               const std::vector<int>& m_modes = {0, 1, 2},
                               int count_per_mode = 2);

struct DiskRobin {
  double value = 0.0;
  Point2 gradient;
  Sym2 hessian;
};

/// Closed-form Robin function of the unit disk, R(x) = -(1/2pi) log(1 - |x|^2).
DiskRobin disk_robin(Point2 x);

/// Closed-form Dirichlet Green function of the unit disk.
double disk_green(Point2 x, Point2 y);

}  // namespace lelab::radial
