#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include <json.hpp>

#include "lelab/green_robin.hpp"
#include "lelab/lane_emden.hpp"
#include "lelab/spectral.hpp"

namespace lelab {

/// U(y) = -2 log(1 + |y|^2 / 8).
double liouville_U(Point2 y);
/// int_{|y| < R} e^U = 8 pi R^2 / (8 + R^2).
double e_U_ball_integral(double R);
/// The same integral by 2D quadrature: periodic trapezoid in the angle,
/// adaptive Gauss-Kronrod in the radius.
double e_U_ball_quadrature(double R, int angular_points = 64);

struct KernelFit {
  double a1 = 0.0;
  double a2 = 0.0;
  double b = 0.0;
  double rel_residual = 0.0;  ///< ||v - fit|| / ||v|| over the samples
  std::size_t samples = 0;

  /// Coefficients against max-normalized basis columns: the odd modes peak
  /// at |y| = sqrt 8 with value 1 / (2 sqrt 8); the radial mode has max 1.
  double a_norm() const;
  double b_norm() const;
};

/// Least squares of samples onto y1/(8+|y|^2), y2/(8+|y|^2), (8-|y|^2)/(8+|y|^2)
/// over grid points with |y| <= R_fit. Throws RankDeficient.
KernelFit fit_kernel(const RescaledField& samples, double R_fit);

/// Samples f(center + eps y) on a uniform grid over [-R, R]^2. Throws
/// BallEscapesDomain if the window leaves the mesh.
RescaledField rescale_field(const ScalarField& f, Point2 center, double eps, double R, int grid_n);

struct PredictionReport {
  double p = 0.0;
  double eps = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double lambda2_hat = 0.0;
  double lambda3_hat = 0.0;
  double lambda4_hat = 0.0;
  std::optional<double> lambda2, lambda3, lambda4;  ///< computed counterparts
  std::optional<double> lambda2_gap, lambda3_gap, lambda4_gap;
  double u_max = 0.0;
  double energy = 0.0;
  double energy_gap = 0.0;  ///< |p E - 8 pi e| / (8 pi e)
  double u_max_gap = 0.0;   ///< |u_max - sqrt e|
  std::optional<double> far_field_deviation;
};

/// Predictions from (p, eps, mu1, mu2) only.
PredictionReport predict(const Solution& sol, const RobinData& robin);
/// Adds computed eigenvalues and relative gaps of (lambda - 1) against the predictions.
void attach_spectrum(PredictionReport& rep, const SpectrumReport& spectrum);

struct FarFieldReport {
  double u_deviation = 0.0;
  std::optional<double> v4_deviation;
  std::optional<double> v4_scale;
  std::optional<double> v23_deviation;  ///< worst of v2, v3 against the dG/dy_j span
  std::size_t samples = 0;
  double inner = 0.0;
  double outer = 0.0;
};

/// Compares p u / (8 pi sqrt e) with G(., x_inf) on the annulus
/// 0.25 diam <= |x - x_inf| <= 0.45 diam, plus shape deviations of the
/// eigenfields when a spectrum is given. Throws AnnulusEscapesDomain.
FarFieldReport far_field_check(const Solution& sol, const RobinSolver& green, Point2 x_inf,
                               const SpectrumReport* spectrum = nullptr);

struct Extrapolation {
  double limit = 0.0;
  std::vector<double> coefficients;  ///< c0, c1 [, c2] in powers of 1/p
  double residual = 0.0;             ///< rms misfit of the model
};

/// Least squares in 1/p: c0 + c1/p, plus c2/p^2 from four values on. Throws InsufficientData.
Extrapolation extrapolate(const std::vector<double>& p, const std::vector<double>& values);

struct SandwichVerdict {
  int m_x = 0;   ///< #{mu < 0} of the Robin Hessian
  int m0_x = 0;  ///< #{mu <= 0}
  int m = 0;
  int m0 = 0;
  bool holds = false;
};

/// 1 + m(x_inf) <= m(u) <= m0(u) <= 1 + m0(x_inf) <= 2 with a zero band 1e-8 |mu2|.
SandwichVerdict morse_sandwich_check(const SpectrumReport& spectrum, const RobinData& robin);
SandwichVerdict morse_sandwich_check(const MorseCount& counts, double mu1, double mu2);

/// Non-increasing check along a sweep, tolerating `inversions` local increases.
bool non_increasing(const std::vector<double>& gaps, int inversions = 1);

nlohmann::json to_json(const PredictionReport& r);
nlohmann::json to_json(const KernelFit& f);
nlohmann::json to_json(const FarFieldReport& f);
nlohmann::json to_json(const SandwichVerdict& v);

/// Sweep table, columns: p,u_max,pE,lambda1..lambda4,lambda2_hat..lambda4_hat,energy_gap,u_max_gap.
void write_sweep_csv(std::ostream& os, const std::vector<PredictionReport>& rows,
                     const std::vector<std::vector<double>>& eigenvalues);
inline constexpr const char* kSweepCsvHeader =
    "p,u_max,pE,lambda1,lambda2,lambda3,lambda4,lambda2_hat,lambda3_hat,lambda4_hat,energy_gap,u_max_gap";

}  // namespace lelab
