#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "lelab/lane_emden.hpp"

namespace lelab {

/// Smallest eigenpairs of K v = lambda B v with B the mass matrix weighted by
/// p u^{p-1}. Eigenfields are B-orthonormal; `max_normalized` holds the same
/// fields scaled to unit sup norm with a positive extremum.
struct SpectrumReport {
  double p = 0.0;
  double delta = 0.0;
  std::vector<double> eigenvalues;
  std::vector<ScalarField> eigenfields;
  std::vector<ScalarField> max_normalized;
  std::vector<double> residuals;  ///< ||K v - lambda B v|| / ||K v||
  int morse = 0;                  ///< #{lambda < 1 - delta}
  int augmented = 0;              ///< #{lambda <= 1 + delta}
  int iterations = 0;
};

struct SpectrumOptions {
  int count = 6;
  std::optional<double> delta;  ///< default 10 / p^2
  int guard = 6;                ///< extra block vectors beyond `count`
  int max_iterations = 400;
  double tol = 1e-10;           ///< target relative eigen-residual
  unsigned seed = 1;
};

/// Block inverse iteration on K^{-1} B with Rayleigh-Ritz in the (B, K)
/// pencil; lambda = 1/mu. Throws EigenFailure or WeightDegenerate.
SpectrumReport linearized_spectrum(const Solution& sol, const SpectrumOptions& opts = {});

/// Reference eigenvalues from a dense generalized solve of the interior
/// pencil. Throws InvalidArgument above `max_dofs` interior unknowns.
std::vector<double> dense_spectrum(const Solution& sol, int count, std::size_t max_dofs = 800);

struct MorseCount {
  int m = 0;
  int m0 = 0;
  std::vector<int> near_degenerate;  ///< 0-based indices with |lambda - 1| <= delta
};

MorseCount morse_index(const std::vector<double>& eigenvalues, double delta);
MorseCount morse_index(const SpectrumReport& report);

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_residual = 0.0;
};

/// Boundary/interior identity for eigenpair i (1-based) and centre y:
/// int_{dOmega} (x-y).grad u dv/dnu = (1 - lambda) p int u^{p-1} v ((x-y).grad u + 2u/(p-1)).
IdentityCheck pohozaev_residual(const Solution& sol, const SpectrumReport& report, int i, Point2 y);

/// Translation identity for eigenpair i (1-based) and direction j:
/// int_{dOmega} du/dx_j dv/dnu = (1 - lambda) p int u^{p-1} du/dx_j v.
IdentityCheck pohozaev_star(const Solution& sol, const SpectrumReport& report, int i, int j);

/// |<v_1, u>_B| / (|v_1|_B |u|_B).
double collinearity_with_solution(const Solution& sol, const SpectrumReport& report);

nlohmann::json to_json(const SpectrumReport& report, bool include_fields = false);

}  // namespace lelab
