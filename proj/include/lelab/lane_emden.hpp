#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lelab/fem.hpp"
#include "lelab/geometry.hpp"

namespace lelab {

/// A converged positive solution with its spike descriptors.
struct Solution {
  double p = 0.0;
  ScalarField u;
  Point2 x_n;                 ///< vertex carrying the maximum
  double u_max = 0.0;
  double eps_n = 0.0;         ///< [p u_max^{p-1}]^{-1/2}
  Point2 peak;                ///< maximum of a local quadratic fit around x_n
  double peak_value = 0.0;    ///< value of that fit at `peak`, >= u_max
  double energy = 0.0;        ///< p * int |grad u|^2
  double residual_norm = 0.0; ///< ||K u - F(u)|| / ||F(u)|| over interior rows
  std::string mesh_id;
  int iterations = 0;         ///< residual evaluations in the Newton loop
  bool quadratic = false;     ///< last residual ratio <= 0.3
  std::vector<double> residual_history;

  const TriMesh& mesh() const { return *u.mesh; }
};

/// eps = [p u_max^{p-1}]^{-1/2}, evaluated in log space.
double spike_scale(double p, double u_max);

/// Bubble guess t * max(0, 1 + U((x - x0)/eps)/p) with t = sqrt(e) and
/// eps = [p t^{p-1}]^{-1/2}; boundary nodes are set to zero.
ScalarField liouville_guess(std::shared_ptr<const TriMesh> mesh, double p, Point2 x0);

struct NewtonOptions {
  double tol = 1e-10;
  int max_iterations = 60;
  int max_halvings = 20;
};

/// Damped Newton on K u = F(u) with the one-sided Jacobian K - p u_+^{p-1} M.
/// Throws NewtonDiverged, PositivityLost or MaxIterations.
Solution newton_solve(const ScalarField& guess, double p, const NewtonOptions& opts = {});

/// Fills the derived fields (x_n, u_max, eps_n, energy, mesh_id) of a solution.
void finalize_solution(Solution& sol, const SparseSymMatrix& K);

struct ContinuationOptions {
  double grading = 0.25;        ///< h <= grading * distance to the peak
  double core_fraction = 0.25;  ///< local h at the peak must stay <= core_fraction * eps
  double max_eps_change = 0.3;  ///< relative change of eps per step
  double dp_initial = 0.5;
  double dp_min = 1e-3;
  std::optional<Point2> seed;   ///< overrides the Robin-minimum / centroid seed
  NewtonOptions newton;
  MeshOptions mesh;
};

struct ContinuationStep {
  double p = 0.0;
  double dp = 0.0;
  int iterations = 0;
  bool remeshed = false;
  std::size_t vertices = 0;
  double eps = 0.0;
};

struct Branch {
  DomainSpec domain;
  std::vector<Solution> solutions;  ///< one per requested p, increasing
  std::vector<ContinuationStep> steps;
  int remesh_events = 0;
};

/// Tracks the positive branch through p_values (increasing, first <= 5).
/// Errors from a failing step are rethrown with the exponent attached.
Branch continuation_sweep(const DomainSpec& domain, const std::vector<double>& p_values, double base_h,
                          const ContinuationOptions& opts = {});

/// Mesh graded toward `center` so the core size is below core_fraction * eps.
TriMesh spike_mesh(const DomainSpec& domain, double base_h, Point2 center, double eps,
                   const ContinuationOptions& opts = {});

/// Moves a solution to another mesh by nodal interpolation (zero outside).
ScalarField transfer(const ScalarField& field, std::shared_ptr<const TriMesh> target);

struct RescaledField {
  double R = 0.0;
  int n = 0;
  std::vector<double> coords;  ///< n grid coordinates on [-R, R]
  std::vector<double> w;       ///< row-major n x n, w[i*n + j] at (coords[j], coords[i])
  double at(int i, int j) const { return w[std::size_t(i * n + j)]; }
};

/// w(y) = p/m (u(z + eps y) - m) on a uniform grid over [-R, R]^2, with
/// z = sol.peak and m = sol.peak_value; w(0) = 0 by definition.
/// Throws BallEscapesDomain if the ball of radius R*eps leaves the domain.
RescaledField rescale_solution(const Solution& sol, double R, int grid_n);

/// sup over grid samples with |y| <= radius of |w - U|.
double rescaled_deficit(const RescaledField& f, double radius);

/// Local maxima above `threshold` (default half of u_max), separated by at
/// least 10 eps_n, sorted by decreasing value.
std::vector<Point2> detect_peaks(const Solution& sol, std::optional<double> threshold = {});

nlohmann::json to_json(const Solution& sol, bool include_field = true);

}  // namespace lelab
