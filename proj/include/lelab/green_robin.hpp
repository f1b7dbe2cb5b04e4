#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "lelab/fem.hpp"
#include "lelab/geometry.hpp"

namespace lelab {

/// Free-space kernel -(1/2pi) log|x - y|.
double fundamental_solution(Point2 x, Point2 y);

/// Discrete Green machinery on one mesh. The interior stiffness block is
/// factored once and reused for every source point.
class RobinSolver {
public:
  explicit RobinSolver(std::shared_ptr<const TriMesh> mesh);

  const TriMesh& mesh() const { return *mesh_; }
  const SparseSymMatrix& stiffness() const { return K_; }

  /// Nodal H(., y): harmonic, equal to -(1/2pi) log|x - y| on the boundary.
  /// Throws PointTooCloseToBoundary if dist(y, boundary) < 2h.
  Eigen::VectorXd regular_part(Point2 y) const;
  /// Nodal d/dy_k H(., y), the harmonic extension of d/dy_k of the boundary data.
  Eigen::VectorXd regular_part_dy(Point2 y, int k) const;

  /// G(x, y) = -(1/2pi) log|x-y| - H(x, y) with H from `regular_part(y)`.
  double green(Point2 x, Point2 y, const Eigen::VectorXd& H) const;
  /// dG/dy_k (x, y) with dH from `regular_part_dy(y, k)`.
  double green_dy(Point2 x, Point2 y, int k, const Eigen::VectorXd& dH) const;

  /// R(x) = H(x, x) by P1 interpolation.
  double robin_value(Point2 x) const;
  /// R(x) through the mean-value property of H(., x) over a disk around x,
  /// weighted by a smooth bump. Smooth in x, so suitable for finite differences.
  double robin_smooth(Point2 x) const;
  /// Central differences of robin_smooth with one Richardson level.
  Point2 robin_gradient(Point2 x, std::optional<double> step = {}) const;
  Sym2 robin_hessian(Point2 x, std::optional<double> step = {}) const;

  /// Consistent boundary flux of a discrete harmonic field (nodal, zero inside).
  Eigen::VectorXd harmonic_flux(const Eigen::VectorXd& field) const;

  double mesh_h() const { return h_; }
  double fd_step() const;

private:
  void check_interior(Point2 y) const;
  Eigen::VectorXd harmonic_extension(const Eigen::VectorXd& boundary_values) const;

  std::shared_ptr<const TriMesh> mesh_;
  SparseSymMatrix K_;
  std::unique_ptr<DirichletSystem> system_;
  std::unique_ptr<BoundaryFlux> flux_;
  std::unique_ptr<MeshLocator> locator_;
  double h_ = 0.0;
};

struct RobinSample {
  Point2 x;
  double R = 0.0;
};

struct RobinData {
  DomainSpec domain;
  std::vector<RobinSample> samples;
  Point2 x_inf;
  Point2 grad_R;
  Sym2 hessian;
  double mu1 = 0.0;
  double mu2 = 0.0;
  Point2 mu1_direction;
  double laplacian_R = 0.0;
  double R_inf = 0.0;
  std::vector<Point2> seeds;
  std::vector<Point2> limits;     ///< converged point per seed
  bool multiple_limits = false;
};

struct RobinOptions {
  int seed_count = 4;           ///< quasi-random seeds in addition to the centroid
  unsigned random_seed = 0;     ///< offset into the Halton sequence
  double grad_tol = 1e-9;
  int max_iterations = 50;
  int sample_grid = 0;          ///< n x n sample grid of R values (0: none)
  MeshOptions mesh;
};

/// Newton on the finite-difference gradient of R from the centroid and
/// Halton seeds. Throws NewtonDiverged, or MultipleCriticalPoints when a
/// declared-convex domain yields distinct limits.
RobinData robin_critical_point(const DomainSpec& domain, double h, const RobinOptions& opts = {});
RobinData robin_critical_point(const RobinSolver& solver, const RobinOptions& opts = {});

enum class BoundaryIdentity { G1, G2, R1, R2 };

struct IdentityResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_residual = 0.0;
};

/// Boundary integral identities for the Green function at source y.
/// G2 uses the y_j-derivative of dG/dnu in the integrand (see README).
IdentityResult boundary_identity(const RobinSolver& solver, Point2 y, BoundaryIdentity which, int j = 0,
                                 int k = 0);

double relative_residual(double lhs, double rhs);

nlohmann::json to_json(const RobinData& data);
void write_robin_csv(std::ostream& os, const RobinData& data);

}  // namespace lelab
