#pragma once

#include <array>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "lelab/geometry.hpp"

namespace lelab {

/// Compressed-row sparse matrix. Assembly always produces structurally
/// symmetric matrices.
using SparseSymMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

/// Nodal P1 field bound to the mesh it lives on.
struct ScalarField {
  std::shared_ptr<const TriMesh> mesh;
  Eigen::VectorXd values;

  ScalarField() = default;
  ScalarField(std::shared_ptr<const TriMesh> m, Eigen::VectorXd v);

  double operator[](std::size_t i) const { return values[Eigen::Index(i)]; }
  std::size_t size() const { return std::size_t(values.size()); }
};

/// 6-point, degree-4 rule on the reference triangle.
struct QuadraturePoint {
  std::array<double, 3> bary;
  double weight;  ///< sums to 1; multiply by the triangle area
};
const std::array<QuadraturePoint, 6>& triangle_rule();

/// Gradients of the three barycentric hat functions on triangle t.
std::array<Point2, 3> hat_gradients(const TriMesh& mesh, std::size_t t);

/// Throws DegenerateTriangle if any area falls below 1e-14 * h^2.
SparseSymMatrix assemble_stiffness(const TriMesh& mesh);

/// Consistent mass matrix, optionally weighted by a nonnegative nodal field
/// (interpolated at the quadrature points).
SparseSymMatrix assemble_mass(const TriMesh& mesh, const Eigen::VectorXd* weight = nullptr);

/// Mass matrix weighted by p * u_+^{p-1}, evaluated at the quadrature points
/// in log space and flushed to zero below exp(-700). With the load assembled
/// by the same rule, B u = p F(u) holds to rounding.
SparseSymMatrix assemble_linearized_mass(const TriMesh& mesh, const Eigen::VectorXd& u, double p);

Eigen::VectorXd lumped_mass(const TriMesh& mesh);

struct PowerLoad {
  Eigen::VectorXd load;          ///< int u_+^p phi_i
  std::size_t clamped_nodes = 0; ///< nodes where u < 0 was clamped
};

/// Throws Overflow if any quadrature value of u^p is non-finite.
PowerLoad assemble_power_load(const TriMesh& mesh, const Eigen::VectorXd& u, double p);

/// int u_+^{q} over the domain with the same quadrature as the load.
double integrate_power(const TriMesh& mesh, const Eigen::VectorXd& u, double q);

/// Discrete energy J(u) = 1/2 u^T K u - 1/(p+1) int u_+^{p+1}.
double lane_emden_functional(const TriMesh& mesh, const SparseSymMatrix& K, const Eigen::VectorXd& u,
                             double p);

/// Sparse symmetric factorization of a matrix restricted to interior nodes.
/// Symmetric indefinite matrices are accepted; a breakdown falls back to LU.
class DirichletSystem {
public:
  DirichletSystem(const TriMesh& mesh, const SparseSymMatrix& A);
  ~DirichletSystem();
  DirichletSystem(DirichletSystem&&) noexcept;
  DirichletSystem& operator=(DirichletSystem&&) noexcept;

  /// Solves A u = rhs on interior rows with u = 0 on the boundary.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  /// Same with prescribed boundary values g (only boundary entries of g are read).
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, const Eigen::VectorXd& g) const;

  std::size_t interior_count() const { return interior_.size(); }
  const std::vector<int>& interior() const { return interior_; }
  /// Position of each vertex among the interior unknowns, -1 on the boundary.
  const std::vector<int>& interior_index() const { return index_; }
  const SparseSymMatrix& interior_matrix() const { return A_II_; }

private:
  struct Factor;
  std::vector<int> interior_;
  std::vector<int> index_;
  SparseSymMatrix A_II_;
  SparseSymMatrix A_IB_;
  std::unique_ptr<Factor> factor_;
};

/// One-shot Dirichlet solve; throws SolveFailure on factorization breakdown.
ScalarField solve_dirichlet(const SparseSymMatrix& K, const Eigen::VectorXd& rhs,
                            std::shared_ptr<const TriMesh> mesh);

/// Boundary normal derivative of a discrete field from the consistent
/// residual: the boundary rows of K v - f, resolved against the boundary
/// mass matrix. Returns nodal values (zero at interior nodes).
class BoundaryFlux {
public:
  explicit BoundaryFlux(const TriMesh& mesh);
  Eigen::VectorXd operator()(const SparseSymMatrix& K, const Eigen::VectorXd& v,
                             const Eigen::VectorXd& f) const;
  ~BoundaryFlux();
  BoundaryFlux(BoundaryFlux&&) noexcept;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Gauss-Legendre (3-point) integral over the boundary of
/// integrand(x, normal, i0, i1, s) where s in [0,1] runs along edge (i0, i1).
template <class F>
double boundary_integral(const TriMesh& mesh, F&& integrand) {
  static constexpr double gx[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
  static constexpr double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  double total = 0.0;
  for (const auto& e : mesh.boundary_edges) {
    const Point2 a = mesh.vertices[std::size_t(e.v[0])], b = mesh.vertices[std::size_t(e.v[1])];
    const double len = distance(a, b);
    for (int q = 0; q < 3; ++q)
      total += gw[q] * len * integrand(a + (b - a) * gx[q], e.normal, e.v[0], e.v[1], gx[q]);
  }
  return total;
}

/// int over the domain of g(x) * v(x) for a nodal field v and a pointwise
/// function g, by the 6-point rule.
template <class G>
double domain_integral(const TriMesh& mesh, const Eigen::VectorXd& v, G&& g) {
  const auto& rule = triangle_rule();
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Point2 P[3] = {mesh.vertices[std::size_t(tri[0])], mesh.vertices[std::size_t(tri[1])],
                         mesh.vertices[std::size_t(tri[2])]};
    const double area = mesh.signed_area(t);
    for (const auto& q : rule) {
      const Point2 x = P[0] * q.bary[0] + P[1] * q.bary[1] + P[2] * q.bary[2];
      const double vq = q.bary[0] * v[tri[0]] + q.bary[1] * v[tri[1]] + q.bary[2] * v[tri[2]];
      total += q.weight * area * g(x) * vq;
    }
  }
  return total;
}

}  // namespace lelab
