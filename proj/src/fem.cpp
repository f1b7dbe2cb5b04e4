#include "lelab/fem.hpp"

#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "lelab/errors.hpp"

namespace lelab {

namespace {

using Triplets = std::vector<Eigen::Triplet<double, int>>;

SparseSymMatrix from_triplets(std::size_t n, const Triplets& trips) {
  SparseSymMatrix m{Eigen::Index(n), Eigen::Index(n)};
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

// Weighted element mass: sum_q w_q A c_q phi_i phi_j with c_q from `weight_at`.
template <class W>
SparseSymMatrix weighted_mass(const TriMesh& mesh, W&& weight_at) {
  const auto& rule = triangle_rule();
  Triplets trips;
  trips.reserve(mesh.triangles.size() * 9);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& v = mesh.triangles[t];
    const double area = mesh.signed_area(t);
    double local[3][3] = {};
    bool any = false;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double c = weight_at(t, q);
      if (c == 0.0) continue;
      any = true;
      const auto& b = rule[q].bary;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) local[i][j] += rule[q].weight * area * c * b[std::size_t(i)] * b[std::size_t(j)];
    }
    if (!any) continue;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trips.emplace_back(v[std::size_t(i)], v[std::size_t(j)], local[i][j]);
  }
  return from_triplets(mesh.vertices.size(), trips);
}

double interp(const Eigen::VectorXd& u, const std::array<int, 3>& v, const std::array<double, 3>& b) {
  // Written relative to the first vertex so constant fields interpolate exactly.
  const double u0 = u[v[0]];
  return u0 + b[1] * (u[v[1]] - u0) + b[2] * (u[v[2]] - u0);
}

}  // namespace

ScalarField::ScalarField(std::shared_ptr<const TriMesh> m, Eigen::VectorXd v)
    : mesh(std::move(m)), values(std::move(v)) {
  require(mesh != nullptr, ErrorKind::InvalidArgument, "field without a mesh");
  require(std::size_t(values.size()) == mesh->vertices.size(), ErrorKind::InvalidArgument,
          "field size does not match the vertex count");
  require(values.allFinite(), ErrorKind::InvalidArgument, "field has non-finite values");
}

const std::array<QuadraturePoint, 6>& triangle_rule() {
  static const std::array<QuadraturePoint, 6> rule = [] {
    constexpr double a = 0.445948490915965, wa = 0.223381589678011;
    constexpr double b = 0.091576213509771, wb = 0.109951743655322;
    return std::array<QuadraturePoint, 6>{{{{a, a, 1 - 2 * a}, wa},
                                           {{a, 1 - 2 * a, a}, wa},
                                           {{1 - 2 * a, a, a}, wa},
                                           {{b, b, 1 - 2 * b}, wb},
                                           {{b, 1 - 2 * b, b}, wb},
                                           {{1 - 2 * b, b, b}, wb}}};
  }();
  return rule;
}

std::array<Point2, 3> hat_gradients(const TriMesh& mesh, std::size_t t) {
  const auto& v = mesh.triangles[t];
  const Point2 P[3] = {mesh.vertices[std::size_t(v[0])], mesh.vertices[std::size_t(v[1])],
                       mesh.vertices[std::size_t(v[2])]};
  const double twice = cross(P[1] - P[0], P[2] - P[0]);
  std::array<Point2, 3> g;
  for (int k = 0; k < 3; ++k) {
    const Point2 e = P[(k + 2) % 3] - P[(k + 1) % 3];
    g[std::size_t(k)] = Point2{-e.y, e.x} / twice;
  }
  return g;
}

SparseSymMatrix assemble_stiffness(const TriMesh& mesh) {
  Triplets trips;
  trips.reserve(mesh.triangles.size() * 9);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const double area = mesh.signed_area(t);
    const double h = mesh.longest_edge(t);
    if (!(area >= 1e-14 * h * h))
      fail(ErrorKind::DegenerateTriangle, "triangle " + std::to_string(t) + " has area " + std::to_string(area));
    const auto g = hat_gradients(mesh, t);
    const auto& v = mesh.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trips.emplace_back(v[std::size_t(i)], v[std::size_t(j)], area * dot(g[std::size_t(i)], g[std::size_t(j)]));
  }
  return from_triplets(mesh.vertices.size(), trips);
}

SparseSymMatrix assemble_mass(const TriMesh& mesh, const Eigen::VectorXd* weight) {
  if (weight) {
    require(std::size_t(weight->size()) == mesh.vertices.size(), ErrorKind::InvalidArgument,
            "weight size does not match the vertex count");
    for (Eigen::Index i = 0; i < weight->size(); ++i)
      if (!((*weight)[i] >= 0.0))
        fail(ErrorKind::NegativeWeight, "weight is negative at vertex " + std::to_string(i));
  }
  const auto& rule = triangle_rule();
  return weighted_mass(mesh, [&](std::size_t t, std::size_t q) {
    return weight ? interp(*weight, mesh.triangles[t], rule[q].bary) : 1.0;
  });
}

SparseSymMatrix assemble_linearized_mass(const TriMesh& mesh, const Eigen::VectorXd& u, double p) {
  const auto& rule = triangle_rule();
  const double log_p = std::log(p);
  return weighted_mass(mesh, [&](std::size_t t, std::size_t q) {
    const double uq = interp(u, mesh.triangles[t], rule[q].bary);
    if (uq <= 0.0) return 0.0;
    const double e = log_p + (p - 1.0) * std::log(uq);
    return e < -700.0 ? 0.0 : std::exp(e);
  });
}

Eigen::VectorXd lumped_mass(const TriMesh& mesh) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(Eigen::Index(mesh.vertices.size()));
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const double a3 = mesh.signed_area(t) / 3.0;
    for (int v : mesh.triangles[t]) d[v] += a3;
  }
  return d;
}

PowerLoad assemble_power_load(const TriMesh& mesh, const Eigen::VectorXd& u, double p) {
  require(p > 1.0, ErrorKind::InvalidArgument, "p must exceed 1");
  PowerLoad out;
  out.load = Eigen::VectorXd::Zero(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (u[i] < 0.0) ++out.clamped_nodes;
  const auto& rule = triangle_rule();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& v = mesh.triangles[t];
    const double area = mesh.signed_area(t);
    for (const auto& q : rule) {
      const double uq = std::max(0.0, interp(u, v, q.bary));
      if (uq == 0.0) continue;
      const double f = std::pow(uq, p);
      if (!std::isfinite(f)) fail(ErrorKind::Overflow, "u^p overflows in triangle " + std::to_string(t));
      for (int k = 0; k < 3; ++k) out.load[v[std::size_t(k)]] += q.weight * area * f * q.bary[std::size_t(k)];
    }
  }
  return out;
}

double integrate_power(const TriMesh& mesh, const Eigen::VectorXd& u, double q_exp) {
  const auto& rule = triangle_rule();
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const double area = mesh.signed_area(t);
    for (const auto& q : rule) {
      const double uq = std::max(0.0, interp(u, mesh.triangles[t], q.bary));
      if (uq > 0.0) total += q.weight * area * std::pow(uq, q_exp);
    }
  }
  return total;
}

double lane_emden_functional(const TriMesh& mesh, const SparseSymMatrix& K, const Eigen::VectorXd& u,
                             double p) {
  return 0.5 * u.dot(K * u) - integrate_power(mesh, u, p + 1.0) / (p + 1.0);
}

// ---------------------------------------------------------------- Dirichlet

struct DirichletSystem::Factor {
  using ColMajor = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
  Eigen::SimplicialLDLT<ColMajor> ldlt;
  std::unique_ptr<Eigen::SparseLU<ColMajor>> lu;

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = lu ? Eigen::VectorXd(lu->solve(b)) : Eigen::VectorXd(ldlt.solve(b));
    return x;
  }
};

DirichletSystem::DirichletSystem(const TriMesh& mesh, const SparseSymMatrix& A)
    : index_(mesh.vertices.size(), -1), factor_(std::make_unique<Factor>()) {
  require(std::size_t(A.rows()) == mesh.vertices.size(), ErrorKind::InvalidArgument,
          "matrix size does not match the mesh");
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    if (!mesh.boundary_vertex[i]) {
      index_[i] = int(interior_.size());
      interior_.push_back(int(i));
    }
  const auto ni = Eigen::Index(interior_.size());
  std::vector<int> bindex(mesh.vertices.size(), -1);
  Triplets tii, tib;
  for (Eigen::Index r = 0; r < A.outerSize(); ++r) {
    const int ri = index_[std::size_t(r)];
    if (ri < 0) continue;
    for (SparseSymMatrix::InnerIterator it(A, r); it; ++it) {
      const int ci = index_[std::size_t(it.col())];
      if (ci >= 0) tii.emplace_back(ri, ci, it.value());
      else tib.emplace_back(ri, int(it.col()), it.value());
    }
  }
  A_II_.resize(ni, ni);
  A_II_.setFromTriplets(tii.begin(), tii.end());
  A_II_.makeCompressed();
  A_IB_.resize(ni, A.cols());
  A_IB_.setFromTriplets(tib.begin(), tib.end());
  A_IB_.makeCompressed();
  if (ni == 0) return;

  Factor::ColMajor cm = A_II_;
  factor_->ldlt.compute(cm);
  bool ok = factor_->ldlt.info() == Eigen::Success;
  if (ok) {
    const Eigen::VectorXd d = factor_->ldlt.vectorD();
    const double scale = d.cwiseAbs().maxCoeff();
    ok = d.allFinite() && d.cwiseAbs().minCoeff() > 1e-13 * scale;
  }
  if (!ok) {
    factor_->lu = std::make_unique<Eigen::SparseLU<Factor::ColMajor>>();
    factor_->lu->analyzePattern(cm);
    factor_->lu->factorize(cm);
    if (factor_->lu->info() != Eigen::Success)
      fail(ErrorKind::SolveFailure, "sparse factorization failed: " + factor_->lu->lastErrorMessage());
  }
}

DirichletSystem::~DirichletSystem() = default;
DirichletSystem::DirichletSystem(DirichletSystem&&) noexcept = default;
DirichletSystem& DirichletSystem::operator=(DirichletSystem&&) noexcept = default;

Eigen::VectorXd DirichletSystem::solve(const Eigen::VectorXd& rhs) const {
  return solve(rhs, Eigen::VectorXd::Zero(Eigen::Index(index_.size())));
}

Eigen::VectorXd DirichletSystem::solve(const Eigen::VectorXd& rhs, const Eigen::VectorXd& g) const {
  const auto n = Eigen::Index(index_.size());
  require(rhs.size() == n && g.size() == n, ErrorKind::InvalidArgument, "vector size mismatch");
  Eigen::VectorXd gb = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (index_[std::size_t(i)] < 0) gb[i] = g[i];
  Eigen::VectorXd b(Eigen::Index(interior_.size()));
  for (std::size_t k = 0; k < interior_.size(); ++k) b[Eigen::Index(k)] = rhs[interior_[k]];
  b -= A_IB_ * gb;
  Eigen::VectorXd x = interior_.empty() ? Eigen::VectorXd() : factor_->solve(b);
  if (!x.allFinite()) fail(ErrorKind::SolveFailure, "solution is not finite");
  // One step of iterative refinement keeps the interior residual at rounding level.
  if (!interior_.empty()) x += factor_->solve(b - A_II_ * x);
  Eigen::VectorXd out = gb;
  for (std::size_t k = 0; k < interior_.size(); ++k) out[interior_[k]] = x[Eigen::Index(k)];
  return out;
}

ScalarField solve_dirichlet(const SparseSymMatrix& K, const Eigen::VectorXd& rhs,
                            std::shared_ptr<const TriMesh> mesh) {
  DirichletSystem sys(*mesh, K);
  return ScalarField(mesh, sys.solve(rhs));
}

// ---------------------------------------------------------------- boundary flux

struct BoundaryFlux::Impl {
  using ColMajor = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
  std::vector<int> nodes;
  std::vector<int> slot;
  Eigen::SimplicialLLT<ColMajor> mass;
};

BoundaryFlux::BoundaryFlux(const TriMesh& mesh) : impl_(std::make_unique<Impl>()) {
  impl_->slot.assign(mesh.vertices.size(), -1);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    if (mesh.boundary_vertex[i]) {
      impl_->slot[i] = int(impl_->nodes.size());
      impl_->nodes.push_back(int(i));
    }
  Triplets trips;
  for (const auto& e : mesh.boundary_edges) {
    const double len = distance(mesh.vertices[std::size_t(e.v[0])], mesh.vertices[std::size_t(e.v[1])]);
    const int a = impl_->slot[std::size_t(e.v[0])], b = impl_->slot[std::size_t(e.v[1])];
    trips.emplace_back(a, a, len / 3.0);
    trips.emplace_back(b, b, len / 3.0);
    trips.emplace_back(a, b, len / 6.0);
    trips.emplace_back(b, a, len / 6.0);
  }
  const auto nb = Eigen::Index(impl_->nodes.size());
  Impl::ColMajor M(nb, nb);
  M.setFromTriplets(trips.begin(), trips.end());
  impl_->mass.compute(M);
  if (impl_->mass.info() != Eigen::Success) fail(ErrorKind::SolveFailure, "boundary mass factorization failed");
}

BoundaryFlux::~BoundaryFlux() = default;
BoundaryFlux::BoundaryFlux(BoundaryFlux&&) noexcept = default;

Eigen::VectorXd BoundaryFlux::operator()(const SparseSymMatrix& K, const Eigen::VectorXd& v,
                                         const Eigen::VectorXd& f) const {
  const Eigen::VectorXd r = K * v - f;
  Eigen::VectorXd rb(Eigen::Index(impl_->nodes.size()));
  for (std::size_t k = 0; k < impl_->nodes.size(); ++k) rb[Eigen::Index(k)] = r[impl_->nodes[k]];
  const Eigen::VectorXd q = impl_->mass.solve(rb);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  for (std::size_t k = 0; k < impl_->nodes.size(); ++k) out[impl_->nodes[k]] = q[Eigen::Index(k)];
  return out;
}

}  // namespace lelab
