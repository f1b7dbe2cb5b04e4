#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "lelab/errors.hpp"
#include "lelab/spectral.hpp"

using namespace lelab;

namespace {

class DiskSpectra : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    const Branch b = continuation_sweep(DomainSpec::unit_disk(), {5, 40, 80}, 0.05);
    s40_ = new Solution(b.solutions[1]);
    s80_ = new Solution(b.solutions[2]);
    r40_ = new SpectrumReport(linearized_spectrum(*s40_));
    r80_ = new SpectrumReport(linearized_spectrum(*s80_));
  }
  static void TearDownTestSuite() {
    delete s40_;
    delete s80_;
    delete r40_;
    delete r80_;
  }
  static Solution* s40_;
  static Solution* s80_;
  static SpectrumReport* r40_;
  static SpectrumReport* r80_;
};
Solution* DiskSpectra::s40_ = nullptr;
Solution* DiskSpectra::s80_ = nullptr;
SpectrumReport* DiskSpectra::r40_ = nullptr;
SpectrumReport* DiskSpectra::r80_ = nullptr;

Solution coarse_solution(double h, double p) {
  auto mesh = std::make_shared<const TriMesh>(build_mesh(DomainSpec::unit_disk(), h));
  return newton_solve(liouville_guess(mesh, p, {0, 0}), p);
}

}  // namespace

TEST_F(DiskSpectra, FirstEigenpairIsTheSolution) {
  for (auto [s, r] : {std::pair{s40_, r40_}, std::pair{s80_, r80_}}) {
    EXPECT_NEAR(r->eigenvalues[0] * s->p, 1.0, 1e-6);
    EXPECT_GE(collinearity_with_solution(*s, *r), 1.0 - 1e-6);
    const Eigen::VectorXd diff = r->max_normalized[0].values - s->u.values / s->u_max;
    EXPECT_LE(diff.cwiseAbs().maxCoeff(), 1e-4);
  }
  EXPECT_NEAR(r40_->eigenvalues[0], 0.025, 1e-6);
}

TEST_F(DiskSpectra, SortedResidualsAndBOrthonormality) {
  for (const auto* r : {r40_, r80_}) {
    ASSERT_EQ(r->eigenvalues.size(), 6u);
    for (std::size_t i = 1; i < r->eigenvalues.size(); ++i) EXPECT_LE(r->eigenvalues[i - 1], r->eigenvalues[i]);
    for (double res : r->residuals) EXPECT_LE(res, 1e-8);
  }
  const SparseSymMatrix B = assemble_linearized_mass(s40_->mesh(), s40_->u.values, s40_->p);
  for (std::size_t i = 0; i < r40_->eigenfields.size(); ++i)
    for (std::size_t j = 0; j < r40_->eigenfields.size(); ++j) {
      const double g = r40_->eigenfields[i].values.dot(B * r40_->eigenfields[j].values);
      EXPECT_NEAR(g, i == j ? 1.0 : 0.0, 1e-8) << i << "," << j;
    }
  for (const auto& f : r40_->max_normalized) EXPECT_DOUBLE_EQ(f.values.maxCoeff(), 1.0);
}

TEST_F(DiskSpectra, RotationalPairAndRadialMode) {
  EXPECT_NEAR(r40_->eigenvalues[2] / r40_->eigenvalues[1], 1.0, 1e-2);
  const double l4 = r80_->eigenvalues[3] - 1.0;
  EXPECT_NEAR(l4 / (6.0 / 80.0), 1.0, 0.15);
}

TEST_F(DiskSpectra, MorseIndexAtP80) {
  const MorseCount mc = morse_index(*r80_);
  EXPECT_EQ(mc.m, 1);
  EXPECT_LE(mc.m, mc.m0);
  EXPECT_DOUBLE_EQ(r80_->delta, 10.0 / (80.0 * 80.0));
}

TEST_F(DiskSpectra, PohozaevForFirstEigenpair) {
  for (Point2 y : {s40_->x_n, s40_->x_n + Point2{0.3, 0.0}}) {
    const IdentityCheck c = pohozaev_residual(*s40_, *r40_, 1, y);
    EXPECT_LE(c.rel_residual, 2e-2) << c.lhs << " vs " << c.rhs;
  }
  EXPECT_THROW(pohozaev_residual(*s40_, *r40_, 7, s40_->x_n), LabError);
}

TEST_F(DiskSpectra, JsonCarriesIndices) {
  const auto j = to_json(*r80_);
  EXPECT_EQ(j["eigenvalues"].size(), 6u);
  EXPECT_EQ(j["morse_index"], r80_->morse);
  EXPECT_EQ(j["augmented_index"], r80_->augmented);
  EXPECT_FALSE(j.contains("eigenfields"));
  EXPECT_EQ(to_json(*r80_, true)["eigenfields"].size(), 6u);
}

TEST(Morse, SyntheticBands) {
  const MorseCount a = morse_index({0.02, 0.9995, 1.2}, 1e-3);
  EXPECT_EQ(a.m, 1);
  EXPECT_EQ(a.m0, 2);
  ASSERT_EQ(a.near_degenerate.size(), 1u);
  EXPECT_EQ(a.near_degenerate[0], 1);
  const MorseCount b = morse_index({0.02, 1.5, 1.6}, 1e-3);
  EXPECT_EQ(b.m, 1);
  EXPECT_EQ(b.m0, 1);
}

TEST(Morse, CountsMonotoneInBand) {
  const std::vector<double> lam = {0.01, 0.97, 0.999, 1.0, 1.001, 1.02, 1.3};
  int prev_m = 1 << 30, prev_m0 = -1;
  for (double d : {0.0, 1e-4, 1e-3, 1e-2, 5e-2, 0.5}) {
    const MorseCount mc = morse_index(lam, d);
    EXPECT_LE(mc.m, prev_m);  // m can only lose entries as the band widens
    EXPECT_GE(mc.m0, prev_m0);
    EXPECT_LE(mc.m, mc.m0);
    prev_m = mc.m;
    prev_m0 = mc.m0;
  }
}

TEST(Spectrum, DenseReferenceAgrees) {
  const Solution s = coarse_solution(0.1, 5.0);
  const std::size_t dofs = std::count(s.mesh().boundary_vertex.begin(), s.mesh().boundary_vertex.end(), false);
  ASSERT_LE(dofs, 800u);
  const SpectrumReport r = linearized_spectrum(s);
  const std::vector<double> dense = dense_spectrum(s, 6);
  ASSERT_EQ(dense.size(), r.eigenvalues.size());
  for (std::size_t i = 0; i < dense.size(); ++i) EXPECT_NEAR(r.eigenvalues[i], dense[i], 1e-9) << i;
}

TEST(Spectrum, DenseRefusesLargeMeshes) {
  const Solution s = coarse_solution(0.1, 5.0);
  EXPECT_THROW(dense_spectrum(s, 6, 10), LabError);
}

TEST(Spectrum, WeightDegenerateOnUnresolvedSpike) {
  auto mesh = std::make_shared<const TriMesh>(build_mesh(DomainSpec::unit_disk(), 0.1));
  Solution s;
  s.p = 400;
  Eigen::VectorXd u = Eigen::VectorXd::Constant(Eigen::Index(mesh->vertices.size()), 0.1);
  for (std::size_t i = 0; i < mesh->vertices.size(); ++i)
    if (mesh->boundary_vertex[i]) u[Eigen::Index(i)] = 0.0;
  s.u = ScalarField(mesh, u);
  s.u_max = 0.1;
  try {
    linearized_spectrum(s);
    ADD_FAILURE() << "degenerate weight accepted";
  } catch (const LabError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::WeightDegenerate);
  }
}
