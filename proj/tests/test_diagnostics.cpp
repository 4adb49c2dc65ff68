#include "fixtures.hpp"

#include "mrld/diagnostics.hpp"
#include "mrld/error.hpp"
#include "mrld/estimators.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace mrld {
namespace {

TEST(Assess, Identity) {
  const DiagnosticsReport r = assess(Eigen::MatrixXd::Identity(3, 3));
  EXPECT_DOUBLE_EQ(r.determinant, 1.0);
  EXPECT_DOUBLE_EQ(r.condition_number, 1.0);
  ASSERT_TRUE(r.max_abs_inverse_element);
  EXPECT_DOUBLE_EQ(*r.max_abs_inverse_element, 1.0);
  EXPECT_FALSE(r.singular);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Assess, TwoByTwoClosedForm) {
  Eigen::Matrix2d m;
  m << 1, 0.99, 0.99, 1;
  const DiagnosticsReport r = assess(m);
  EXPECT_NEAR(*r.max_abs_inverse_element, 1.0 / (1.0 - 0.99 * 0.99), 1e-8);
  EXPECT_NEAR(r.determinant, 1.0 - 0.99 * 0.99, 1e-14);
  EXPECT_NEAR(r.condition_number, 1.99 / 0.01, 1e-8);
  EXPECT_NEAR(r.min_eigenvalue, 0.01, 1e-14);
}

TEST(Assess, DuplicatedColumnIsSingular) {
  Eigen::Matrix3d m;
  m << 1, 1, 0.3, 1, 1, 0.3, 0.3, 0.3, 1;
  const DiagnosticsReport r = assess(m);
  EXPECT_TRUE(r.singular);
  EXPECT_EQ(r.determinant, 0.0);
  EXPECT_FALSE(r.max_abs_inverse_element);
  EXPECT_TRUE(std::isinf(r.condition_number));
  EXPECT_TRUE(r.has_warning(warning::kSingular));
}

TEST(Assess, ConditionWarnings) {
  Eigen::Matrix2d near;
  near << 1, 1 - 1e-7, 1 - 1e-7, 1;
  const DiagnosticsReport a = assess(near);
  EXPECT_TRUE(a.has_warning(warning::kNearSingular));
  EXPECT_FALSE(a.has_warning(warning::kUnreliable));
  Eigen::Matrix2d worse;
  worse << 1, 1 - 1e-13, 1 - 1e-13, 1;
  EXPECT_TRUE(assess(worse).has_warning(warning::kUnreliable));
}

TEST(Assess, IndefiniteMatrixHasNoInverseStatistic) {
  Eigen::Matrix2d m;
  m << 1, 2, 2, 1;
  const DiagnosticsReport r = assess(m);
  EXPECT_LT(r.min_eigenvalue, 0.0);
  EXPECT_FALSE(r.max_abs_inverse_element);
  EXPECT_EQ(r.determinant_sign, -1);
  EXPECT_NEAR(r.determinant, -3.0, 1e-12);
  EXPECT_TRUE(r.has_warning(warning::kNotPositiveDefinite));
}

TEST(Assess, ScalingInvariance) {
  std::mt19937_64 rng(41);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t j = 2 + rep % 8;
    const Eigen::MatrixXd m = fixtures::random_correlation(j, rng);
    const double c = 0.1 + 0.2 * rep;
    const DiagnosticsReport a = assess(m);
    const DiagnosticsReport b = assess(c * m);
    EXPECT_NEAR(b.condition_number, a.condition_number, 1e-8 * a.condition_number);
    const double expected = a.determinant * std::pow(c, static_cast<double>(j));
    EXPECT_NEAR(b.determinant, expected, 1e-8 * std::abs(expected));
  }
}

TEST(Assess, LargeDeterminantDoesNotUnderflowInLogSpace) {
  const Eigen::MatrixXd m = 0.01 * Eigen::MatrixXd::Identity(200, 200);
  const DiagnosticsReport r = assess(m);
  EXPECT_NEAR(r.log_abs_determinant, 200 * std::log(0.01), 1e-9);
  EXPECT_FALSE(r.singular);
}

TEST(Assess, InverseElementMatchesColumnSolves) {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t j = 2 + rep % 12;
    const Eigen::MatrixXd m = fixtures::random_correlation(j, rng, 1);
    const Eigen::LLT<Eigen::MatrixXd> llt(m);
    double max_el = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const Eigen::VectorXd col = llt.solve(Eigen::VectorXd::Unit(m.cols(), c));
      max_el = std::max(max_el, col.cwiseAbs().maxCoeff());
    }
    EXPECT_NEAR(*assess(m).max_abs_inverse_element, max_el, 1e-10 * max_el);
  }
}

TEST(RidgeAdjust, AddsEpsilonToDiagonal) {
  const CorrelationMatrix r = ridge_adjust(CorrelationMatrix::identity({"a", "b"}), 0.1);
  EXPECT_DOUBLE_EQ(r(0, 0), 1.1);
  EXPECT_DOUBLE_EQ(r(1, 1), 1.1);
  EXPECT_EQ(r(0, 1), 0.0);
  EXPECT_TRUE(r.is_ridge_adjusted());
  EXPECT_DOUBLE_EQ(r.ridge_epsilon(), 0.1);
}

TEST(RidgeAdjust, RaisesMinimumEigenvalueByEpsilon) {
  std::mt19937_64 rng(43);
  for (int rep = 0; rep < 30; ++rep) {
    const CorrelationMatrix c(fixtures::make_ids(6), fixtures::random_correlation(6, rng));
    const double eps = 0.01 * (rep + 1);
    const double before = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c.values()).eigenvalues()[0];
    const double after = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(ridge_adjust(c, eps).values())
                             .eigenvalues()[0];
    EXPECT_NEAR(after - before, eps, 1e-12);
  }
}

TEST(RidgeAdjust, NonPositiveEpsilonRejected) {
  EXPECT_THROW(ridge_adjust(CorrelationMatrix::identity({"a"}), 0.0), Error);
}

TEST(RidgeSensitivity, WellConditionedShiftIsReported) {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto base = fixtures::well_conditioned_base(15, seed);
    const RidgeSensitivity r = ridge_sensitivity(base.summary, base.corr, 1e-3);
    EXPECT_TRUE(std::isfinite(r.shift_in_se));
    worst = std::max(worst, r.shift_in_se);
  }
  EXPECT_LT(worst, 1.0);
}

TEST(RidgeSensitivity, NearSingularPairIsFlagged) {
  // Two near-duplicate variants whose associations disagree.
  std::vector<VariantSummary> vs(2);
  vs[0] = {"a", "A", "G", 0.20, 0.01, 0.10, 0.02, std::nullopt, std::nullopt, std::nullopt};
  vs[1] = {"b", "A", "G", 0.15, 0.01, 0.02, 0.02, std::nullopt, std::nullopt, std::nullopt};
  Eigen::Matrix2d m;
  m << 1, 0.9999, 0.9999, 1;
  const RidgeSensitivity r = ridge_sensitivity(SummarySet(vs), CorrelationMatrix({"a", "b"}, m), 0.05);
  EXPECT_TRUE(r.flagged);
  EXPECT_GT(r.shift_in_se, 1.0);
}

TEST(VarianceExplained, FormulaAsQuoted) {
  std::vector<VariantSummary> vs(3);
  vs[0] = {"a", "A", "G", 1.0, 0.1, 0, 1, 0.5, std::nullopt, std::nullopt};
  vs[1] = {"b", "A", "G", 0.0, 0.1, 0, 1, 0.3, std::nullopt, std::nullopt};
  vs[2] = {"c", "A", "G", 0.2, 0.1, 0, 1, 0.1, std::nullopt, std::nullopt};
  const Eigen::VectorXd v = variance_explained(SummarySet(vs));
  EXPECT_DOUBLE_EQ(v[0], 0.25);
  EXPECT_DOUBLE_EQ(v[1], 0.0);
  EXPECT_NEAR(v[2], 0.0036, 1e-15);
}

TEST(VarianceExplained, MissingMafListsVariants) {
  std::vector<VariantSummary> vs(2);
  vs[0] = {"a", "A", "G", 1.0, 0.1, 0, 1, 0.5, std::nullopt, std::nullopt};
  vs[1] = {"b", "A", "G", 1.0, 0.1, 0, 1, std::nullopt, std::nullopt, std::nullopt};
  try {
    variance_explained(SummarySet(vs));
    FAIL() << "expected a missing maf error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingMaf);
    EXPECT_NE(std::string(e.what()).find("b"), std::string::npos);
  }
}

}  // namespace
}  // namespace mrld
