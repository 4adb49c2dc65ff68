#include "fixtures.hpp"

#include "mrld/core_model.hpp"
#include "mrld/error.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <random>

namespace mrld {
namespace {

VariantSummary variant(const std::string& id, double bx, double by, double sey = 1.0,
                       const std::string& ea = "A", const std::string& oa = "G") {
  VariantSummary v;
  v.variant_id = id;
  v.effect_allele = ea;
  v.other_allele = oa;
  v.beta_x = bx;
  v.se_x = 0.01;
  v.beta_y = by;
  v.se_y = sey;
  return v;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no mrld::Error thrown";
  return ErrorCode::kInvalidInput;
}

TEST(SummarySet, RejectsDuplicateIdsAndBadStandardErrors) {
  EXPECT_EQ(code_of([] { SummarySet({variant("a", 1, 1), variant("a", 2, 2)}); }),
            ErrorCode::kInvalidInput);
  EXPECT_EQ(code_of([] { SummarySet({variant("a", 1, 1, 0.0)}); }), ErrorCode::kInvalidInput);
  EXPECT_EQ(code_of([] { SummarySet({variant("a", 1, 1, 1.0, "A", "A")}); }),
            ErrorCode::kInvalidInput);
  EXPECT_EQ(code_of([] { SummarySet(std::vector<VariantSummary>{}); }), ErrorCode::kInvalidInput);
}

TEST(CorrelationMatrix, SymmetrizesWithinToleranceAndForcesUnitDiagonal) {
  Eigen::Matrix2d m;
  m << 0.9, 0.5 + 4e-11, 0.5, 1.1;
  const CorrelationMatrix c({"a", "b"}, m);
  EXPECT_EQ(c(0, 0), 1.0);
  EXPECT_EQ(c(1, 1), 1.0);
  EXPECT_EQ(c(0, 1), c(1, 0));
  EXPECT_NEAR(c(0, 1), 0.5 + 2e-11, 1e-16);
}

TEST(CorrelationMatrix, RejectsAsymmetryAndOutOfRange) {
  Eigen::Matrix2d asym;
  asym << 1, 0.5, 0.5 + 1e-8, 1;
  EXPECT_EQ(code_of([&] { CorrelationMatrix({"a", "b"}, asym); }), ErrorCode::kInvalidInput);
  Eigen::Matrix2d big;
  big << 1, 1.2, 1.2, 1;
  EXPECT_EQ(code_of([&] { CorrelationMatrix({"a", "b"}, big); }), ErrorCode::kInvalidInput);
}

TEST(Align, PermutesCorrelationToSummaryOrder) {
  const SummarySet s({variant("v1", 1, 1), variant("v2", 2, 2)});
  Eigen::Matrix2d m;
  m << 1, 0.3, 0.3, 1;
  const CorrelationMatrix c({"v2", "v1"}, m);
  const AlignedPair a = align(s, c);
  EXPECT_EQ(a.corr.ids(), (std::vector<std::string>{"v1", "v2"}));
  EXPECT_EQ(a.summary.ids(), (std::vector<std::string>{"v1", "v2"}));
  EXPECT_DOUBLE_EQ(a.corr(0, 1), 0.3);
  EXPECT_TRUE(a.dropped.empty());
}

TEST(Align, DropsVariantsMissingOnEitherSide) {
  const SummarySet s({variant("v1", 1, 1), variant("v2", 2, 2), variant("v3", 3, 3)});
  const CorrelationMatrix c = CorrelationMatrix::identity({"v1", "v2"});
  const AlignedPair a = align(s, c);
  EXPECT_EQ(a.summary.ids(), (std::vector<std::string>{"v1", "v2"}));
  EXPECT_EQ(a.dropped, (std::vector<std::string>{"v3"}));
}

TEST(Align, EmptyIntersectionIsAnError) {
  const SummarySet s({variant("v1", 1, 1)});
  EXPECT_EQ(code_of([&] { align(s, CorrelationMatrix::identity({"v2"})); }),
            ErrorCode::kEmptyIntersection);
}

TEST(Align, IsIdempotent) {
  std::mt19937_64 rng(5);
  const SummarySet s = fixtures::random_summary(8, rng);
  auto ids = s.ids();
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.pop_back();
  ids.push_back("extra");
  const CorrelationMatrix c(ids, fixtures::random_correlation(8, rng));
  const AlignedPair once = align(s, c);
  const AlignedPair twice = align(once.summary, once.corr);
  EXPECT_EQ(twice.summary.ids(), once.summary.ids());
  EXPECT_EQ(twice.corr.ids(), once.corr.ids());
  EXPECT_EQ(twice.corr.values(), once.corr.values());
  EXPECT_TRUE(twice.dropped.empty());
}

TEST(Harmonize, SwappedAllelesNegateBetas) {
  const SummarySet s({variant("v1", 0.1, 0.05)});
  const HarmonizeResult r = harmonize(s, {{"v1", {"G", "A"}}});
  ASSERT_EQ(r.summary.size(), 1u);
  EXPECT_DOUBLE_EQ(r.summary[0].beta_x, -0.1);
  EXPECT_DOUBLE_EQ(r.summary[0].beta_y, -0.05);
  EXPECT_EQ(r.summary[0].effect_allele, "G");
  EXPECT_EQ(r.flipped, (std::vector<std::string>{"v1"}));
}

TEST(Harmonize, MatchingAllelesUnchanged) {
  const SummarySet s({variant("v1", 0.1, 0.05)});
  const HarmonizeResult r = harmonize(s, {{"v1", {"A", "G"}}});
  EXPECT_DOUBLE_EQ(r.summary[0].beta_x, 0.1);
  EXPECT_TRUE(r.flipped.empty());
}

TEST(Harmonize, PalindromicDroppedByDefault) {
  const SummarySet s({variant("v1", 0.1, 0.05, 1.0, "A", "T"), variant("v2", 0.2, 0.1)});
  const std::unordered_map<std::string, AllelePair> panel = {{"v1", {"A", "T"}},
                                                             {"v2", {"A", "G"}}};
  const HarmonizeResult r = harmonize(s, panel);
  EXPECT_EQ(r.summary.ids(), (std::vector<std::string>{"v2"}));
  EXPECT_EQ(r.ambiguous, (std::vector<std::string>{"v1"}));
  const HarmonizeResult kept = harmonize(s, panel, {.drop_palindromic = false});
  EXPECT_EQ(kept.summary.size(), 2u);
}

TEST(Harmonize, MismatchedAllelesDropped) {
  const SummarySet s({variant("v1", 0.1, 0.05), variant("v2", 0.2, 0.1)});
  const HarmonizeResult r = harmonize(s, {{"v1", {"C", "T"}}, {"v2", {"A", "G"}}});
  EXPECT_EQ(r.summary.ids(), (std::vector<std::string>{"v2"}));
  EXPECT_EQ(r.mismatched, (std::vector<std::string>{"v1"}));
}

TEST(Harmonize, TwiceWithSwappedPanelsRestoresBetas) {
  std::mt19937_64 rng(9);
  const SummarySet s = fixtures::random_summary(10, rng);  // alleles A/G
  std::unordered_map<std::string, AllelePair> swapped, original;
  std::bernoulli_distribution coin(0.5);
  for (const auto& id : s.ids()) {
    swapped[id] = coin(rng) ? AllelePair{"G", "A"} : AllelePair{"A", "G"};
    original[id] = {"A", "G"};
  }
  const HarmonizeResult there = harmonize(s, swapped);
  const HarmonizeResult back = harmonize(there.summary, original);
  EXPECT_EQ(back.flipped, there.flipped);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(back.summary[i].beta_x, s[i].beta_x);
    EXPECT_EQ(back.summary[i].beta_y, s[i].beta_y);
    EXPECT_EQ(back.summary[i].effect_allele, s[i].effect_allele);
  }
}

TEST(BuildOmega, TwoVariantExample) {
  const SummarySet s({variant("a", 1, 1, 1.0), variant("b", 1, 1, 2.0)});
  Eigen::Matrix2d m;
  m << 1, 0.5, 0.5, 1;
  const WeightMatrix w = build_omega(s, CorrelationMatrix({"a", "b"}, m));
  Eigen::Matrix2d expected;
  expected << 1, 1, 1, 4;
  EXPECT_EQ(w.kind, WeightKind::kOmega);
  EXPECT_TRUE(w.values.isApprox(expected, 1e-15));
}

TEST(BuildOmega, IdentityCorrelationGivesDiagonal) {
  std::mt19937_64 rng(1);
  const SummarySet s = fixtures::random_summary(5, rng);
  const WeightMatrix w = build_omega(s, CorrelationMatrix::identity(s.ids()));
  const Eigen::VectorXd sey = s.se_y();
  EXPECT_TRUE(w.values.isApprox(Eigen::MatrixXd(sey.array().square().matrix().asDiagonal())));
}

Eigen::Matrix3d three_rho() {
  Eigen::Matrix3d r;
  r << 1, .3, .1, .3, 1, .2, .1, .2, 1;
  return r;
}

TEST(BuildOmega, ThreeVariantEntrywiseOracle) {
  const double sey[] = {.1, .2, .3};
  const SummarySet s({variant("a", .1, 0, sey[0]), variant("b", .2, 0, sey[1]),
                      variant("c", .3, 0, sey[2])});
  const Eigen::Matrix3d r = three_rho();
  const WeightMatrix w = build_omega(s, CorrelationMatrix({"a", "b", "c"}, r));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_NEAR(w.values(i, j), sey[i] * sey[j] * r(i, j), 1e-17) << i << "," << j;
    }
  }
}

TEST(BuildPsi, SingleVariantPrecision) {
  const SummarySet s({variant("a", 2.0, 0, 0.5)});
  const WeightMatrix w = build_psi(s, CorrelationMatrix::identity({"a"}));
  EXPECT_EQ(w.kind, WeightKind::kPsi);
  EXPECT_DOUBLE_EQ(w.values(0, 0), 16.0);
}

TEST(BuildPsi, ThreeVariantEntrywiseOracle) {
  const double bx[] = {.1, .2, .3};
  const double sey[] = {.1, .2, .3};
  const SummarySet s({variant("a", bx[0], 0, sey[0]), variant("b", bx[1], 0, sey[1]),
                      variant("c", bx[2], 0, sey[2])});
  const Eigen::Matrix3d r = three_rho();
  const WeightMatrix w = build_psi(s, CorrelationMatrix({"a", "b", "c"}, r));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_NEAR(w.values(i, j), bx[i] * bx[j] * r(i, j) / (sey[i] * sey[j]), 1e-14);
    }
  }
}

TEST(BuildPsi, EqualsDiagonalScalingOfRho) {
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 50; ++rep) {
    const SummarySet s = fixtures::random_summary(12, rng);
    const CorrelationMatrix c(s.ids(), fixtures::random_correlation(12, rng));
    const Eigen::VectorXd d = s.beta_x().array() / s.se_y().array();
    const Eigen::MatrixXd expected = d.asDiagonal() * c.values() * d.asDiagonal();
    const WeightMatrix psi = build_psi(s, c);
    EXPECT_LE((psi.values - expected).norm(), 1e-12 * expected.norm());
    EXPECT_EQ(psi.values, psi.values.transpose());
    const WeightMatrix omega = build_omega(s, c);
    EXPECT_EQ(omega.values, omega.values.transpose());
    for (Eigen::Index j = 0; j < d.size(); ++j) {
      EXPECT_NEAR(psi.values(j, j), d[j] * d[j], 1e-12 * d[j] * d[j]);
    }
  }
}

TEST(PanelCorrelation, ExcludesMonomorphicColumnsByName) {
  GenotypePanel panel;
  panel.variant_ids = {"a", "b", "c"};
  panel.alleles.assign(3, AllelePair{"A", "G"});
  panel.dosages.resize(4, 3);
  panel.dosages << 0, 1, 2, 1, 1, 1, 2, 1, 0, 1, 1, 1;
  const PanelCorrelation pc = panel_correlation(panel);
  EXPECT_EQ(pc.monomorphic, (std::vector<std::string>{"b"}));
  EXPECT_EQ(pc.corr.ids(), (std::vector<std::string>{"a", "c"}));
  EXPECT_NEAR(pc.corr(0, 1), -1.0, 1e-15);
}

TEST(PanelCorrelation, AllMonomorphicIsAnError) {
  GenotypePanel panel;
  panel.variant_ids = {"a"};
  panel.alleles = {AllelePair{"A", "G"}};
  panel.dosages = Eigen::MatrixXd::Constant(5, 1, 2.0);
  EXPECT_EQ(code_of([&] { panel_correlation(panel); }), ErrorCode::kMonomorphicPanel);
}

}  // namespace
}  // namespace mrld
