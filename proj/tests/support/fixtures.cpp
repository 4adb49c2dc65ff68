#include "fixtures.hpp"

#include <algorithm>
#include <cmath>

namespace mrld::fixtures {

std::vector<std::string> make_ids(std::size_t j, const std::string& prefix) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < j; ++i) ids.push_back(prefix + std::to_string(i + 1));
  return ids;
}

Eigen::MatrixXd random_correlation(std::size_t j, std::mt19937_64& rng, std::size_t extra) {
  std::normal_distribution<double> normal;
  const auto n = static_cast<Eigen::Index>(j);
  Eigen::MatrixXd f(n, n + static_cast<Eigen::Index>(extra));
  for (Eigen::Index r = 0; r < f.rows(); ++r) {
    for (Eigen::Index c = 0; c < f.cols(); ++c) f(r, c) = normal(rng);
  }
  const Eigen::MatrixXd cov = f * f.transpose();
  const Eigen::VectorXd d = cov.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd rho = d.asDiagonal() * cov * d.asDiagonal();
  rho.diagonal().setOnes();
  return 0.5 * (rho + rho.transpose());
}

Eigen::MatrixXd ar1_correlation(std::size_t j, double phi) {
  const auto n = static_cast<Eigen::Index>(j);
  Eigen::MatrixXd rho(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) rho(r, c) = std::pow(phi, std::abs(r - c));
  }
  return rho;
}

SummarySet random_summary(std::size_t j, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.05, 0.3), sex(0.01, 0.03), sey(0.02, 0.06);
  std::bernoulli_distribution sign(0.5);
  std::normal_distribution<double> normal;
  const auto ids = make_ids(j);
  std::vector<VariantSummary> vs;
  for (std::size_t i = 0; i < j; ++i) {
    VariantSummary v;
    v.variant_id = ids[i];
    v.effect_allele = "A";
    v.other_allele = "G";
    v.beta_x = (sign(rng) ? 1.0 : -1.0) * mag(rng);
    v.se_x = sex(rng);
    v.se_y = sey(rng);
    v.beta_y = 0.2 * v.beta_x + v.se_y * normal(rng);
    vs.push_back(v);
  }
  return SummarySet(std::move(vs));
}

std::vector<Haplotype> random_haplotypes(std::size_t j, std::size_t count, std::mt19937_64& rng,
                                         bool include_basis) {
  std::bernoulli_distribution bit(0.35);
  std::gamma_distribution<double> weight(2.0, 1.0);
  std::vector<Haplotype> pool;
  for (std::size_t h = 0; h < count; ++h) {
    Haplotype hap;
    for (std::size_t i = 0; i < j; ++i) hap.alleles.push_back(bit(rng) ? 1 : 0);
    hap.frequency = weight(rng);
    pool.push_back(std::move(hap));
  }
  if (include_basis) {
    pool.push_back(Haplotype{std::vector<int>(j, 0), 2.0});
    for (std::size_t i = 0; i < j; ++i) {
      Haplotype unit{std::vector<int>(j, 0), 0.5};
      unit.alleles[i] = 1;
      pool.push_back(std::move(unit));
    }
  }
  double total = 0.0;
  for (const auto& h : pool) total += h.frequency;
  for (auto& h : pool) h.frequency /= total;
  // Absorb rounding so the frequencies sum to one exactly enough.
  double rest = 1.0;
  for (std::size_t i = 0; i + 1 < pool.size(); ++i) rest -= pool[i].frequency;
  pool.back().frequency = rest;
  return pool;
}

Eigen::MatrixXd independent_genotypes(std::size_t n, std::size_t j, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> maf(0.1, 0.5);
  Eigen::MatrixXd g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j));
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    std::binomial_distribution<int> count(2, maf(rng));
    for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = count(rng);
  }
  return g;
}

IndividualData simulate_individuals(const Eigen::MatrixXd& genotypes, const Eigen::VectorXd& gamma,
                                    double theta, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const Eigen::Index n = genotypes.rows();
  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = normal(rng);
    x[i] = genotypes.row(i).dot(gamma) + u + normal(rng);
    y[i] = theta * x[i] + u + normal(rng);
  }
  return IndividualData(genotypes, x, y, make_ids(static_cast<std::size_t>(genotypes.cols())));
}

SyntheticBase well_conditioned_base(std::size_t j, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SummarySet summary = random_summary(j, rng);
  CorrelationMatrix corr(summary.ids(), ar1_correlation(j, 0.3));
  return SyntheticBase{std::move(summary), std::move(corr), GenotypePanel{}};
}

namespace {

std::vector<Haplotype> region_haplotypes(std::size_t j, const RegionOptions& opt,
                                         std::mt19937_64& rng) {
  const std::size_t common = opt.common_haplotypes;
  std::bernoulli_distribution bit(0.4);
  std::bernoulli_distribution exact_copy(0.5);
  std::uniform_int_distribution<std::size_t> pick(0, common - 1);
  std::uniform_int_distribution<std::size_t> site(0, j - 1);
  std::gamma_distribution<double> weight(2.0, 1.0);

  std::vector<std::vector<int>> columns;
  while (columns.size() < j) {
    std::vector<int> col(common);
    do {
      for (auto& a : col) a = bit(rng) ? 1 : 0;
    } while (std::all_of(col.begin(), col.end(), [&](int a) { return a == col[0]; }));
    columns.push_back(col);
    if (columns.size() == j) break;
    // A near-duplicate neighbour: identical, or differing on one haplotype.
    std::vector<int> twin = col;
    if (!exact_copy(rng)) {
      do {
        twin = col;
        const std::size_t h = pick(rng);
        twin[h] = 1 - twin[h];
      } while (std::all_of(twin.begin(), twin.end(), [&](int a) { return a == twin[0]; }));
    }
    columns.push_back(twin);
  }
  std::vector<Haplotype> pool(common);
  double total = 0.0;
  for (std::size_t h = 0; h < common; ++h) {
    pool[h].frequency = 0.03 + weight(rng);
    total += pool[h].frequency;
    for (std::size_t c = 0; c < j; ++c) pool[h].alleles.push_back(columns[c][h]);
  }
  const double common_mass = 1.0 - opt.rare_frequency * static_cast<double>(opt.rare_haplotypes);
  for (auto& h : pool) h.frequency *= common_mass / total;
  // Rare recombinants: a common haplotype with a few alleles switched.
  for (std::size_t r = 0; r < opt.rare_haplotypes; ++r) {
    Haplotype rare = pool[pick(rng)];
    for (int k = 0; k < 3; ++k) {
      const std::size_t c = site(rng);
      rare.alleles[c] = 1 - rare.alleles[c];
    }
    rare.frequency = opt.rare_frequency;
    pool.push_back(std::move(rare));
  }
  double rest = 1.0;
  for (std::size_t h = 0; h + 1 < pool.size(); ++h) rest -= pool[h].frequency;
  pool.back().frequency = rest;
  return pool;
}

}  // namespace

SyntheticBase near_singular_base(std::uint64_t seed, const RegionOptions& opt) {
  const std::size_t kVariants = opt.variants;
  const std::size_t kPanel = opt.panel_size;
  const std::size_t kSample = opt.sample_size;
  std::mt19937_64 rng(seed);
  const std::vector<Haplotype> pool = region_haplotypes(kVariants, opt, rng);
  const auto ids = make_ids(kVariants);

  GenotypePanel panel;
  panel.variant_ids = ids;
  panel.alleles.assign(kVariants, AllelePair{"A", "G"});
  panel.dosages = simulate_genotypes(kPanel, pool, rng);
  const PanelCorrelation pc = panel_correlation(panel);

  const Eigen::MatrixXd g = simulate_genotypes(kSample, pool, rng);
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(kVariants);
  gamma[kVariants / 10] = 0.12;
  gamma[kVariants * 2 / 5 + 1] = -0.08;
  gamma[kVariants * 3 / 4] = 0.1;
  // Drop columns without variation in the association sample.
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    if ((g.col(c).array() != g(0, c)).any()) keep.push_back(c);
  }
  Eigen::MatrixXd gk(g.rows(), static_cast<Eigen::Index>(keep.size()));
  Eigen::VectorXd gammak(static_cast<Eigen::Index>(keep.size()));
  std::vector<std::string> kept_ids;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    gk.col(static_cast<Eigen::Index>(i)) = g.col(keep[i]);
    gammak[static_cast<Eigen::Index>(i)] = gamma[keep[i]];
    kept_ids.push_back(ids[static_cast<std::size_t>(keep[i])]);
  }
  std::normal_distribution<double> normal;
  Eigen::VectorXd x(g.rows()), y(g.rows());
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    x[i] = gk.row(i).dot(gammak) + normal(rng);
    y[i] = 0.3 * x[i] + normal(rng);
  }
  SummarizedData s = summarize(IndividualData(gk, x, y, kept_ids));
  std::vector<VariantSummary> vs = s.summary.variants();
  for (auto& v : vs) {
    v.effect_allele = "A";
    v.other_allele = "G";
  }
  AlignedPair a = align(SummarySet(std::move(vs)), pc.corr);
  return SyntheticBase{std::move(a.summary), std::move(a.corr), std::move(panel)};
}

}  // namespace mrld::fixtures
