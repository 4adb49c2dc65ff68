// Synthetic data shared by the unit and acceptance tests.
#pragma once

#include "mrld/core_model.hpp"
#include "mrld/estimators.hpp"
#include "mrld/simulation.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mrld::fixtures {

std::vector<std::string> make_ids(std::size_t j, const std::string& prefix = "v");

// Random positive definite correlation matrix from a J x (J + extra) Gaussian factor.
Eigen::MatrixXd random_correlation(std::size_t j, std::mt19937_64& rng, std::size_t extra = 3);

// rho(i, j) = phi^|i - j|.
Eigen::MatrixXd ar1_correlation(std::size_t j, double phi);

// Associations of plausible magnitude: |beta_x| in [0.05, 0.3], se_x in
// [0.01, 0.03], se_y in [0.02, 0.06], beta_y = 0.2 beta_x + noise.
SummarySet random_summary(std::size_t j, std::mt19937_64& rng);

// `count` random 0/1 haplotypes over j variants with random frequencies. With
// include_basis the pool also holds the all-zero and every unit vector, so
// simulated genotypes have full column rank almost surely.
std::vector<Haplotype> random_haplotypes(std::size_t j, std::size_t count, std::mt19937_64& rng,
                                         bool include_basis);

// Independent allele counts, maf uniform in [0.1, 0.5].
Eigen::MatrixXd independent_genotypes(std::size_t n, std::size_t j, std::mt19937_64& rng);

// Confounded linear model: x = G gamma + u + e_x, y = theta x + u + e_y.
IndividualData simulate_individuals(const Eigen::MatrixXd& genotypes, const Eigen::VectorXd& gamma,
                                    double theta, std::mt19937_64& rng);

struct SyntheticBase {
  SummarySet summary;
  CorrelationMatrix corr;
  GenotypePanel panel;
};

// AR(1) correlation with phi = 0.3 over j variants; no panel rows.
SyntheticBase well_conditioned_base(std::size_t j, std::uint64_t seed);

// Fine-mapping-like region: a few haplotypes over many variants, so the
// correlation matrix is rank deficient and contains near-duplicate variants.
// Rare recombinants of the common haplotypes keep the panel correlation
// technically full rank. The correlation comes from a panel_size panel, the
// associations from a separate sample_size sample.
struct RegionOptions {
  std::size_t variants = 40;
  std::size_t common_haplotypes = 12;
  std::size_t rare_haplotypes = 15;
  double rare_frequency = 0.002;
  std::size_t panel_size = 500;
  std::size_t sample_size = 5000;
};
SyntheticBase near_singular_base(std::uint64_t seed, const RegionOptions& options = {});

}  // namespace mrld::fixtures
