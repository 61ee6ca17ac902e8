#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "csgnn/ud_data.hpp"

namespace csgnn {

struct StatsConfig {
  std::size_t replications = 10000;  // R
  double alpha = 0.05;
  std::uint64_t seed = 0;
};

void validate_stats_config(const StatsConfig& cfg);

struct PermutationTestResult {
  double statistic = 0.0;  // accuracy(x) - accuracy(y)
  double p_value = 0.0;    // add-one Monte-Carlo estimate, in [1/(R+1), 1]
  std::size_t replications = 0;
  std::uint64_t seed = 0;
};

/// Two-tailed paired Monte-Carlo permutation test over aligned correctness
/// bits; each replication flips each item's (x, y) assignment with
/// probability 1/2. Comparisons run on integer sums, so ties are exact.
PermutationTestResult paired_permutation_test(const std::vector<int>& correct_x,
                                              const std::vector<int>& correct_y,
                                              const StatsConfig& cfg);

/// Two-tailed unpaired version: pooled shuffle, re-split at the original
/// sizes, difference of means.
PermutationTestResult unpaired_permutation_test(const std::vector<int>& correct_x,
                                                const std::vector<int>& correct_y,
                                                const StatsConfig& cfg);

struct AgreementReport {
  double kappa = 0.0;
  double observed_agreement = 0.0;  // p_o
  double chance_agreement = 0.0;    // p_e
  std::size_t n_items = 0;          // N
  int n_raters = 2;
  int n_categories = 2;
};

/// Two-rater, two-category Cohen's kappa. Labels may be any strings drawn
/// from a two-value set.
AgreementReport cohens_kappa(const std::vector<std::string>& choices_x,
                             const std::vector<std::string>& choices_y);

/// Spearman rank correlation with average ranks for ties; nullopt when
/// either input is constant (undefined).
std::optional<double> confidence_agreement_correlation(const std::vector<double>& margins,
                                                       const std::vector<double>& human_agreement);

/// Calibration temperature: argmin over T in [0.05, 20] (golden-section,
/// tolerance 1e-4) of the mean cross-entropy of logits/T.
double temperature_scale(const std::vector<std::array<double, 2>>& logit_pairs,
                         const std::vector<Side>& labels);

/// Mean cross-entropy of the scaled logits at a given temperature.
double mean_nll_at_temperature(const std::vector<std::array<double, 2>>& logit_pairs,
                               const std::vector<Side>& labels, double temperature);

}  // namespace csgnn
