#include "csgnn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "csgnn/gnn_core.hpp"
#include "csgnn/rng.hpp"

namespace csgnn {

void validate_stats_config(const StatsConfig& cfg) {
  if (cfg.replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
}

namespace {

void check_bits(const std::vector<int>& v, const char* name) {
  for (int b : v)
    if (b != 0 && b != 1) throw std::invalid_argument(std::string(name) + " must contain 0/1 bits");
}

}  // namespace

PermutationTestResult paired_permutation_test(const std::vector<int>& correct_x,
                                              const std::vector<int>& correct_y,
                                              const StatsConfig& cfg) {
  validate_stats_config(cfg);
  if (correct_x.size() != correct_y.size())
    throw std::invalid_argument("paired test: length mismatch");
  if (correct_x.empty()) throw std::invalid_argument("paired test: empty sample");
  check_bits(correct_x, "correct_x");
  check_bits(correct_y, "correct_y");

  const std::size_t n = correct_x.size();
  // The statistic times n is an integer: sum(x) - sum(y). Sign-flipping item
  // i negates its difference d_i. Integer arithmetic keeps the >= comparison
  // exact.
  std::vector<int> diff(n);
  long long observed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = correct_x[i] - correct_y[i];
    observed += diff[i];
  }
  const long long abs_observed = std::llabs(observed);

  std::size_t at_least_as_extreme = 0;
  for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
    Rng rng(cfg.seed, mix64(0x706169726564ull, rep));  // one stream per replication
    long long stat = 0;
    for (std::size_t i = 0; i < n; ++i) stat += rng.coin() ? -diff[i] : diff[i];
    if (std::llabs(stat) >= abs_observed) ++at_least_as_extreme;
  }

  PermutationTestResult result;
  result.statistic = static_cast<double>(observed) / static_cast<double>(n);
  result.p_value = static_cast<double>(1 + at_least_as_extreme) /
                   static_cast<double>(cfg.replications + 1);
  result.replications = cfg.replications;
  result.seed = cfg.seed;
  return result;
}

PermutationTestResult unpaired_permutation_test(const std::vector<int>& correct_x,
                                                const std::vector<int>& correct_y,
                                                const StatsConfig& cfg) {
  validate_stats_config(cfg);
  if (correct_x.empty() || correct_y.empty())
    throw std::invalid_argument("unpaired test: empty sample");
  check_bits(correct_x, "correct_x");
  check_bits(correct_y, "correct_y");

  const long long nx = static_cast<long long>(correct_x.size());
  const long long ny = static_cast<long long>(correct_y.size());
  // mean(x) - mean(y) = (sx*ny - sy*nx) / (nx*ny); compare numerators.
  long long sx = std::accumulate(correct_x.begin(), correct_x.end(), 0ll);
  long long sy = std::accumulate(correct_y.begin(), correct_y.end(), 0ll);
  const long long observed_num = sx * ny - sy * nx;
  const long long abs_observed = std::llabs(observed_num);

  std::vector<int> pooled;
  pooled.reserve(static_cast<std::size_t>(nx + ny));
  pooled.insert(pooled.end(), correct_x.begin(), correct_x.end());
  pooled.insert(pooled.end(), correct_y.begin(), correct_y.end());

  std::size_t at_least_as_extreme = 0;
  for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
    Rng rng(cfg.seed, mix64(0x756E706169726564ull, rep));
    std::vector<int> shuffled = pooled;
    rng.shuffle(shuffled);
    long long rx = 0;
    for (long long i = 0; i < nx; ++i) rx += shuffled[static_cast<std::size_t>(i)];
    long long ry = 0;
    for (std::size_t i = static_cast<std::size_t>(nx); i < shuffled.size(); ++i) ry += shuffled[i];
    if (std::llabs(rx * ny - ry * nx) >= abs_observed) ++at_least_as_extreme;
  }

  PermutationTestResult result;
  result.statistic = static_cast<double>(sx) / static_cast<double>(nx) -
                     static_cast<double>(sy) / static_cast<double>(ny);
  result.p_value = static_cast<double>(1 + at_least_as_extreme) /
                   static_cast<double>(cfg.replications + 1);
  result.replications = cfg.replications;
  result.seed = cfg.seed;
  return result;
}

AgreementReport cohens_kappa(const std::vector<std::string>& choices_x,
                             const std::vector<std::string>& choices_y) {
  if (choices_x.size() != choices_y.size())
    throw std::invalid_argument("kappa: length mismatch");
  if (choices_x.empty()) throw std::invalid_argument("kappa: empty sample");

  std::vector<std::string> categories;
  for (const auto* v : {&choices_x, &choices_y}) {
    for (const std::string& c : *v) {
      if (std::find(categories.begin(), categories.end(), c) == categories.end())
        categories.push_back(c);
    }
  }
  if (categories.size() > 2)
    throw std::invalid_argument("kappa: more than two categories present");

  const std::size_t n = choices_x.size();
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) agree += choices_x[i] == choices_y[i] ? 1 : 0;
  const double p_o = static_cast<double>(agree) / static_cast<double>(n);

  double p_e = 0.0;
  for (const std::string& c : categories) {
    const double mx = static_cast<double>(std::count(choices_x.begin(), choices_x.end(), c)) /
                      static_cast<double>(n);
    const double my = static_cast<double>(std::count(choices_y.begin(), choices_y.end(), c)) /
                      static_cast<double>(n);
    p_e += mx * my;
  }

  AgreementReport report;
  report.observed_agreement = p_o;
  report.chance_agreement = p_e;
  report.n_items = n;
  // p_e can reach 1 only when both raters are constant on the same category,
  // which forces p_o = 1; kappa is 1 by definition there.
  report.kappa = p_e >= 1.0 ? 1.0 : (p_o - p_e) / (1.0 - p_e);
  return report;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> confidence_agreement_correlation(
    const std::vector<double>& margins, const std::vector<double>& human_agreement) {
  if (margins.size() != human_agreement.size())
    throw std::invalid_argument("correlation: length mismatch");
  if (margins.size() < 3) throw std::invalid_argument("correlation: need at least 3 items");

  const std::vector<double> rx = average_ranks(margins);
  const std::vector<double> ry = average_ranks(human_agreement);
  const std::size_t n = rx.size();
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += rx[i];
    mean_y += ry[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mean_x;
    const double dy = ry[i] - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;  // constant input: undefined
  return sxy / std::sqrt(sxx * syy);
}

double mean_nll_at_temperature(const std::vector<std::array<double, 2>>& logit_pairs,
                               const std::vector<Side>& labels, double temperature) {
  if (logit_pairs.size() != labels.size())
    throw std::invalid_argument("temperature: length mismatch");
  if (logit_pairs.empty()) throw std::invalid_argument("temperature: empty sample");
  double total = 0.0;
  for (std::size_t i = 0; i < logit_pairs.size(); ++i) {
    const Logits scaled{logit_pairs[i][0] / temperature, logit_pairs[i][1] / temperature};
    total += cross_entropy(scaled, labels[i]);
  }
  return total / static_cast<double>(logit_pairs.size());
}

double temperature_scale(const std::vector<std::array<double, 2>>& logit_pairs,
                         const std::vector<Side>& labels) {
  const double lo_bound = 0.05;
  const double hi_bound = 20.0;
  const double tol = 1e-4;
  auto f = [&](double t) { return mean_nll_at_temperature(logit_pairs, labels, t); };

  // Golden-section search; the NLL is unimodal in T (convex in 1/T).
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = lo_bound, hi = hi_bound;
  double m1 = hi - inv_phi * (hi - lo);
  double m2 = lo + inv_phi * (hi - lo);
  double f1 = f(m1), f2 = f(m2);
  while (hi - lo > tol) {
    if (f1 <= f2) {
      hi = m2;
      m2 = m1;
      f2 = f1;
      m1 = hi - inv_phi * (hi - lo);
      f1 = f(m1);
    } else {
      lo = m1;
      m1 = m2;
      f1 = f2;
      m2 = lo + inv_phi * (hi - lo);
      f2 = f(m2);
    }
  }
  const double t_star = 0.5 * (lo + hi);
  // Never report a temperature worse than the identity.
  return f(t_star) <= f(1.0) ? t_star : 1.0;
}

}  // namespace csgnn
