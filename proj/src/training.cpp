#include "csgnn/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "csgnn/rng.hpp"

namespace csgnn {

std::string_view optimizer_name(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }

std::optional<Optimizer> optimizer_from_name(std::string_view name) {
  if (name == "adam") return Optimizer::adam;
  if (name == "sgd") return Optimizer::sgd;
  return std::nullopt;
}

void validate_train_config(const TrainConfig& tcfg) {
  if (tcfg.learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
  if (tcfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (tcfg.max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (tcfg.early_stop_patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (tcfg.early_stop_patience > tcfg.max_epochs)
    throw std::invalid_argument("patience must be <= max_epochs");
  if (tcfg.seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (!(tcfg.adam_beta1 > 0.0 && tcfg.adam_beta1 < 1.0) ||
      !(tcfg.adam_beta2 > 0.0 && tcfg.adam_beta2 < 1.0) || tcfg.adam_eps <= 0.0)
    throw std::invalid_argument("optimizer hyperparameters out of range");
}

std::vector<int> EvalReport::correctness_bits() const {
  std::vector<int> bits;
  bits.reserve(items.size());
  for (const EvalItem& it : items) bits.push_back(it.correct ? 1 : 0);
  return bits;
}

namespace {

constexpr std::size_t kChunk = 16;

unsigned resolve_threads(unsigned requested) {
  if (requested) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

/// Runs fn(chunk_index, begin, end) over fixed-size index chunks. Chunk
/// boundaries never depend on the thread count, so any reduction done in
/// chunk order is bit-deterministic.
template <typename Fn>
void parallel_chunks(std::size_t n_items, unsigned threads, Fn&& fn) {
  const std::size_t n_chunks = (n_items + kChunk - 1) / kChunk;
  unsigned t = std::min<unsigned>(resolve_threads(threads),
                                  static_cast<unsigned>(std::max<std::size_t>(n_chunks, 1)));
  if (n_chunks <= 1 || t <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c)
      fn(c, c * kChunk, std::min(n_items, (c + 1) * kChunk));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) break;
      try {
        fn(c, c * kChunk, std::min(n_items, (c + 1) * kChunk));
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(t - 1);
  for (unsigned i = 0; i + 1 < t; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

void add_params(ModelParameters& dst, ModelParameters& src) {
  auto d = tensor_refs(dst);
  auto s = tensor_refs(src);
  for (std::size_t t = 0; t < d.size(); ++t)
    for (std::size_t i = 0; i < d[t].data.size(); ++i) d[t].data[i] += s[t].data[i];
}

struct AdamState {
  ModelParameters m;
  ModelParameters v;
  long long t = 0;
};

void apply_update(ModelParameters& params, ModelParameters& grad, AdamState& state,
                  const TrainConfig& tcfg) {
  auto pr = tensor_refs(params);
  auto gr = tensor_refs(grad);
  if (tcfg.optimizer == Optimizer::sgd) {
    for (std::size_t t = 0; t < pr.size(); ++t)
      for (std::size_t i = 0; i < pr[t].data.size(); ++i)
        pr[t].data[i] -= tcfg.learning_rate * gr[t].data[i];
    return;
  }
  ++state.t;
  auto mr = tensor_refs(state.m);
  auto vr = tensor_refs(state.v);
  const double b1 = tcfg.adam_beta1;
  const double b2 = tcfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t t = 0; t < pr.size(); ++t) {
    for (std::size_t i = 0; i < pr[t].data.size(); ++i) {
      const double g = gr[t].data[i];
      double& m = mr[t].data[i];
      double& v = vr[t].data[i];
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g * g;
      const double m_hat = m / c1;
      const double v_hat = v / c2;
      pr[t].data[i] -= tcfg.learning_rate * m_hat / (std::sqrt(v_hat) + tcfg.adam_eps);
    }
  }
}

EvalReport evaluate_encoded(const ModelParameters& p, const ModelConfig& cfg,
                            const std::vector<EncodedPair>& pairs,
                            const std::vector<std::string>& ids, unsigned threads) {
  EvalReport report;
  report.items.resize(pairs.size());
  parallel_chunks(pairs.size(), threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Logits logits = forward(pairs[i], p, cfg);
      EvalItem& item = report.items[i];
      item.id = ids[i];
      item.gold = pairs[i].label;
      item.score_a = logits.score_a;
      item.score_b = logits.score_b;
      auto [pa, pb] = softmax2(logits);
      item.margin = std::abs(pa - pb);
      if (logits.score_a > logits.score_b)
        item.predicted = 0;
      else if (logits.score_b > logits.score_a)
        item.predicted = 1;
      else
        item.predicted = 2;  // exact tie, counted incorrect
      item.correct = (item.predicted == 0 && item.gold == Side::A) ||
                     (item.predicted == 1 && item.gold == Side::B);
    }
  });
  std::size_t n_correct = 0;
  for (const EvalItem& it : report.items) n_correct += it.correct ? 1 : 0;
  report.accuracy = pairs.empty() ? 0.0 : static_cast<double>(n_correct) /
                                              static_cast<double>(pairs.size());
  return report;
}

std::vector<std::string> pair_ids(const Dataset& d) {
  std::vector<std::string> ids;
  ids.reserve(d.pairs.size());
  for (const MinimalPair& p : d.pairs) ids.push_back(p.id);
  return ids;
}

}  // namespace

EvalReport evaluate(const ModelParameters& p, const ModelConfig& cfg, const Dataset& data,
                    unsigned threads) {
  if (data.pairs.empty()) throw std::invalid_argument("evaluate: empty dataset");
  return evaluate_encoded(p, cfg, encode_dataset(data), pair_ids(data), threads);
}

TrainResult train(const Dataset& train_set, const Dataset& val_set, const ModelConfig& cfg,
                  const TrainConfig& tcfg) {
  validate_config(cfg);
  validate_train_config(tcfg);
  if (train_set.pairs.empty()) throw std::invalid_argument("train: empty training split");
  if (val_set.pairs.empty()) throw std::invalid_argument("train: empty validation split");

  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<EncodedPair> train_pairs = encode_dataset(train_set);
  const std::vector<EncodedPair> val_pairs = encode_dataset(val_set);
  const std::vector<std::string> val_ids = pair_ids(val_set);

  ModelParameters params = init_params(cfg);
  AdamState adam{zero_params(cfg), zero_params(cfg), 0};

  TrainReport report;
  report.run_seed = cfg.seed;
  ModelParameters best_params = params;
  double best_acc = -1.0;
  int best_epoch = 0;
  int epochs_since_best = 0;

  const std::size_t n = train_pairs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  struct Presented {
    const EncodedPair* pair;
    bool swapped;
  };
  std::vector<Presented> presented(n);
  const std::size_t max_chunks = (std::min(tcfg.batch_size, n) + kChunk - 1) / kChunk + 1;
  std::vector<ModelParameters> chunk_grads(max_chunks, zero_params(cfg));
  std::vector<double> chunk_losses(max_chunks, 0.0);

  for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    Rng epoch_rng(cfg.seed, mix64(0x65706F6368ull, static_cast<std::uint64_t>(epoch)));
    epoch_rng.shuffle(order);
    for (std::size_t i = 0; i < n; ++i)
      presented[i] = {&train_pairs[order[i]], epoch_rng.coin()};

    double epoch_loss = 0.0;
    for (std::size_t batch_begin = 0; batch_begin < n; batch_begin += tcfg.batch_size) {
      const std::size_t batch_n = std::min(tcfg.batch_size, n - batch_begin);
      const std::size_t n_chunks = (batch_n + kChunk - 1) / kChunk;
      for (std::size_t c = 0; c < n_chunks; ++c) {
        ModelParameters& g = chunk_grads[c];
        for (TensorRef& t : tensor_refs(g)) std::fill(t.data.begin(), t.data.end(), 0.0);
        chunk_losses[c] = 0.0;
      }
      parallel_chunks(batch_n, tcfg.threads,
                      [&](std::size_t chunk, std::size_t begin, std::size_t end) {
                        for (std::size_t k = begin; k < end; ++k) {
                          const Presented& item = presented[batch_begin + k];
                          if (item.swapped) {
                            EncodedPair flipped{item.pair->enc_b, item.pair->enc_a,
                                                other_side(item.pair->label)};
                            chunk_losses[chunk] += accumulate_gradients(
                                flipped, flipped.label, params, cfg, chunk_grads[chunk]);
                          } else {
                            chunk_losses[chunk] += accumulate_gradients(
                                *item.pair, item.pair->label, params, cfg, chunk_grads[chunk]);
                          }
                        }
                      });
      ModelParameters& batch_grad = chunk_grads[0];
      double batch_loss = chunk_losses[0];
      for (std::size_t c = 1; c < n_chunks; ++c) {
        add_params(batch_grad, chunk_grads[c]);
        batch_loss += chunk_losses[c];
      }
      const double inv = 1.0 / static_cast<double>(batch_n);
      for (TensorRef& t : tensor_refs(batch_grad))
        for (double& v : t.data) v *= inv;
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 " (seed " + std::to_string(cfg.seed) + ")");
      }
      apply_update(params, batch_grad, adam, tcfg);
      epoch_loss += batch_loss;
    }

    const double val_acc =
        evaluate_encoded(params, cfg, val_pairs, val_ids, tcfg.threads).accuracy;
    report.epochs.push_back({epoch_loss / static_cast<double>(n), val_acc});
    if (val_acc > best_acc) {
      best_acc = val_acc;
      best_epoch = epoch;
      best_params = params;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
    }
    if (epochs_since_best >= tcfg.early_stop_patience) break;
  }

  report.selected_epoch = best_epoch;
  report.best_val_accuracy = best_acc;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(best_params), std::move(report)};
}

MedianRunResult median_run(const Dataset& train_set, const Dataset& val_set,
                           const Dataset& test_set, const ModelConfig& cfg,
                           const TrainConfig& tcfg) {
  validate_train_config(tcfg);
  if (tcfg.seeds.size() % 2 == 0)
    throw std::invalid_argument("median_run: an odd number of seeds is required");
  if (test_set.pairs.empty()) throw std::invalid_argument("median_run: empty test split");

  std::vector<TrainResult> runs;
  std::vector<EvalReport> reports;
  std::vector<double> accuracies;
  runs.reserve(tcfg.seeds.size());
  for (std::uint64_t seed : tcfg.seeds) {
    ModelConfig run_cfg = cfg;
    run_cfg.seed = seed;
    runs.push_back(train(train_set, val_set, run_cfg, tcfg));
    reports.push_back(evaluate(runs.back().params, run_cfg, test_set, tcfg.threads));
    accuracies.push_back(reports.back().accuracy);
  }

  std::vector<std::size_t> idx(accuracies.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return accuracies[a] < accuracies[b]; });
  const std::size_t median_idx = idx[idx.size() / 2];

  double mean = 0.0;
  for (double a : accuracies) mean += a;
  mean /= static_cast<double>(accuracies.size());
  double var = 0.0;
  for (double a : accuracies) var += (a - mean) * (a - mean);
  var /= static_cast<double>(accuracies.size());

  MedianRunResult result;
  result.report = std::move(reports[median_idx]);
  result.median_run = std::move(runs[median_idx]);
  result.seed_accuracies = std::move(accuracies);
  result.accuracy_std = std::sqrt(var);
  result.median_index = median_idx;
  return result;
}

std::vector<CurvePoint> learning_curve(const Dataset& train_set, const Dataset& val_set,
                                       const Dataset& test_set,
                                       const std::vector<std::size_t>& sizes,
                                       const ModelConfig& cfg, const TrainConfig& tcfg) {
  for (std::size_t size : sizes) {
    if (size < 1) throw std::invalid_argument("learning_curve: sizes must be >= 1");
    if (size > train_set.pairs.size())
      throw std::invalid_argument("learning_curve: size " + std::to_string(size) +
                                  " exceeds training set (" +
                                  std::to_string(train_set.pairs.size()) + ")");
  }
  // Nested subsets: prefixes of one seeded shuffle.
  std::vector<std::size_t> order(train_set.pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(cfg.seed, 0x6375727665ull);  // "curve"
  rng.shuffle(order);

  std::vector<CurvePoint> points;
  points.reserve(sizes.size());
  for (std::size_t size : sizes) {
    Dataset subset;
    subset.split = train_set.split;
    subset.pairs.reserve(size);
    for (std::size_t i = 0; i < size; ++i) subset.pairs.push_back(train_set.pairs[order[i]]);
    MedianRunResult r = median_run(subset, val_set, test_set, cfg, tcfg);
    points.push_back({size, r.report.accuracy, r.accuracy_std});
  }
  return points;
}

}  // namespace csgnn
