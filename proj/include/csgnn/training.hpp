#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csgnn/gnn_core.hpp"

namespace csgnn {

enum class Optimizer : std::uint8_t { adam = 0, sgd = 1 };
std::string_view optimizer_name(Optimizer o);
std::optional<Optimizer> optimizer_from_name(std::string_view name);

struct TrainConfig {
  double learning_rate = 0.001;  // constant
  std::size_t batch_size = 128;  // minimal pairs per update
  int max_epochs = 100;
  int early_stop_patience = 10;
  std::vector<std::uint64_t> seeds = {1, 2, 3};  // multi-run protocol
  Optimizer optimizer = Optimizer::adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  unsigned threads = 0;  // 0 = hardware concurrency; results do not depend on it
};

void validate_train_config(const TrainConfig& tcfg);

struct EpochStats {
  double train_loss = 0.0;      // mean loss per pair over the epoch
  double val_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int selected_epoch = 0;  // 1-based epoch whose parameters are returned
  double best_val_accuracy = 0.0;
  double wall_seconds = 0.0;  // informational; never serialized into reports
  std::uint64_t run_seed = 0;
};

struct EvalItem {
  std::string id;
  Side gold = Side::A;
  int predicted = 0;  // 0 = A, 1 = B, 2 = exact tie
  bool correct = false;
  double margin = 0.0;  // |softmax_A - softmax_B| of symmetrized logits
  double score_a = 0.0;
  double score_b = 0.0;
};

struct EvalReport {
  double accuracy = 0.0;
  std::vector<EvalItem> items;

  std::vector<int> correctness_bits() const;
};

struct TrainResult {
  ModelParameters params;
  TrainReport report;
};

/// Adam (or plain gradient descent) over shuffled batches with order
/// augmentation; returns the parameters of the epoch with the best
/// validation accuracy (ties resolved to the earliest epoch). Deterministic
/// given (data, cfg.seed, tcfg) regardless of thread count.
TrainResult train(const Dataset& train_set, const Dataset& val_set, const ModelConfig& cfg,
                  const TrainConfig& tcfg);

/// Symmetrized inference; an exact logit tie counts as incorrect.
EvalReport evaluate(const ModelParameters& p, const ModelConfig& cfg, const Dataset& data,
                    unsigned threads = 0);

struct MedianRunResult {
  EvalReport report;            // test report of the median run
  TrainResult median_run;       // its parameters and training report
  std::vector<double> seed_accuracies;  // test accuracy per seed, in seed order
  double accuracy_std = 0.0;    // population standard deviation
  std::size_t median_index = 0; // index into tcfg.seeds
};

/// Trains once per seed (odd count required) and reports the run with the
/// median test accuracy plus the across-seed standard deviation.
MedianRunResult median_run(const Dataset& train_set, const Dataset& val_set,
                           const Dataset& test_set, const ModelConfig& cfg,
                           const TrainConfig& tcfg);

struct CurvePoint {
  std::size_t size = 0;
  double median_accuracy = 0.0;
  double accuracy_std = 0.0;
};

/// Median-of-seeds accuracy at nested training prefixes of a single seeded
/// shuffle of train_set.
std::vector<CurvePoint> learning_curve(const Dataset& train_set, const Dataset& val_set,
                                       const Dataset& test_set, const std::vector<std::size_t>& sizes,
                                       const ModelConfig& cfg, const TrainConfig& tcfg);

}  // namespace csgnn
