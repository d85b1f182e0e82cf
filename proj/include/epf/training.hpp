#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "epf/graph.hpp"
#include "epf/loss.hpp"
#include "epf/metrics.hpp"
#include "epf/preprocess.hpp"

namespace epf {

enum class OptimizerKind { Adam, Sgd };

std::string_view to_string(OptimizerKind kind) noexcept;
std::optional<OptimizerKind> optimizer_from_string(std::string_view name) noexcept;

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Epochs without validation improvement before stopping; 0 disables.
  std::size_t early_stop_patience = 10;
  /// Chronological tail of the training windows held out for early stopping.
  double validation_fraction = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;
};

struct AdamResult {
  std::vector<Tensor> params;
  AdamState state;
};

/// One bias-corrected Adam step. Empty moment vectors in `state` are taken
/// as zeros. Inputs are not modified.
AdamResult adam_update(std::span<const Tensor> params, std::span<const Tensor> grads,
                       const AdamState& state, const AdamConfig& config);
std::vector<Tensor> sgd_update(std::span<const Tensor> params, std::span<const Tensor> grads,
                               double learning_rate);

/// Patience-based stopping on a validation-loss sequence.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Records one epoch; returns true when it is a new best.
  bool update(std::size_t epoch, double loss);
  bool should_stop() const noexcept { return patience_ > 0 && bad_epochs_ >= patience_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_loss() const noexcept { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  double best_loss_ = 0.0;
  bool has_best_ = false;
  std::size_t bad_epochs_ = 0;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  std::vector<double> seconds;
  std::size_t best_epoch = 0;
  bool stopped_early = false;

  std::size_t epochs_run() const noexcept { return train_loss.size(); }
};

struct TrainResult {
  ModelGraph model;
  TrainHistory history;
};

/// Mini-batch training with a seeded per-epoch permutation. The model that
/// comes back carries the parameters of the best validation epoch and is
/// in inference mode.
TrainResult train_model(ModelGraph model, const WindowedDataset& train_set,
                        const TrainConfig& config);

/// Inference-mode predictions, samples x horizon, in scaled units.
Tensor predict_dataset(const ModelGraph& model, const WindowedDataset& data,
                       std::size_t batch_size = 256);
double dataset_loss(const ModelGraph& model, const WindowedDataset& data);

/// Naive forecaster: each target step repeats the target feature's value in
/// the last input row. Scaled units, samples x horizon.
Tensor persistence_predictions(const WindowedDataset& data);

/// Inverse-scales predictions and targets to $/MWh and builds the report.
/// `rule.threshold` must already be resolved.
MetricsReport evaluate_predictions(const Tensor& predictions, const WindowedDataset& test_set,
                                   const ScalerParams& scaler, const SpikeRule& rule);
MetricsReport evaluate_model(const ModelGraph& model, const WindowedDataset& test_set,
                             const ScalerParams& scaler, const SpikeRule& rule);

}  // namespace epf
