#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "epf/graph.hpp"

namespace epf {

struct ConvBlock {
  std::size_t out_channels = 16;
  std::size_t kernel = 3;
  std::size_t pool = 2;

  friend bool operator==(const ConvBlock&, const ConvBlock&) = default;
};

/// 1-D AlexNet-style feature extractor (conv -> relu -> max-pool blocks over
/// the time axis) feeding an LSTM whose last hidden state goes through
/// dropout and a dense head.
struct HybridConfig {
  std::size_t window = 30;
  std::size_t n_features = 11;
  std::vector<ConvBlock> conv_blocks = {{16, 3, 2}, {32, 3, 2}};
  std::size_t lstm_hidden = 64;
  /// Hidden dense sizes followed by the output size (== horizon).
  std::vector<std::size_t> dense_head = {32, 1};
  double dropout_rate = 0.2;
};

/// Temporal length after each conv and pool step, in order. Throws
/// ShapeUnderflow if a kernel or pool no longer fits.
std::vector<std::size_t> hybrid_temporal_lengths(const HybridConfig& config);

ModelGraph build_hybrid(const HybridConfig& config, std::uint64_t seed = 1);

/// Elman recurrence over the window, last hidden state -> dense head.
ModelGraph build_rnn(std::size_t window, std::size_t n_features, std::size_t hidden,
                     std::size_t horizon = 1, std::uint64_t seed = 1);

/// Flatten -> (dense -> relu)* -> dense head.
ModelGraph build_ann(std::size_t window, std::size_t n_features,
                     const std::vector<std::size_t>& hidden_sizes, std::size_t horizon = 1,
                     std::uint64_t seed = 1);

enum class ModelKind { Hybrid, Rnn, Ann };

std::string_view to_string(ModelKind kind) noexcept;
std::optional<ModelKind> model_kind_from_string(std::string_view name) noexcept;

/// Architecture settings for all three kinds; only the fields of `kind`
/// are used when building.
struct ModelSpec {
  ModelKind kind = ModelKind::Hybrid;
  std::vector<ConvBlock> conv_blocks = {{16, 3, 2}, {32, 3, 2}};
  std::size_t lstm_hidden = 64;
  std::vector<std::size_t> dense_head = {32};  // hidden sizes; output size is the horizon
  double dropout_rate = 0.2;
  std::size_t rnn_hidden = 64;
  std::vector<std::size_t> ann_hidden = {64};
};

ModelGraph build_model(const ModelSpec& spec, std::size_t window, std::size_t n_features,
                       std::size_t horizon, std::uint64_t seed);

}  // namespace epf
