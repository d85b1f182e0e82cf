#include "epf/models.hpp"

#include "epf/error.hpp"

namespace epf {

std::vector<std::size_t> hybrid_temporal_lengths(const HybridConfig& config) {
  std::vector<std::size_t> lengths;
  std::size_t len = config.window;
  for (std::size_t b = 0; b < config.conv_blocks.size(); ++b) {
    const auto& block = config.conv_blocks[b];
    if (block.kernel < 1 || block.pool < 1 || block.out_channels < 1) {
      throw Error(ErrorCode::InvalidConfig, "conv block " + std::to_string(b) + " has a zero size");
    }
    if (len < block.kernel) {
      throw Error(ErrorCode::ShapeUnderflow, "conv block " + std::to_string(b) + ": length " +
                                                 std::to_string(len) + " < kernel " +
                                                 std::to_string(block.kernel));
    }
    len = len - block.kernel + 1;
    lengths.push_back(len);
    if (len < block.pool) {
      throw Error(ErrorCode::ShapeUnderflow, "conv block " + std::to_string(b) + ": length " +
                                                 std::to_string(len) + " < pool " +
                                                 std::to_string(block.pool));
    }
    len = (len - block.pool) / block.pool + 1;
    lengths.push_back(len);
  }
  return lengths;
}

ModelGraph build_hybrid(const HybridConfig& config, std::uint64_t seed) {
  if (config.window < 1 || config.n_features < 1 || config.lstm_hidden < 1) {
    throw Error(ErrorCode::InvalidConfig, "window, n_features and lstm_hidden must be >= 1");
  }
  if (config.dense_head.empty()) {
    throw Error(ErrorCode::InvalidConfig, "dense_head needs at least the output size");
  }
  hybrid_temporal_lengths(config);

  std::vector<LayerParams> layers;
  std::size_t channels = config.n_features;
  for (const auto& block : config.conv_blocks) {
    layers.push_back(conv1d_layer(channels, block.out_channels, block.kernel));
    layers.push_back(relu_layer());
    layers.push_back(maxpool1d_layer(block.pool));
    channels = block.out_channels;
  }
  layers.push_back(lstm_layer(channels, config.lstm_hidden));
  layers.push_back(dropout_layer(config.dropout_rate));
  std::size_t width = config.lstm_hidden;
  for (std::size_t i = 0; i < config.dense_head.size(); ++i) {
    layers.push_back(dense_layer(width, config.dense_head[i]));
    width = config.dense_head[i];
    if (i + 1 < config.dense_head.size()) layers.push_back(relu_layer());
  }
  ModelGraph g({config.window, config.n_features}, std::move(layers), seed);
  g.initialize(seed);
  return g;
}

ModelGraph build_rnn(std::size_t window, std::size_t n_features, std::size_t hidden,
                     std::size_t horizon, std::uint64_t seed) {
  if (hidden < 1 || horizon < 1) throw Error(ErrorCode::InvalidConfig, "hidden and horizon must be >= 1");
  std::vector<LayerParams> layers;
  layers.push_back(rnn_layer(n_features, hidden));
  layers.push_back(dense_layer(hidden, horizon));
  ModelGraph g({window, n_features}, std::move(layers), seed);
  g.initialize(seed);
  return g;
}

ModelGraph build_ann(std::size_t window, std::size_t n_features,
                     const std::vector<std::size_t>& hidden_sizes, std::size_t horizon,
                     std::uint64_t seed) {
  if (hidden_sizes.empty()) throw Error(ErrorCode::InvalidConfig, "ann needs at least one hidden layer");
  if (horizon < 1) throw Error(ErrorCode::InvalidConfig, "horizon must be >= 1");
  std::vector<LayerParams> layers;
  layers.push_back(flatten_layer());
  std::size_t width = window * n_features;
  for (std::size_t h : hidden_sizes) {
    layers.push_back(dense_layer(width, h));
    layers.push_back(relu_layer());
    width = h;
  }
  layers.push_back(dense_layer(width, horizon));
  ModelGraph g({window, n_features}, std::move(layers), seed);
  g.initialize(seed);
  return g;
}

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Hybrid: return "hybrid";
    case ModelKind::Rnn: return "rnn";
    case ModelKind::Ann: return "ann";
  }
  return "unknown";
}

std::optional<ModelKind> model_kind_from_string(std::string_view name) noexcept {
  for (auto k : {ModelKind::Hybrid, ModelKind::Rnn, ModelKind::Ann}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

ModelGraph build_model(const ModelSpec& spec, std::size_t window, std::size_t n_features,
                       std::size_t horizon, std::uint64_t seed) {
  switch (spec.kind) {
    case ModelKind::Hybrid: {
      HybridConfig c;
      c.window = window;
      c.n_features = n_features;
      c.conv_blocks = spec.conv_blocks;
      c.lstm_hidden = spec.lstm_hidden;
      c.dense_head = spec.dense_head;
      c.dense_head.push_back(horizon);
      c.dropout_rate = spec.dropout_rate;
      return build_hybrid(c, seed);
    }
    case ModelKind::Rnn:
      return build_rnn(window, n_features, spec.rnn_hidden, horizon, seed);
    case ModelKind::Ann:
      return build_ann(window, n_features, spec.ann_hidden, horizon, seed);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown model kind");
}

}  // namespace epf
