#include "epf/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "epf/error.hpp"

namespace epf {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Fisher-Yates with our own index draw so the order does not depend on the
// standard library's distribution implementation.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

void check_grads(std::span<const Tensor> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size()) {
    throw Error(ErrorCode::ShapeMismatch, "parameter and gradient counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape()) {
      throw Error(ErrorCode::ShapeMismatch, "gradient " + std::to_string(i) + " shape " +
                                                shape_str(grads[i].shape()) + " vs parameter " +
                                                shape_str(params[i].shape()));
    }
  }
}

}  // namespace

std::string_view to_string(OptimizerKind kind) noexcept {
  return kind == OptimizerKind::Adam ? "adam" : "sgd";
}

std::optional<OptimizerKind> optimizer_from_string(std::string_view name) noexcept {
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "sgd") return OptimizerKind::Sgd;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be > 0");
  if (!(validation_fraction >= 0.0 && validation_fraction <= 0.5)) {
    throw Error(ErrorCode::InvalidConfig, "validation_fraction must be in [0, 0.5]");
  }
  if (epochs < 1) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 1");
}

AdamResult adam_update(std::span<const Tensor> params, std::span<const Tensor> grads,
                       const AdamState& state, const AdamConfig& config) {
  check_grads(params, grads);
  AdamResult r;
  r.state.step = state.step + 1;
  const double t = static_cast<double>(r.state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor m = state.m.empty() ? Tensor(params[p].shape()) : state.m[p];
    Tensor v = state.v.empty() ? Tensor(params[p].shape()) : state.v[p];
    if (m.shape() != params[p].shape() || v.shape() != params[p].shape()) {
      throw Error(ErrorCode::ShapeMismatch, "optimizer state does not match parameter " + std::to_string(p));
    }
    Tensor next = params[p];
    for (std::size_t i = 0; i < next.size(); ++i) {
      const double g = grads[p][i];
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
      // With beta = 0 the correction factor is exactly 1.
      const double m_hat = c1 > 0.0 ? m[i] / c1 : m[i];
      const double v_hat = c2 > 0.0 ? v[i] / c2 : v[i];
      next[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
    r.params.push_back(std::move(next));
    r.state.m.push_back(std::move(m));
    r.state.v.push_back(std::move(v));
  }
  return r;
}

std::vector<Tensor> sgd_update(std::span<const Tensor> params, std::span<const Tensor> grads,
                               double learning_rate) {
  check_grads(params, grads);
  std::vector<Tensor> out(params.begin(), params.end());
  for (std::size_t p = 0; p < out.size(); ++p) {
    for (std::size_t i = 0; i < out[p].size(); ++i) out[p][i] -= learning_rate * grads[p][i];
  }
  return out;
}

bool EarlyStopping::update(std::size_t epoch, double loss) {
  if (!has_best_ || loss < best_loss_) {
    has_best_ = true;
    best_loss_ = loss;
    best_epoch_ = epoch;
    bad_epochs_ = 0;
    return true;
  }
  ++bad_epochs_;
  return false;
}

Tensor predict_dataset(const ModelGraph& model, const WindowedDataset& data, std::size_t batch_size) {
  if (data.size() == 0) throw Error(ErrorCode::EmptyDataset, "no samples to predict");
  ModelGraph inference = model;
  inference.set_mode(Mode::Inference);
  const std::size_t n = data.size();
  std::vector<double> out;
  out.reserve(n * data.horizon);
  std::size_t width = 0;
  for (std::size_t b = 0; b < n; b += batch_size) {
    const auto chunk = data.slice(b, std::min(n, b + batch_size));
    const Tensor y = model_predict(inference, chunk.inputs);
    width = y.dim(1);
    out.insert(out.end(), y.data().begin(), y.data().end());
  }
  return Tensor({n, width}, std::move(out));
}

double dataset_loss(const ModelGraph& model, const WindowedDataset& data) {
  return mse_loss(predict_dataset(model, data), data.targets).loss;
}

Tensor persistence_predictions(const WindowedDataset& data) {
  if (data.size() == 0) throw Error(ErrorCode::EmptyDataset, "no samples");
  std::size_t target_col = data.feature_names.size();
  for (std::size_t c = 0; c < data.feature_names.size(); ++c) {
    if (data.feature_names[c] == data.target_feature) target_col = c;
  }
  if (target_col == data.feature_names.size()) {
    throw Error(ErrorCode::UnknownFeature, data.target_feature);
  }
  const std::size_t f = data.feature_names.size();
  Tensor out({data.size(), data.horizon});
  for (std::size_t s = 0; s < data.size(); ++s) {
    const double last = data.inputs[(s * data.window + data.window - 1) * f + target_col];
    for (std::size_t h = 0; h < data.horizon; ++h) out[s * data.horizon + h] = last;
  }
  return out;
}

TrainResult train_model(ModelGraph model, const WindowedDataset& train_set, const TrainConfig& config) {
  config.validate();
  const std::size_t total = train_set.size();
  if (total == 0) throw Error(ErrorCode::EmptyDataset, "training set is empty");

  std::size_t n_val = static_cast<std::size_t>(std::floor(static_cast<double>(total) * config.validation_fraction));
  if (n_val >= total) n_val = 0;
  const std::size_t n_fit = total - n_val;
  const WindowedDataset fit = n_val ? train_set.slice(0, n_fit) : train_set;
  const std::optional<WindowedDataset> val =
      n_val ? std::optional<WindowedDataset>(train_set.slice(n_fit, total)) : std::nullopt;

  TrainHistory history;
  EarlyStopping stopper(config.early_stop_patience);
  std::vector<Tensor> best_params = model.parameter_values();
  AdamState adam;
  const AdamConfig adam_config{config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_epsilon};
  std::uint64_t step = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto order = permutation(n_fit, mix_seed(config.seed, epoch));
    double loss_sum = 0.0;
    model.set_mode(Mode::Training);
    try {
      for (std::size_t b = 0; b < n_fit; b += config.batch_size) {
        const std::size_t end = std::min(n_fit, b + config.batch_size);
        const auto batch = fit.subset(std::span(order).subspan(b, end - b));
        auto [out, cache] = model_forward(model, batch.inputs, mix_seed(model.rng_seed(), ++step));
        const auto loss = mse_loss(out, batch.targets);
        if (!std::isfinite(loss.loss)) {
          throw Error(ErrorCode::DivergedLoss, "non-finite loss at epoch " + std::to_string(epoch));
        }
        loss_sum += loss.loss * static_cast<double>(end - b);
        const Gradients grads = model_backward(model, cache, loss.gradient);
        const auto params = model.parameter_values();
        if (config.optimizer == OptimizerKind::Adam) {
          auto next = adam_update(params, grads.params, adam, adam_config);
          model.set_parameters(next.params);
          adam = std::move(next.state);
        } else {
          model.set_parameters(sgd_update(params, grads.params, config.learning_rate));
        }
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NonFiniteActivation) {
        throw Error(ErrorCode::DivergedLoss, "epoch " + std::to_string(epoch) + ": " + e.what());
      }
      throw;
    }
    model.set_mode(Mode::Inference);

    const double train_loss = loss_sum / static_cast<double>(n_fit);
    const double val_loss = val ? dataset_loss(model, *val) : train_loss;
    if (!std::isfinite(val_loss)) {
      throw Error(ErrorCode::DivergedLoss, "non-finite validation loss at epoch " + std::to_string(epoch));
    }
    history.train_loss.push_back(train_loss);
    history.validation_loss.push_back(val_loss);
    history.seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (stopper.update(epoch, val_loss)) best_params = model.parameter_values();
    if (stopper.should_stop()) {
      history.stopped_early = true;
      break;
    }
  }
  history.best_epoch = stopper.best_epoch();
  model.set_parameters(best_params);
  model.set_mode(Mode::Inference);
  return {std::move(model), std::move(history)};
}

MetricsReport evaluate_predictions(const Tensor& predictions, const WindowedDataset& test_set,
                                   const ScalerParams& scaler, const SpikeRule& rule) {
  if (test_set.size() == 0) throw Error(ErrorCode::EmptyDataset, "test set is empty");
  if (!rule.threshold) throw Error(ErrorCode::InvalidConfig, "spike threshold not resolved");
  if (predictions.shape() != test_set.targets.shape()) {
    throw Error(ErrorCode::ShapeMismatch, "predictions " + shape_str(predictions.shape()) +
                                              " vs targets " + shape_str(test_set.targets.shape()));
  }
  const auto actual = invert_minmax(test_set.targets.data(), scaler, test_set.target_feature);
  const auto predicted = invert_minmax(predictions.data(), scaler, test_set.target_feature);
  return full_report(actual, predicted, *rule.threshold);
}

MetricsReport evaluate_model(const ModelGraph& model, const WindowedDataset& test_set,
                             const ScalerParams& scaler, const SpikeRule& rule) {
  if (test_set.size() == 0) throw Error(ErrorCode::EmptyDataset, "test set is empty");
  return evaluate_predictions(predict_dataset(model, test_set), test_set, scaler, rule);
}

}  // namespace epf
