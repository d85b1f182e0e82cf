#include "epf/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "epf/error.hpp"

namespace epf {

std::size_t ScalerParams::index_of(std::string_view feature) const {
  for (std::size_t i = 0; i < feature_names.size(); ++i) {
    if (feature_names[i] == feature) return i;
  }
  throw Error(ErrorCode::UnknownFeature, std::string(feature));
}

double ScalerParams::scale(std::size_t f, double x) const {
  const double range = max[f] - min[f];
  return range == 0.0 ? 0.0 : (x - min[f]) / range;
}

double ScalerParams::unscale(std::size_t f, double x) const {
  return x * (max[f] - min[f]) + min[f];
}

std::string ScalerParams::to_json() const {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < feature_names.size(); ++i) {
    doc[feature_names[i]] = {{"min", min[i]}, {"max", max[i]}};
  }
  return doc.dump(2);
}

ScalerParams ScalerParams::from_json(std::string_view text) {
  ScalerParams p;
  try {
    auto doc = nlohmann::ordered_json::parse(text);
    for (const auto& [name, entry] : doc.items()) {
      p.feature_names.push_back(name);
      p.min.push_back(entry.at("min").get<double>());
      p.max.push_back(entry.at("max").get<double>());
      if (p.min.back() > p.max.back()) {
        throw Error(ErrorCode::FormatError, "scaler min > max for '" + name + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("scaler document: ") + e.what());
  }
  return p;
}

ScalerParams fit_minmax(const TimeSeriesFrame& frame, RowRange rows) {
  if (rows.begin >= rows.end || rows.end > frame.rows()) {
    throw Error(ErrorCode::EmptyRange, "scaler fit range [" + std::to_string(rows.begin) + ", " +
                                           std::to_string(rows.end) + ")");
  }
  ScalerParams p;
  p.feature_names = frame.feature_names();
  for (std::size_t c = 0; c < frame.n_features(); ++c) {
    auto col = frame.column(c).subspan(rows.begin, rows.end - rows.begin);
    if (std::any_of(col.begin(), col.end(), is_missing)) {
      throw Error(ErrorCode::InvalidRecord,
                  "missing values in '" + frame.feature_names()[c] + "'; forward_fill first");
    }
    auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    p.min.push_back(*lo);
    p.max.push_back(*hi);
  }
  return p;
}

ScalerParams fit_minmax(const TimeSeriesFrame& frame) {
  return fit_minmax(frame, RowRange{0, frame.rows()});
}

TimeSeriesFrame apply_minmax(const TimeSeriesFrame& frame, const ScalerParams& params) {
  auto cols = frame.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const std::size_t f = params.index_of(frame.feature_names()[c]);
    for (double& v : cols[c]) v = params.scale(f, v);
  }
  return TimeSeriesFrame(frame.dates(), frame.feature_names(), std::move(cols));
}

std::vector<double> invert_minmax(std::span<const double> values, const ScalerParams& params,
                                  std::string_view feature) {
  const std::size_t f = params.index_of(feature);
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [&](double v) { return params.unscale(f, v); });
  return out;
}

std::size_t SplitSpec::train_end_index(std::size_t n_rows) const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "train_fraction must be in (0, 1)");
  }
  return static_cast<std::size_t>(std::floor(static_cast<double>(n_rows) * train_fraction));
}

std::pair<TimeSeriesFrame, TimeSeriesFrame> chrono_split(const TimeSeriesFrame& frame,
                                                         const SplitSpec& spec) {
  const std::size_t n = frame.rows();
  if (n < 2) throw Error(ErrorCode::TooFewRows, "split needs at least 2 rows");
  const std::size_t cut = spec.train_end_index(n);
  if (cut == 0 || cut == n) {
    throw Error(ErrorCode::TooFewRows, "split of " + std::to_string(n) + " rows leaves an empty side");
  }
  return {frame.slice_rows(0, cut), frame.slice_rows(cut, n)};
}

WindowedDataset WindowedDataset::subset(std::span<const std::size_t> indices) const {
  const std::size_t in_stride = window * feature_names.size();
  WindowedDataset out;
  out.window = window;
  out.horizon = horizon;
  out.target_feature = target_feature;
  out.feature_names = feature_names;
  std::vector<double> in, tgt;
  in.reserve(indices.size() * in_stride);
  tgt.reserve(indices.size() * horizon);
  for (std::size_t i : indices) {
    auto src = inputs.data().subspan(i * in_stride, in_stride);
    in.insert(in.end(), src.begin(), src.end());
    auto t = targets.data().subspan(i * horizon, horizon);
    tgt.insert(tgt.end(), t.begin(), t.end());
    out.target_dates.push_back(target_dates[i]);
    out.input_start_dates.push_back(input_start_dates[i]);
  }
  out.inputs = Tensor({indices.size(), window, feature_names.size()}, std::move(in));
  out.targets = Tensor({indices.size(), horizon}, std::move(tgt));
  return out;
}

WindowedDataset WindowedDataset::slice(std::size_t begin, std::size_t end) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = begin; i < end; ++i) idx.push_back(i);
  return subset(idx);
}

WindowedDataset make_windows(const TimeSeriesFrame& frame, std::size_t window, std::size_t horizon,
                             std::string_view target_feature) {
  if (window < 1 || horizon < 1) {
    throw Error(ErrorCode::InvalidConfig, "window and horizon must be >= 1");
  }
  const std::size_t n = frame.rows();
  if (n < window + horizon) {
    throw Error(ErrorCode::SeriesTooShort, std::to_string(n) + " rows < window " +
                                               std::to_string(window) + " + horizon " +
                                               std::to_string(horizon));
  }
  if (frame.missing_count() != 0) {
    throw Error(ErrorCode::InvalidRecord, "windowing requires a frame without missing values");
  }
  const std::size_t target_col = frame.require_index(target_feature);
  const std::size_t f = frame.n_features();
  const std::size_t samples = n - window - horizon + 1;

  WindowedDataset ds;
  ds.window = window;
  ds.horizon = horizon;
  ds.target_feature = std::string(target_feature);
  ds.feature_names = frame.feature_names();
  ds.inputs = Tensor({samples, window, f});
  ds.targets = Tensor({samples, horizon});
  double* in = ds.inputs.ptr();
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t t = 0; t < window; ++t) {
      for (std::size_t c = 0; c < f; ++c) {
        *in++ = frame.at(s + t, c);
      }
    }
    for (std::size_t h = 0; h < horizon; ++h) {
      ds.targets[s * horizon + h] = frame.at(s + window + h, target_col);
    }
    ds.input_start_dates.push_back(frame.dates()[s]);
    ds.target_dates.push_back(frame.dates()[s + window]);
  }
  return ds;
}

}  // namespace epf
