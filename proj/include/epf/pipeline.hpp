#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "epf/forecast.hpp"
#include "epf/frame.hpp"
#include "epf/ingest.hpp"
#include "epf/metrics.hpp"
#include "epf/models.hpp"
#include "epf/preprocess.hpp"
#include "epf/training.hpp"

namespace epf {

/// Raised for malformed run configurations (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataConfig {
  std::optional<std::string> csv_path;
  std::optional<SynthConfig> synth;
  CsvSchema schema;
  /// Model input features in order. Empty selects the default set,
  /// restricted to what the data provides.
  std::vector<std::string> features;
};

struct PreprocessConfig {
  std::size_t window = kDefaultWindow;
  std::size_t horizon = kDefaultHorizon;
  double train_fraction = 0.7;
  double spike_quantile = 0.90;
};

struct RunConfig {
  DataConfig data;
  PreprocessConfig preprocess;
  ModelSpec model;
  TrainConfig training;
  std::string output_dir = "out";

  /// Missing fields take their defaults; unknown keys are rejected.
  static RunConfig from_json(std::string_view text);
  std::string to_json() const;
};

/// demand, rrp, solar_exposure, max_temp, min_temp, rainfall, holiday,
/// school_day, month_sin, month_cos, weekend.
const std::vector<std::string>& default_features();

TimeSeriesFrame load_source(const DataConfig& data);

/// Row count plus a 64-bit FNV-1a hash over names, dates and cell bits.
struct DatasetFingerprint {
  std::size_t rows = 0;
  std::string column_hash;
};
DatasetFingerprint fingerprint(const TimeSeriesFrame& frame);

/// Everything downstream of ingestion: forward fill, calendar features,
/// feature selection, 70/30 split, train-only scaler, per-partition
/// windowing, and the spike threshold from training actuals.
struct PreparedData {
  DatasetFingerprint source_fingerprint;
  TimeSeriesFrame frame;  // filled, with calendar features, selected features, raw units
  TimeSeriesFrame train_raw;
  TimeSeriesFrame test_raw;
  ScalerParams scaler;
  WindowedDataset train_set;
  WindowedDataset test_set;
  SpikeRule spike;
};

PreparedData prepare_data(const RunConfig& config);
PreparedData prepare_data(const RunConfig& config, const TimeSeriesFrame& source);

struct ModelRun {
  ModelKind kind = ModelKind::Hybrid;
  ModelGraph model;
  TrainHistory history;
  MetricsReport metrics;
};

ModelRun train_and_evaluate(const RunConfig& config, const PreparedData& data);

/// Persistence baseline (each day repeats the previous day's price) on the test set.
MetricsReport persistence_report(const PreparedData& data);

struct CompareResult {
  std::vector<ModelRun> runs;  // hybrid, rnn, ann
  MetricsReport persistence;
  std::string table_csv;
};

/// Trains the three architectures on identical data and budget. `jobs` > 1
/// trains them concurrently; results do not depend on it.
CompareResult run_compare(const RunConfig& config, const PreparedData& data, unsigned jobs = 1);

/// Label used in comparison tables.
std::string display_name(ModelKind kind);

std::string manifest_json(const RunConfig& config, const PreparedData& data, const ModelRun& run);

/// Number of daily steps that covers `months` whole calendar months after `last`.
std::size_t days_for_months(Date last, std::size_t months);

/// Full observed frame scaled with the stored scaler, ready for recursive
/// forecasting.
TimeSeriesFrame forecast_history(const PreparedData& data, const ScalerParams& scaler);

}  // namespace epf
