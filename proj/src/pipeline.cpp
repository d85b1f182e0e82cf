#include "epf/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <future>
#include <json.hpp>

#include "epf/error.hpp"

namespace epf {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out, std::string_view where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + "." + key + " has the wrong type");
  }
}

std::size_t read_size(const json& obj, const char* key, std::size_t fallback, std::string_view where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(std::string(where) + "." + key + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::vector<ConvBlock> parse_blocks(const json& v) {
  if (!v.is_array()) throw ConfigError("model.conv_blocks must be an array");
  std::vector<ConvBlock> blocks;
  for (const auto& b : v) {
    ConvBlock block;
    if (b.is_array() && b.size() == 3) {
      block = {b[0].get<std::size_t>(), b[1].get<std::size_t>(), b[2].get<std::size_t>()};
    } else if (b.is_object()) {
      check_keys(b, {"out_channels", "kernel", "pool"}, "model.conv_blocks[]");
      block.out_channels = read_size(b, "out_channels", block.out_channels, "conv_block");
      block.kernel = read_size(b, "kernel", block.kernel, "conv_block");
      block.pool = read_size(b, "pool", block.pool, "conv_block");
    } else {
      throw ConfigError("conv block must be [out_channels, kernel, pool] or an object");
    }
    blocks.push_back(block);
  }
  return blocks;
}

std::vector<std::size_t> parse_sizes(const json& v, std::string_view where) {
  if (!v.is_array()) throw ConfigError(std::string(where) + " must be an array");
  std::vector<std::size_t> out;
  for (const auto& x : v) {
    if (!x.is_number_integer() || x.get<long long>() < 1) {
      throw ConfigError(std::string(where) + " entries must be positive integers");
    }
    out.push_back(x.get<std::size_t>());
  }
  return out;
}

void parse_data(const json& j, DataConfig& d) {
  check_keys(j, {"csv_path", "synth", "schema", "features"}, "data");
  if (j.contains("csv_path") && !j["csv_path"].is_null()) {
    if (!j["csv_path"].is_string()) throw ConfigError("data.csv_path must be a string");
    d.csv_path = j["csv_path"].get<std::string>();
  }
  if (j.contains("synth") && !j["synth"].is_null()) {
    const auto& s = j["synth"];
    check_keys(s, {"n_days", "seed", "start", "spike_fraction", "spike_factor", "demand_price_slope",
                   "missing_fraction"},
               "data.synth");
    SynthConfig synth;
    synth.n_days = read_size(s, "n_days", synth.n_days, "data.synth");
    read_field(s, "seed", synth.seed, "data.synth");
    if (s.contains("start")) {
      try {
        synth.start = Date::parse(s["start"].get<std::string>());
      } catch (const std::exception&) {
        throw ConfigError("data.synth.start must be an ISO date");
      }
    }
    read_field(s, "spike_fraction", synth.spike_fraction, "data.synth");
    read_field(s, "spike_factor", synth.spike_factor, "data.synth");
    read_field(s, "demand_price_slope", synth.demand_price_slope, "data.synth");
    read_field(s, "missing_fraction", synth.missing_fraction, "data.synth");
    d.synth = synth;
  }
  if (j.contains("schema")) {
    const auto& s = j["schema"];
    check_keys(s, {"overrides", "date_format", "required"}, "data.schema");
    read_field(s, "overrides", d.schema.overrides, "data.schema");
    read_field(s, "required", d.schema.required, "data.schema");
    if (s.contains("date_format")) {
      const auto fmt = s["date_format"].get<std::string>();
      if (fmt == "iso") {
        d.schema.date_format = DateFormat::Iso;
      } else if (fmt == "dmy") {
        d.schema.date_format = DateFormat::DayMonthYear;
      } else {
        throw ConfigError("data.schema.date_format must be 'iso' or 'dmy'");
      }
    }
  }
  read_field(j, "features", d.features, "data");
}

void parse_model(const json& j, ModelSpec& m) {
  check_keys(j, {"kind", "conv_blocks", "lstm_hidden", "dense_head", "dropout_rate", "rnn_hidden", "ann_hidden"},
             "model");
  if (j.contains("kind")) {
    auto kind = model_kind_from_string(j["kind"].is_string() ? j["kind"].get<std::string>() : "");
    if (!kind) throw ConfigError("model.kind must be hybrid, rnn or ann");
    m.kind = *kind;
  }
  if (j.contains("conv_blocks")) m.conv_blocks = parse_blocks(j["conv_blocks"]);
  m.lstm_hidden = read_size(j, "lstm_hidden", m.lstm_hidden, "model");
  if (j.contains("dense_head")) m.dense_head = parse_sizes(j["dense_head"], "model.dense_head");
  read_field(j, "dropout_rate", m.dropout_rate, "model");
  m.rnn_hidden = read_size(j, "rnn_hidden", m.rnn_hidden, "model");
  if (j.contains("ann_hidden")) m.ann_hidden = parse_sizes(j["ann_hidden"], "model.ann_hidden");
}

void parse_training(const json& j, TrainConfig& t) {
  check_keys(j, {"epochs", "batch_size", "learning_rate", "optimizer", "adam_beta1", "adam_beta2", "adam_epsilon",
                 "early_stop_patience", "validation_fraction", "seed"},
             "training");
  t.epochs = read_size(j, "epochs", t.epochs, "training");
  t.batch_size = read_size(j, "batch_size", t.batch_size, "training");
  read_field(j, "learning_rate", t.learning_rate, "training");
  if (j.contains("optimizer")) {
    auto opt = optimizer_from_string(j["optimizer"].is_string() ? j["optimizer"].get<std::string>() : "");
    if (!opt) throw ConfigError("training.optimizer must be adam or sgd");
    t.optimizer = *opt;
  }
  read_field(j, "adam_beta1", t.adam_beta1, "training");
  read_field(j, "adam_beta2", t.adam_beta2, "training");
  read_field(j, "adam_epsilon", t.adam_epsilon, "training");
  t.early_stop_patience = read_size(j, "early_stop_patience", t.early_stop_patience, "training");
  read_field(j, "validation_fraction", t.validation_fraction, "training");
  read_field(j, "seed", t.seed, "training");
}

ordered_json history_json(const TrainHistory& h) {
  ordered_json j;
  j["epochs_run"] = h.epochs_run();
  j["best_epoch"] = h.best_epoch;
  j["stopped_early"] = h.stopped_early;
  j["train_loss"] = h.train_loss;
  j["validation_loss"] = h.validation_loss;
  j["seconds"] = h.seconds;
  return j;
}

RunConfig config_from_document(const json& doc) {
  check_keys(doc, {"data", "preprocess", "model", "training", "output_dir"}, "config");
  RunConfig c;
  if (doc.contains("data")) parse_data(doc["data"], c.data);
  if (doc.contains("preprocess")) {
    const auto& p = doc["preprocess"];
    check_keys(p, {"window", "horizon", "train_fraction", "quantile"}, "preprocess");
    c.preprocess.window = read_size(p, "window", c.preprocess.window, "preprocess");
    c.preprocess.horizon = read_size(p, "horizon", c.preprocess.horizon, "preprocess");
    read_field(p, "train_fraction", c.preprocess.train_fraction, "preprocess");
    read_field(p, "quantile", c.preprocess.spike_quantile, "preprocess");
  }
  if (doc.contains("model")) parse_model(doc["model"], c.model);
  if (doc.contains("training")) parse_training(doc["training"], c.training);
  read_field(doc, "output_dir", c.output_dir, "config");
  return c;
}

}  // namespace

RunConfig RunConfig::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return config_from_document(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config has a field of the wrong type: ") + e.what());
  }
}

std::string RunConfig::to_json() const {
  ordered_json j;
  ordered_json d;
  d["csv_path"] = data.csv_path ? ordered_json(*data.csv_path) : ordered_json(nullptr);
  if (data.synth) {
    const auto& s = *data.synth;
    d["synth"] = {{"n_days", s.n_days},
                  {"seed", s.seed},
                  {"start", s.start.iso()},
                  {"spike_fraction", s.spike_fraction},
                  {"spike_factor", s.spike_factor},
                  {"demand_price_slope", s.demand_price_slope},
                  {"missing_fraction", s.missing_fraction}};
  } else {
    d["synth"] = nullptr;
  }
  d["schema"] = {{"overrides", data.schema.overrides},
                 {"date_format", data.schema.date_format == DateFormat::Iso ? "iso" : "dmy"},
                 {"required", data.schema.required}};
  d["features"] = data.features;
  j["data"] = std::move(d);
  j["preprocess"] = {{"window", preprocess.window},
                     {"horizon", preprocess.horizon},
                     {"train_fraction", preprocess.train_fraction},
                     {"quantile", preprocess.spike_quantile}};
  auto blocks = ordered_json::array();
  for (const auto& b : model.conv_blocks) blocks.push_back({b.out_channels, b.kernel, b.pool});
  j["model"] = {{"kind", to_string(model.kind)},
                {"conv_blocks", blocks},
                {"lstm_hidden", model.lstm_hidden},
                {"dense_head", model.dense_head},
                {"dropout_rate", model.dropout_rate},
                {"rnn_hidden", model.rnn_hidden},
                {"ann_hidden", model.ann_hidden}};
  j["training"] = {{"epochs", training.epochs},
                   {"batch_size", training.batch_size},
                   {"learning_rate", training.learning_rate},
                   {"optimizer", to_string(training.optimizer)},
                   {"adam_beta1", training.adam_beta1},
                   {"adam_beta2", training.adam_beta2},
                   {"adam_epsilon", training.adam_epsilon},
                   {"early_stop_patience", training.early_stop_patience},
                   {"validation_fraction", training.validation_fraction},
                   {"seed", training.seed}};
  j["output_dir"] = output_dir;
  return j.dump(2);
}

const std::vector<std::string>& default_features() {
  static const std::vector<std::string> names = {
      "demand", "rrp", "solar_exposure", "max_temp", "min_temp", "rainfall",
      "holiday", "school_day", "month_sin", "month_cos", "weekend"};
  return names;
}

TimeSeriesFrame load_source(const DataConfig& data) {
  if (data.csv_path && data.synth) throw ConfigError("data: give either csv_path or synth, not both");
  if (data.csv_path) return load_csv(*data.csv_path, data.schema);
  if (data.synth) return synth_series(*data.synth);
  throw ConfigError("data: no source (set data.csv_path or data.synth)");
}

DatasetFingerprint fingerprint(const TimeSeriesFrame& frame) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      h ^= (word >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& name : frame.feature_names()) {
    for (unsigned char ch : name) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  }
  for (const auto& d : frame.dates()) mix(static_cast<std::uint64_t>(d.days_since(Date(1970, 1, 1))));
  for (std::size_t c = 0; c < frame.n_features(); ++c) {
    for (double v : frame.column(c)) mix(std::bit_cast<std::uint64_t>(v));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return {frame.rows(), buf};
}

PreparedData prepare_data(const RunConfig& config) {
  return prepare_data(config, load_source(config.data));
}

PreparedData prepare_data(const RunConfig& config, const TimeSeriesFrame& source) {
  const auto& p = config.preprocess;
  if (p.window < 1) throw ConfigError("preprocess.window must be >= 1");
  if (p.horizon < 1) throw ConfigError("preprocess.horizon must be >= 1");
  if (!(p.train_fraction > 0.0 && p.train_fraction < 1.0)) {
    throw ConfigError("preprocess.train_fraction must be in (0, 1)");
  }
  if (!(p.spike_quantile > 0.0 && p.spike_quantile < 1.0)) {
    throw ConfigError("preprocess.quantile must be in (0, 1)");
  }

  std::vector<std::string> features;
  if (config.data.features.empty()) {
    for (const auto& name : default_features()) {
      if (feature::is_calendar(name) || source.has_feature(name)) features.push_back(name);
    }
  } else {
    features = config.data.features;
  }
  if (std::find(features.begin(), features.end(), "rrp") == features.end()) {
    throw ConfigError("data.features must include rrp");
  }

  std::vector<std::string> observed;
  for (const auto& name : features) {
    if (!feature::is_calendar(name)) observed.push_back(name);
  }
  const TimeSeriesFrame filled = add_seasonal_features(forward_fill(source.select(observed)));

  PreparedData out{fingerprint(source), filled.select(features), filled, filled, {}, {}, {}, {}};
  std::tie(out.train_raw, out.test_raw) = chrono_split(out.frame, SplitSpec{p.train_fraction});
  out.scaler = fit_minmax(out.train_raw);
  out.train_set = make_windows(apply_minmax(out.train_raw, out.scaler), p.window, p.horizon, "rrp");
  out.test_set = make_windows(apply_minmax(out.test_raw, out.scaler), p.window, p.horizon, "rrp");
  out.spike = resolve_spike_threshold(out.train_raw.column("rrp"), SpikeRule{p.spike_quantile, std::nullopt});
  return out;
}

ModelRun train_and_evaluate(const RunConfig& config, const PreparedData& data) {
  ModelGraph model = build_model(config.model, config.preprocess.window, data.frame.n_features(),
                                 config.preprocess.horizon, config.training.seed);
  TrainResult trained = train_model(std::move(model), data.train_set, config.training);
  MetricsReport metrics = evaluate_model(trained.model, data.test_set, data.scaler, data.spike);
  return ModelRun{config.model.kind, std::move(trained.model), std::move(trained.history), metrics};
}

MetricsReport persistence_report(const PreparedData& data) {
  return evaluate_predictions(persistence_predictions(data.test_set), data.test_set, data.scaler, data.spike);
}

std::string display_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Hybrid: return "LSTM+AlexNet";
    case ModelKind::Rnn: return "RNN";
    case ModelKind::Ann: return "ANN";
  }
  return "unknown";
}

CompareResult run_compare(const RunConfig& config, const PreparedData& data, unsigned jobs) {
  constexpr ModelKind kinds[] = {ModelKind::Hybrid, ModelKind::Rnn, ModelKind::Ann};
  auto run_one = [&config, &data](ModelKind kind) {
    RunConfig c = config;
    c.model.kind = kind;
    return train_and_evaluate(c, data);
  };

  CompareResult result;
  if (jobs > 1) {
    std::vector<std::future<ModelRun>> pending;
    for (ModelKind kind : kinds) pending.push_back(std::async(std::launch::async, run_one, kind));
    for (auto& f : pending) result.runs.push_back(f.get());
  } else {
    for (ModelKind kind : kinds) result.runs.push_back(run_one(kind));
  }
  result.persistence = persistence_report(data);

  std::vector<std::pair<std::string, MetricsReport>> rows;
  for (const auto& run : result.runs) rows.emplace_back(display_name(run.kind), run.metrics);
  result.table_csv = comparison_csv(rows);
  return result;
}

std::string manifest_json(const RunConfig& config, const PreparedData& data, const ModelRun& run) {
  ordered_json j;
  j["config"] = ordered_json::parse(config.to_json());
  j["seeds"] = {{"data_seed", config.data.synth ? ordered_json(config.data.synth->seed) : ordered_json(nullptr)},
                {"model_seed", config.training.seed}};
  j["dataset"] = {{"rows", data.source_fingerprint.rows},
                  {"column_hash", data.source_fingerprint.column_hash},
                  {"first_date", data.frame.dates().front().iso()},
                  {"last_date", data.frame.dates().back().iso()},
                  {"features", data.frame.feature_names()},
                  {"train_samples", data.train_set.size()},
                  {"test_samples", data.test_set.size()}};
  j["model"] = {{"kind", to_string(run.kind)}, {"parameter_count", run.model.parameter_count()}};
  j["history"] = history_json(run.history);
  j["metrics"] = ordered_json::parse(run.metrics.to_json());
  return j.dump(2) + "\n";
}

std::size_t days_for_months(Date last, std::size_t months) {
  int year = last.year();
  unsigned month = last.month();
  std::size_t days = days_in_month(year, month) - last.day();
  for (std::size_t i = 0; i < months; ++i) {
    if (++month > 12) {
      month = 1;
      ++year;
    }
    days += days_in_month(year, month);
  }
  return days;
}

TimeSeriesFrame forecast_history(const PreparedData& data, const ScalerParams& scaler) {
  return apply_minmax(data.frame.select(scaler.feature_names), scaler);
}

}  // namespace epf
