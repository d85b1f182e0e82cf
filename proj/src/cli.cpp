#include "epf/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "epf/error.hpp"
#include "epf/forecast.hpp"
#include "epf/pipeline.hpp"
#include "epf/serialize.hpp"

namespace epf {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  std::string csv_path;
  bool synth = false;
  std::optional<std::size_t> synth_days;
  std::optional<std::uint64_t> data_seed;
  std::string model_kind;
  std::optional<std::size_t> epochs;
  unsigned jobs = 1;
  std::string model_dir;
  std::size_t months = 72;
  std::optional<std::size_t> days;
};

RunConfig resolve_config(const Options& o) {
  RunConfig c;
  if (!o.config_path.empty()) {
    if (!fs::exists(o.config_path)) throw ConfigError("config file not found: " + o.config_path);
    c = RunConfig::from_json(read_file(o.config_path));
  }
  if (!o.csv_path.empty()) {
    c.data.csv_path = o.csv_path;
    c.data.synth.reset();
  }
  if (o.synth || o.synth_days || o.data_seed) {
    if (!o.csv_path.empty()) throw ConfigError("--csv conflicts with the synthetic data flags");
    if (!c.data.synth) c.data.synth = SynthConfig{};
    c.data.csv_path.reset();
    if (o.synth_days) c.data.synth->n_days = *o.synth_days;
    if (o.data_seed) c.data.synth->seed = *o.data_seed;
  }
  if (o.seed) c.training.seed = *o.seed;
  if (!o.model_kind.empty()) {
    auto kind = model_kind_from_string(o.model_kind);
    if (!kind) throw ConfigError("--model must be hybrid, rnn or ann");
    c.model.kind = *kind;
  }
  if (o.epochs) c.training.epochs = *o.epochs;
  if (!o.out_dir.empty()) c.output_dir = o.out_dir;

  if (!c.data.csv_path && !c.data.synth) {
    throw ConfigError("no data source: pass --csv, --synth or a config with data.csv_path / data.synth");
  }
  try {
    c.training.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  // Referenced paths are checked before any compute.
  if (c.data.csv_path && !fs::exists(*c.data.csv_path)) {
    throw Error(ErrorCode::IoError, "data file not found: " + *c.data.csv_path);
  }
  return c;
}

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

class Runner {
 public:
  Runner(Options opts, std::ostream& out) : o_(std::move(opts)), out_(out) {}

  void inspect() {
    const RunConfig c = resolve_config(o_);
    const TimeSeriesFrame frame = load_source(c.data);
    const auto fp = fingerprint(frame);
    out_ << "rows: " << frame.rows() << "\n"
         << "dates: " << frame.dates().front().iso() << " .. " << frame.dates().back().iso() << "\n"
         << "fingerprint: " << fp.column_hash << "\n"
         << "feature,missing,min,max,mean\n";
    for (std::size_t i = 0; i < frame.n_features(); ++i) {
      double lo = INFINITY, hi = -INFINITY, sum = 0.0;
      std::size_t seen = 0, missing = 0;
      for (double v : frame.column(i)) {
        if (std::isnan(v)) {
          ++missing;
          continue;
        }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
        ++seen;
      }
      out_ << frame.feature_names()[i] << ',' << missing << ',';
      if (seen) {
        out_ << fmt(lo, "%.4f") << ',' << fmt(hi, "%.4f") << ',' << fmt(sum / static_cast<double>(seen), "%.4f");
      } else {
        out_ << ",,";
      }
      out_ << '\n';
    }
  }

  void corr() {
    const RunConfig c = resolve_config(o_);
    const TimeSeriesFrame frame = add_seasonal_features(forward_fill(load_source(c.data)));
    const auto m = pearson_correlation(frame);
    const fs::path path = fs::path(c.output_dir) / "correlation.csv";
    write_file_atomic(path, correlation_to_csv(m));
    if (!m.constant_columns.empty() && !o_.quiet) {
      out_ << "constant columns (correlation reported as 0):";
      for (const auto& n : m.constant_columns) out_ << ' ' << n;
      out_ << '\n';
    }
    note("wrote " + path.string());
  }

  void preprocess() {
    const RunConfig c = resolve_config(o_);
    const PreparedData data = prepare_data(c);
    const fs::path dir = c.output_dir;
    write_file_atomic(dir / "scaler.json", data.scaler.to_json());
    write_file_atomic(dir / "train.csv", to_csv(data.train_raw));
    write_file_atomic(dir / "test.csv", to_csv(data.test_raw));
    ordered_json summary;
    summary["rows"] = data.frame.rows();
    summary["features"] = data.frame.feature_names();
    summary["train_rows"] = data.train_raw.rows();
    summary["test_rows"] = data.test_raw.rows();
    summary["window"] = c.preprocess.window;
    summary["horizon"] = c.preprocess.horizon;
    summary["train_samples"] = data.train_set.size();
    summary["test_samples"] = data.test_set.size();
    summary["spike_threshold"] = *data.spike.threshold;
    write_file_atomic(dir / "preprocess.json", summary.dump(2) + "\n");
    note("train " + std::to_string(data.train_raw.rows()) + " rows, test " + std::to_string(data.test_raw.rows()) +
         " rows; wrote " + dir.string());
  }

  void train() {
    const RunConfig c = resolve_config(o_);
    const PreparedData data = prepare_data(c);
    note("training " + std::string(to_string(c.model.kind)) + " on " + std::to_string(data.train_set.size()) +
         " windows");
    const ModelRun run = train_and_evaluate(c, data);
    const fs::path dir = c.output_dir;
    write_file_atomic(dir / "model.json", model_to_json(run.model));
    write_file_atomic(dir / "scaler.json", data.scaler.to_json());
    write_file_atomic(dir / "metrics.json", run.metrics.to_json());
    write_file_atomic(dir / "manifest.json", manifest_json(c, data, run));
    note("epochs " + std::to_string(run.history.epochs_run()) + ", test RMSE " + fmt(run.metrics.rmse, "%.4f") +
         " $/MWh, MAE " + fmt(run.metrics.mae, "%.4f") + "; wrote " + dir.string());
  }

  void evaluate() {
    const RunConfig c = resolve_config(o_);
    const fs::path model_dir = o_.model_dir.empty() ? fs::path(c.output_dir) : fs::path(o_.model_dir);
    require_file(model_dir / "model.json");
    require_file(model_dir / "scaler.json");
    const ModelGraph model = model_from_json(read_file(model_dir / "model.json"));
    const ScalerParams scaler = ScalerParams::from_json(read_file(model_dir / "scaler.json"));
    const PreparedData data = prepare_data(c);

    const std::size_t window = model.input_shape().at(0);
    const WindowedDataset test =
        make_windows(apply_minmax(data.test_raw.select(scaler.feature_names), scaler), window, model.output_shape().back());
    const MetricsReport report = evaluate_model(model, test, scaler, data.spike);
    const MetricsReport baseline = evaluate_predictions(persistence_predictions(test), test, scaler, data.spike);

    ordered_json doc = ordered_json::parse(report.to_json());
    doc["persistence"] = ordered_json::parse(baseline.to_json());
    const fs::path path = fs::path(c.output_dir) / "evaluation.json";
    write_file_atomic(path, doc.dump(2) + "\n");
    note("test RMSE " + fmt(report.rmse, "%.4f") + " (persistence " + fmt(baseline.rmse, "%.4f") + "); wrote " +
         path.string());
  }

  void compare() {
    const RunConfig c = resolve_config(o_);
    const PreparedData data = prepare_data(c);
    const CompareResult result = run_compare(c, data, o_.jobs);
    const fs::path dir = c.output_dir;
    write_file_atomic(dir / "comparison.csv", result.table_csv);
    ordered_json doc;
    doc["persistence"] = ordered_json::parse(result.persistence.to_json());
    for (const auto& run : result.runs) {
      doc["models"][std::string(to_string(run.kind))] = {
          {"metrics", ordered_json::parse(run.metrics.to_json())},
          {"epochs_run", run.history.epochs_run()},
          {"best_epoch", run.history.best_epoch}};
    }
    write_file_atomic(dir / "comparison.json", doc.dump(2) + "\n");
    if (!o_.quiet) out_ << result.table_csv;
    note("persistence RMSE " + fmt(result.persistence.rmse, "%.4f") + "; wrote " + dir.string());
  }

  void forecast() {
    const RunConfig c = resolve_config(o_);
    const fs::path model_dir = o_.model_dir.empty() ? fs::path(c.output_dir) : fs::path(o_.model_dir);
    require_file(model_dir / "model.json");
    require_file(model_dir / "scaler.json");
    const ModelGraph model = model_from_json(read_file(model_dir / "model.json"));
    const ScalerParams scaler = ScalerParams::from_json(read_file(model_dir / "scaler.json"));
    const PreparedData data = prepare_data(c);

    const TimeSeriesFrame history = forecast_history(data, scaler);
    const std::size_t steps = o_.days ? *o_.days : days_for_months(history.dates().back(), o_.months);
    const ForecastResult daily = recursive_forecast(model, history, scaler, model.input_shape().at(0), steps);
    const ForecastResult monthly = aggregate_monthly(daily);

    const fs::path dir = c.output_dir;
    write_file_atomic(dir / "forecast_daily.csv", daily.to_csv());
    write_file_atomic(dir / "forecast_monthly.csv", monthly.to_csv());
    ordered_json doc;
    doc["daily"] = ordered_json::parse(daily.to_json());
    doc["monthly"] = ordered_json::parse(monthly.to_json());
    write_file_atomic(dir / "forecast.json", doc.dump(1) + "\n");
    note(std::to_string(steps) + " daily steps, " + std::to_string(monthly.horizon_steps()) +
         " monthly rows; wrote " + dir.string());
  }

 private:
  void note(const std::string& msg) {
    if (!o_.quiet) out_ << msg << '\n';
  }

  static void require_file(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorCode::IoError, "missing file: " + path.string());
  }

  Options o_;
  std::ostream& out_;
};

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Electricity price forecasting: ingest, train, evaluate, compare and forecast", "epf"};
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--config", o.config_path, "Run configuration (JSON)");
  app.add_option("--out", o.out_dir, "Output directory (overrides output_dir)");
  app.add_option("--seed", o.seed, "Model seed (overrides training.seed)");
  app.add_flag("--quiet", o.quiet, "Suppress progress output");
  app.add_option("--csv", o.csv_path, "Daily market CSV");
  app.add_flag("--synth", o.synth, "Use the seeded synthetic dataset");
  app.add_option("--synth-days", o.synth_days, "Synthetic series length in days");
  app.add_option("--data-seed", o.data_seed, "Synthetic data seed");
  app.add_option("--model", o.model_kind, "Model kind: hybrid, rnn or ann");
  app.add_option("--epochs", o.epochs, "Training epochs (overrides training.epochs)");

  auto* inspect = app.add_subcommand("inspect", "Print schema and row statistics");
  auto* corr = app.add_subcommand("corr", "Write the feature correlation matrix");
  auto* prep = app.add_subcommand("preprocess", "Write the split, scaler and window summary");
  auto* train = app.add_subcommand("train", "Train one model and write model, scaler, metrics and manifest");
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a trained model on the test split");
  auto* compare = app.add_subcommand("compare", "Train hybrid, rnn and ann and write a comparison table");
  auto* forecast = app.add_subcommand("forecast", "Recursive forecast beyond the last observed date");
  evaluate->add_option("--model-dir", o.model_dir, "Directory holding model.json and scaler.json");
  forecast->add_option("--model-dir", o.model_dir, "Directory holding model.json and scaler.json");
  forecast->add_option("--months", o.months, "Forecast whole calendar months after the last date")->check(CLI::PositiveNumber);
  forecast->add_option("--days", o.days, "Forecast this many days instead of --months")->check(CLI::PositiveNumber);
  compare->add_option("--jobs", o.jobs, "Train the three models concurrently")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "epf: " << e.what() << "\n" << "run 'epf --help' for usage\n";
    return 2;
  }

  try {
    Runner runner(o, out);
    if (*inspect) runner.inspect();
    if (*corr) runner.corr();
    if (*prep) runner.preprocess();
    if (*train) runner.train();
    if (*evaluate) runner.evaluate();
    if (*compare) runner.compare();
    if (*forecast) runner.forecast();
  } catch (const ConfigError& e) {
    err << "epf: config error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "epf: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "epf: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int run_command(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(args, std::cout, std::cerr);
}

}  // namespace epf
