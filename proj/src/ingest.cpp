#include "epf/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "epf/error.hpp"

namespace epf {

namespace feature {

bool is_boolean(std::string_view name) { return name == kHoliday || name == kSchoolDay; }

bool is_calendar(std::string_view name) {
  return std::find(kCalendar.begin(), kCalendar.end(), name) != kCalendar.end();
}

}  // namespace feature

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(trim(current));
  return fields;
}

std::vector<std::string_view> aliases(std::string_view canonical) {
  using namespace feature;
  if (canonical == "date") return {"date"};
  if (canonical == kDemand) return {"demand"};
  if (canonical == kRrp) return {"rrp", "price"};
  if (canonical == kSolarExposure) return {"solar_exposure"};
  if (canonical == kMaxTemp) return {"max_temp", "max_temperature"};
  if (canonical == kMinTemp) return {"min_temp", "min_temperature"};
  if (canonical == kRainfall) return {"rainfall"};
  if (canonical == kRrpPositive) return {"rrp_positive"};
  if (canonical == kRrpNegative) return {"rrp_negative"};
  if (canonical == kHoliday) return {"holiday"};
  if (canonical == kSchoolDay) return {"school_day"};
  return {};
}

std::optional<std::size_t> find_header(const std::vector<std::string>& header,
                                       std::string_view canonical, const CsvSchema& schema) {
  if (auto it = schema.overrides.find(std::string(canonical)); it != schema.overrides.end()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == it->second) return i;
    }
    return std::nullopt;
  }
  for (auto alias : aliases(canonical)) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (lower(header[i]) == alias) return i;
    }
  }
  return std::nullopt;
}

bool is_missing_token(std::string_view s) { return s.empty() || s == "NA" || s == "na"; }

double parse_number(std::string_view s) {
  if (is_missing_token(s)) return kMissing;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return kMissing;
  return v;
}

double parse_flag(std::string_view s) {
  auto l = lower(s);
  if (l == "y" || l == "yes" || l == "true" || l == "1") return 1.0;
  if (l == "n" || l == "no" || l == "false" || l == "0") return 0.0;
  return kMissing;
}

}  // namespace

TimeSeriesFrame records_to_frame(std::span<const RawRecord> records) {
  if (records.empty()) throw Error(ErrorCode::TooFewRows, "no records");
  const std::size_t n = records.size();
  std::vector<Date> dates;
  dates.reserve(n);
  std::vector<std::vector<double>> cols(feature::kSchema.size(), std::vector<double>(n));
  auto val = [](const std::optional<double>& v) { return v ? *v : kMissing; };
  for (std::size_t r = 0; r < n; ++r) {
    const auto& rec = records[r];
    if (rec.min_temp && rec.max_temp && *rec.min_temp > *rec.max_temp) {
      throw Error(ErrorCode::InvalidRecord, "min_temp > max_temp on " + rec.date.iso());
    }
    dates.push_back(rec.date);
    cols[0][r] = val(rec.demand);
    cols[1][r] = val(rec.rrp);
    cols[2][r] = val(rec.solar_exposure);
    cols[3][r] = val(rec.max_temp);
    cols[4][r] = val(rec.min_temp);
    cols[5][r] = val(rec.rainfall);
    cols[6][r] = val(rec.rrp_positive);
    cols[7][r] = val(rec.rrp_negative);
    cols[8][r] = rec.holiday ? 1.0 : 0.0;
    cols[9][r] = rec.school_day ? 1.0 : 0.0;
  }
  std::vector<std::string> names(feature::kSchema.begin(), feature::kSchema.end());
  return TimeSeriesFrame(std::move(dates), std::move(names), std::move(cols));
}

TimeSeriesFrame read_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw Error(ErrorCode::EmptyFile, "no header row");
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  for (const auto& req : schema.required) {
    if (!find_header(header, req, schema)) throw Error(ErrorCode::MissingColumn, req);
  }
  auto date_col = find_header(header, "date", schema);
  if (!date_col) throw Error(ErrorCode::MissingColumn, "date");

  struct Source {
    std::string name;
    std::size_t csv_index;
    bool flag;
  };
  std::vector<Source> sources;
  for (auto name : feature::kSchema) {
    if (auto idx = find_header(header, name, schema)) {
      sources.push_back({std::string(name), *idx, feature::is_boolean(name)});
    }
  }

  struct Row {
    Date date;
    std::vector<double> values;
  };
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (*date_col >= fields.size()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": missing date");
    }
    Row row{Date::parse(fields[*date_col], schema.date_format), {}};
    row.values.reserve(sources.size());
    for (const auto& s : sources) {
      const std::string_view cell = s.csv_index < fields.size() ? std::string_view(fields[s.csv_index]) : std::string_view();
      row.values.push_back(s.flag ? parse_flag(cell) : parse_number(cell));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyFile, "no data rows");

  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.date < b.date; });
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].date == rows[r - 1].date) throw Error(ErrorCode::DuplicateDate, rows[r].date.iso());
  }

  std::vector<Date> dates;
  std::vector<std::vector<double>> cols(sources.size(), std::vector<double>(rows.size()));
  dates.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    dates.push_back(rows[r].date);
    for (std::size_t c = 0; c < sources.size(); ++c) cols[c][r] = rows[r].values[c];
  }
  std::vector<std::string> names;
  for (auto& s : sources) names.push_back(s.name);
  return TimeSeriesFrame(std::move(dates), std::move(names), std::move(cols));
}

TimeSeriesFrame load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_csv(in, schema);
}

void write_csv(const TimeSeriesFrame& frame, std::ostream& out) {
  out << "date";
  for (const auto& n : frame.feature_names()) out << ',' << n;
  out << '\n';
  char buf[40];
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    out << frame.dates()[r].iso();
    for (std::size_t c = 0; c < frame.n_features(); ++c) {
      out << ',';
      double v = frame.at(r, c);
      if (is_missing(v)) continue;
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf;
    }
    out << '\n';
  }
}

std::string to_csv(const TimeSeriesFrame& frame) {
  std::ostringstream os;
  write_csv(frame, os);
  return os.str();
}

TimeSeriesFrame forward_fill(const TimeSeriesFrame& frame) {
  std::vector<std::vector<double>> cols = frame.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    auto& col = cols[c];
    auto first = std::find_if_not(col.begin(), col.end(), is_missing);
    if (first == col.end()) {
      throw Error(ErrorCode::AllMissingColumn, frame.feature_names()[c]);
    }
    std::fill(col.begin(), first, *first);
    double last = *first;
    for (auto it = first; it != col.end(); ++it) {
      if (is_missing(*it)) {
        *it = last;
      } else {
        last = *it;
      }
    }
  }
  return TimeSeriesFrame(frame.dates(), frame.feature_names(), std::move(cols));
}

std::array<double, 3> calendar_features(Date date) {
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(date.month() - 1) / 12.0;
  return {std::sin(angle), std::cos(angle), date.is_weekend() ? 1.0 : 0.0};
}

TimeSeriesFrame add_seasonal_features(const TimeSeriesFrame& frame) {
  const std::size_t n = frame.rows();
  std::array<std::vector<double>, 3> cal;
  for (auto& c : cal) c.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto v = calendar_features(frame.dates()[r]);
    for (std::size_t k = 0; k < 3; ++k) cal[k][r] = v[k];
  }
  auto names = frame.feature_names();
  auto cols = frame.columns();
  for (std::size_t k = 0; k < 3; ++k) {
    names.emplace_back(feature::kCalendar[k]);
    cols.push_back(std::move(cal[k]));
  }
  return TimeSeriesFrame(frame.dates(), std::move(names), std::move(cols));
}

CorrelationMatrix pearson_correlation(const TimeSeriesFrame& frame,
                                      std::span<const std::string> columns) {
  const std::size_t n = frame.rows();
  if (n < 2) throw Error(ErrorCode::TooFewRows, "correlation needs at least 2 rows");
  const std::size_t f = columns.size();

  // Centered columns and population standard deviations.
  std::vector<std::vector<double>> centered(f);
  std::vector<double> sd(f);
  for (std::size_t i = 0; i < f; ++i) {
    auto col = frame.column(columns[i]);
    if (std::any_of(col.begin(), col.end(), is_missing)) {
      throw Error(ErrorCode::InvalidRecord, "missing values in column '" + columns[i] + "'");
    }
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
    centered[i].resize(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      centered[i][r] = col[r] - mean;
      ss += centered[i][r] * centered[i][r];
    }
    sd[i] = std::sqrt(ss / static_cast<double>(n));
  }

  CorrelationMatrix m;
  m.names.assign(columns.begin(), columns.end());
  m.values.assign(f, std::vector<double>(f, 0.0));
  for (std::size_t i = 0; i < f; ++i) {
    if (sd[i] == 0.0) {
      m.constant_columns.push_back(columns[i]);
      continue;
    }
    m.values[i][i] = 1.0;
    for (std::size_t j = i + 1; j < f; ++j) {
      if (sd[j] == 0.0) continue;
      double cov = 0.0;
      for (std::size_t r = 0; r < n; ++r) cov += centered[i][r] * centered[j][r];
      cov /= static_cast<double>(n);
      const double r = std::clamp(cov / (sd[i] * sd[j]), -1.0, 1.0);
      m.values[i][j] = r;
      m.values[j][i] = r;
    }
  }
  return m;
}

CorrelationMatrix pearson_correlation(const TimeSeriesFrame& frame) {
  return pearson_correlation(frame, frame.feature_names());
}

std::string correlation_to_csv(const CorrelationMatrix& m) {
  std::ostringstream os;
  for (const auto& n : m.names) os << ',' << n;
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    os << m.names[i];
    for (double v : m.values[i]) {
      std::snprintf(buf, sizeof buf, "%.6f", v);
      os << ',' << buf;
    }
    os << '\n';
  }
  return os.str();
}

namespace {

bool is_fixed_holiday(Date d) {
  const unsigned m = d.month(), day = d.day();
  return (m == 1 && (day == 1 || day == 26)) || (m == 4 && day == 25) ||
         (m == 12 && (day == 25 || day == 26)) || (m == 6 && day == 10 && d.weekday() == 1) ||
         (m == 11 && d.weekday() == 2 && day <= 7);
}

bool in_school_break(Date d) {
  const unsigned m = d.month(), day = d.day();
  return m == 1 || (m == 12 && day >= 20) || (m == 4 && day <= 14) ||
         (m == 6 && day >= 27) || (m == 7 && day <= 10) || (m == 9 && day >= 19) ||
         (m == 10 && day <= 2);
}

}  // namespace

TimeSeriesFrame synth_series(const SynthConfig& config) {
  if (config.n_days == 0) throw Error(ErrorCode::TooFewRows, "n_days must be >= 1");
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  constexpr double kDemandLevel = 115000.0;

  std::vector<RawRecord> records;
  records.reserve(config.n_days);
  double temp_anom = 0.0, demand_anom = 0.0, price_anom = 0.0;
  for (std::size_t i = 0; i < config.n_days; ++i) {
    RawRecord rec;
    rec.date = config.start.plus_days(static_cast<long>(i));
    const Date jan1(rec.date.year(), 1, 1);
    const double doy = static_cast<double>(rec.date.days_since(jan1));
    const double phase = kTwoPi * doy / 365.25;
    const unsigned dow = rec.date.weekday();

    temp_anom = 0.7 * temp_anom + 2.5 * normal(rng);
    const double max_temp = 20.5 + 6.5 * std::cos(phase - 0.3) + temp_anom;
    const double min_temp = max_temp - (9.0 + 1.5 * std::cos(phase) + std::abs(1.5 * normal(rng)));
    const double solar = std::max(0.5, 17.0 + 9.0 * std::cos(phase - 0.05) + 3.5 * normal(rng));
    const double rain_draw = uniform(rng);
    const double rain_amount = -4.5 * std::log(1.0 - uniform(rng));
    const double rainfall = rain_draw < 0.32 ? std::round(rain_amount * 10.0) / 10.0 : 0.0;

    rec.holiday = is_fixed_holiday(rec.date);
    rec.school_day = !rec.date.is_weekend() && !rec.holiday && !in_school_break(rec.date);

    demand_anom = 0.85 * demand_anom + 2500.0 * normal(rng);
    double demand = kDemandLevel + 9000.0 * std::cos(2.0 * phase - 0.4) +
                    1800.0 * std::max(0.0, max_temp - 28.0) +
                    1200.0 * std::max(0.0, 12.0 - min_temp) + demand_anom;
    if (rec.date.is_weekend()) demand -= 11000.0;
    if (rec.holiday) demand -= 9000.0;

    price_anom = 0.5 * price_anom + 9.0 * normal(rng);
    double rrp = 75.0 + 12.0 * std::cos(phase - 3.4) +
                 6.0 * std::sin(kTwoPi * static_cast<double>(dow) / 7.0) +
                 config.demand_price_slope * (demand - kDemandLevel) / 1000.0 + price_anom;
    if (uniform(rng) < config.spike_fraction && rrp > 0.0) rrp *= config.spike_factor;

    rec.demand = demand;
    rec.rrp = rrp;
    rec.solar_exposure = solar;
    rec.max_temp = max_temp;
    rec.min_temp = min_temp;
    rec.rainfall = rainfall;
    rec.rrp_positive = std::max(rrp, 0.0);
    rec.rrp_negative = std::min(rrp, 0.0);
    records.push_back(rec);
  }

  if (config.missing_fraction > 0.0) {
    std::mt19937_64 holes(config.seed ^ 0x9e3779b97f4a7c15ULL);
    for (auto& rec : records) {
      for (auto* field : {&rec.demand, &rec.rrp, &rec.solar_exposure, &rec.max_temp,
                          &rec.min_temp, &rec.rainfall}) {
        if (uniform(holes) < config.missing_fraction) field->reset();
      }
    }
  }
  return records_to_frame(records);
}

TimeSeriesFrame synth_series(std::size_t n_days, std::uint64_t seed) {
  SynthConfig config;
  config.n_days = n_days;
  config.seed = seed;
  return synth_series(config);
}

}  // namespace epf
