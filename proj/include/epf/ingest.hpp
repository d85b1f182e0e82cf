#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epf/date.hpp"
#include "epf/frame.hpp"

namespace epf {

/// Canonical feature names, in the order frames carry them.
namespace feature {
inline constexpr std::string_view kDemand = "demand";
inline constexpr std::string_view kRrp = "rrp";
inline constexpr std::string_view kSolarExposure = "solar_exposure";
inline constexpr std::string_view kMaxTemp = "max_temp";
inline constexpr std::string_view kMinTemp = "min_temp";
inline constexpr std::string_view kRainfall = "rainfall";
inline constexpr std::string_view kRrpPositive = "rrp_positive";
inline constexpr std::string_view kRrpNegative = "rrp_negative";
inline constexpr std::string_view kHoliday = "holiday";
inline constexpr std::string_view kSchoolDay = "school_day";

inline constexpr std::string_view kMonthSin = "month_sin";
inline constexpr std::string_view kMonthCos = "month_cos";
inline constexpr std::string_view kWeekend = "weekend";

inline constexpr std::array<std::string_view, 10> kSchema = {
    kDemand,   kRrp,        kSolarExposure, kMaxTemp, kMinTemp,
    kRainfall, kRrpPositive, kRrpNegative,  kHoliday, kSchoolDay};

inline constexpr std::array<std::string_view, 3> kCalendar = {kMonthSin, kMonthCos, kWeekend};

bool is_boolean(std::string_view name);
bool is_calendar(std::string_view name);
}  // namespace feature

/// One day of market data. Missing numeric cells are nullopt.
struct RawRecord {
  Date date;
  std::optional<double> demand;
  std::optional<double> rrp;
  std::optional<double> solar_exposure;
  std::optional<double> max_temp;
  std::optional<double> min_temp;
  std::optional<double> rainfall;
  std::optional<double> rrp_positive;
  std::optional<double> rrp_negative;
  bool holiday = false;
  bool school_day = false;
};

/// Validates record invariants (strictly increasing dates, min_temp <=
/// max_temp) and packs the records into a frame with the full schema.
TimeSeriesFrame records_to_frame(std::span<const RawRecord> records);

/// Maps canonical names to CSV header names. Canonical columns without an
/// override are matched case-insensitively against built-in aliases
/// (e.g. "RRP", "max_temperature"). Only date and rrp are required.
struct CsvSchema {
  std::map<std::string, std::string> overrides;
  DateFormat date_format = DateFormat::Iso;
  std::vector<std::string> required = {"date", "rrp"};
};

TimeSeriesFrame read_csv(std::istream& in, const CsvSchema& schema = {});
TimeSeriesFrame load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Writes ISO dates and values at 17 significant digits; missing cells are
/// written as empty fields. read_csv of the output reproduces the frame.
void write_csv(const TimeSeriesFrame& frame, std::ostream& out);
std::string to_csv(const TimeSeriesFrame& frame);

TimeSeriesFrame forward_fill(const TimeSeriesFrame& frame);

/// Calendar value for one date, in the order of feature::kCalendar.
std::array<double, 3> calendar_features(Date date);
TimeSeriesFrame add_seasonal_features(const TimeSeriesFrame& frame);

struct CorrelationMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
  /// Columns with zero variance; their rows/columns are 0.0.
  std::vector<std::string> constant_columns;
};

CorrelationMatrix pearson_correlation(const TimeSeriesFrame& frame,
                                      std::span<const std::string> columns);
CorrelationMatrix pearson_correlation(const TimeSeriesFrame& frame);
std::string correlation_to_csv(const CorrelationMatrix& m);

struct SynthConfig {
  std::size_t n_days = 2106;
  std::uint64_t seed = 7;
  Date start{2015, 1, 1};
  double spike_fraction = 0.03;
  double spike_factor = 3.0;
  /// $/MWh per 1000 MWh of demand above the mean level.
  double demand_price_slope = 2.2;
  /// Fraction of numeric weather/market cells blanked out after generation.
  double missing_fraction = 0.0;
};

/// Seeded stand-in for the Victorian daily market dataset: same schema,
/// annual and weekly seasonality, weather-driven demand, and a price that
/// rises with demand plus occasional spikes.
TimeSeriesFrame synth_series(const SynthConfig& config);
TimeSeriesFrame synth_series(std::size_t n_days, std::uint64_t seed);

}  // namespace epf
