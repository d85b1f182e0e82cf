#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epf/date.hpp"

namespace epf {

/// Sentinel for a missing cell. Always test with is_missing(), never ==.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) noexcept { return std::isnan(v); }

/// Date-indexed multivariate series, stored column-major. Immutable once
/// built: every transformation returns a new frame.
///
/// Invariants checked at construction: N >= 1 rows, every column has N
/// values, feature names are unique, dates strictly increasing.
class TimeSeriesFrame {
 public:
  TimeSeriesFrame() = default;
  TimeSeriesFrame(std::vector<Date> dates, std::vector<std::string> names,
                  std::vector<std::vector<double>> columns);

  std::size_t rows() const noexcept { return dates_.size(); }
  std::size_t n_features() const noexcept { return names_.size(); }
  bool empty() const noexcept { return dates_.empty(); }

  const std::vector<Date>& dates() const noexcept { return dates_; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }

  std::optional<std::size_t> index_of(std::string_view name) const;
  bool has_feature(std::string_view name) const { return index_of(name).has_value(); }
  /// Throws UnknownFeature.
  std::size_t require_index(std::string_view name) const;

  std::span<const double> column(std::size_t i) const { return columns_.at(i); }
  std::span<const double> column(std::string_view name) const {
    return columns_[require_index(name)];
  }
  double at(std::size_t row, std::size_t col) const { return columns_[col][row]; }

  std::size_t missing_count() const;

  TimeSeriesFrame with_column(std::string name, std::vector<double> values) const;
  TimeSeriesFrame with_replaced_column(std::string_view name, std::vector<double> values) const;
  /// Columns in the given order; throws UnknownFeature.
  TimeSeriesFrame select(std::span<const std::string> names) const;
  /// Rows [begin, end).
  TimeSeriesFrame slice_rows(std::size_t begin, std::size_t end) const;
  /// Appends rows from another frame with the same feature names whose dates
  /// all come after this frame's last date.
  TimeSeriesFrame append_rows(const TimeSeriesFrame& tail) const;

  const std::vector<std::vector<double>>& columns() const noexcept { return columns_; }

  friend bool operator==(const TimeSeriesFrame& a, const TimeSeriesFrame& b);

 private:
  std::vector<Date> dates_;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
};

}  // namespace epf
