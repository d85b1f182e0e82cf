#include "epf/frame.hpp"

#include <algorithm>
#include <cstring>
#include <unordered_set>

#include "epf/error.hpp"

namespace epf {

TimeSeriesFrame::TimeSeriesFrame(std::vector<Date> dates, std::vector<std::string> names,
                                 std::vector<std::vector<double>> columns)
    : dates_(std::move(dates)), names_(std::move(names)), columns_(std::move(columns)) {
  if (dates_.empty()) throw Error(ErrorCode::TooFewRows, "frame needs at least one row");
  if (names_.size() != columns_.size()) {
    throw Error(ErrorCode::InvalidRecord, "feature name count does not match column count");
  }
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!seen.insert(names_[i]).second) {
      throw Error(ErrorCode::InvalidRecord, "duplicate feature name '" + names_[i] + "'");
    }
    if (columns_[i].size() != dates_.size()) {
      throw Error(ErrorCode::InvalidRecord, "column '" + names_[i] + "' has wrong length");
    }
  }
  for (std::size_t r = 1; r < dates_.size(); ++r) {
    if (dates_[r] == dates_[r - 1]) {
      throw Error(ErrorCode::DuplicateDate, dates_[r].iso());
    }
    if (dates_[r] < dates_[r - 1]) {
      throw Error(ErrorCode::InvalidRecord, "dates not increasing at " + dates_[r].iso());
    }
  }
}

std::optional<std::size_t> TimeSeriesFrame::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t TimeSeriesFrame::require_index(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx) throw Error(ErrorCode::UnknownFeature, std::string(name));
  return *idx;
}

std::size_t TimeSeriesFrame::missing_count() const {
  std::size_t n = 0;
  for (const auto& col : columns_) {
    n += static_cast<std::size_t>(std::count_if(col.begin(), col.end(), is_missing));
  }
  return n;
}

TimeSeriesFrame TimeSeriesFrame::with_column(std::string name, std::vector<double> values) const {
  auto names = names_;
  auto columns = columns_;
  names.push_back(std::move(name));
  columns.push_back(std::move(values));
  return TimeSeriesFrame(dates_, std::move(names), std::move(columns));
}

TimeSeriesFrame TimeSeriesFrame::with_replaced_column(std::string_view name,
                                                      std::vector<double> values) const {
  auto columns = columns_;
  columns[require_index(name)] = std::move(values);
  return TimeSeriesFrame(dates_, names_, std::move(columns));
}

TimeSeriesFrame TimeSeriesFrame::select(std::span<const std::string> names) const {
  std::vector<std::vector<double>> columns;
  columns.reserve(names.size());
  for (const auto& n : names) columns.push_back(columns_[require_index(n)]);
  return TimeSeriesFrame(dates_, std::vector<std::string>(names.begin(), names.end()),
                         std::move(columns));
}

TimeSeriesFrame TimeSeriesFrame::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > rows()) {
    throw Error(ErrorCode::EmptyRange, "row slice [" + std::to_string(begin) + ", " +
                                           std::to_string(end) + ") of " +
                                           std::to_string(rows()));
  }
  std::vector<Date> dates(dates_.begin() + static_cast<std::ptrdiff_t>(begin),
                          dates_.begin() + static_cast<std::ptrdiff_t>(end));
  std::vector<std::vector<double>> columns;
  columns.reserve(columns_.size());
  for (const auto& col : columns_) {
    columns.emplace_back(col.begin() + static_cast<std::ptrdiff_t>(begin),
                         col.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return TimeSeriesFrame(std::move(dates), names_, std::move(columns));
}

TimeSeriesFrame TimeSeriesFrame::append_rows(const TimeSeriesFrame& tail) const {
  if (tail.names_ != names_) {
    throw Error(ErrorCode::ShapeMismatch, "appended frame has different features");
  }
  auto dates = dates_;
  dates.insert(dates.end(), tail.dates_.begin(), tail.dates_.end());
  auto columns = columns_;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    columns[c].insert(columns[c].end(), tail.columns_[c].begin(), tail.columns_[c].end());
  }
  return TimeSeriesFrame(std::move(dates), names_, std::move(columns));
}

bool operator==(const TimeSeriesFrame& a, const TimeSeriesFrame& b) {
  if (a.dates_ != b.dates_ || a.names_ != b.names_) return false;
  for (std::size_t c = 0; c < a.columns_.size(); ++c) {
    const auto& x = a.columns_[c];
    const auto& y = b.columns_[c];
    // Bitwise so that missing cells compare equal to each other.
    if (std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace epf
