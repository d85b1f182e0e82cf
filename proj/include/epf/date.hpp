#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace epf {

enum class DateFormat { Iso, DayMonthYear };

/// Naive calendar date (no time zone). Thin wrapper over a day count since
/// the Unix epoch so that arithmetic and ordering are trivial.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days d) : days_(d) {}
  Date(int year, unsigned month, unsigned day);

  static Date parse(std::string_view text, DateFormat format = DateFormat::Iso);

  std::chrono::sys_days sys_days() const { return days_; }
  std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }
  int year() const { return static_cast<int>(ymd().year()); }
  unsigned month() const { return static_cast<unsigned>(ymd().month()); }
  unsigned day() const { return static_cast<unsigned>(ymd().day()); }
  /// 0 = Sunday ... 6 = Saturday
  unsigned weekday() const { return std::chrono::weekday{days_}.c_encoding(); }
  bool is_weekend() const {
    auto w = weekday();
    return w == 0 || w == 6;
  }

  Date plus_days(long n) const { return Date{days_ + std::chrono::days{n}}; }
  long days_since(Date other) const { return (days_ - other.days_).count(); }

  /// Same month/day one year earlier; Feb 29 falls back to Feb 28.
  Date one_year_earlier() const;

  std::string iso() const;

  friend auto operator<=>(const Date&, const Date&) = default;
  friend bool operator==(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

unsigned days_in_month(int year, unsigned month);

}  // namespace epf
