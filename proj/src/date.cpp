#include "epf/date.hpp"

#include <charconv>
#include <cstdio>

#include "epf/error.hpp"

namespace epf {

namespace {

int parse_int(std::string_view text, std::string_view whole) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorCode::ParseError, "invalid date '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day) {
  std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                  std::chrono::day{day}};
  if (!ymd.ok()) {
    throw Error(ErrorCode::ParseError, "invalid calendar date " + std::to_string(year) + "-" +
                                           std::to_string(month) + "-" + std::to_string(day));
  }
  days_ = std::chrono::sys_days{ymd};
}

Date Date::parse(std::string_view text, DateFormat format) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '"')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '"' || text.back() == '\r'))
    text.remove_suffix(1);

  const char sep = format == DateFormat::Iso ? '-' : '/';
  auto first = text.find(sep);
  auto second = first == std::string_view::npos ? first : text.find(sep, first + 1);
  if (second == std::string_view::npos) {
    throw Error(ErrorCode::ParseError, "invalid date '" + std::string(text) + "'");
  }
  int a = parse_int(text.substr(0, first), text);
  int b = parse_int(text.substr(first + 1, second - first - 1), text);
  int c = parse_int(text.substr(second + 1), text);
  if (b < 1) throw Error(ErrorCode::ParseError, "invalid date '" + std::string(text) + "'");
  if (format == DateFormat::Iso) {
    if (c < 1) throw Error(ErrorCode::ParseError, "invalid date '" + std::string(text) + "'");
    return Date(a, static_cast<unsigned>(b), static_cast<unsigned>(c));
  }
  if (a < 1) throw Error(ErrorCode::ParseError, "invalid date '" + std::string(text) + "'");
  return Date(c, static_cast<unsigned>(b), static_cast<unsigned>(a));
}

Date Date::one_year_earlier() const {
  auto d = ymd();
  std::chrono::year_month_day prev{d.year() - std::chrono::years{1}, d.month(), d.day()};
  if (!prev.ok()) {
    prev = std::chrono::year_month_day{prev.year(), prev.month(), std::chrono::day{28}};
  }
  return Date{std::chrono::sys_days{prev}};
}

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year(), month(), day());
  return buf;
}

unsigned days_in_month(int year, unsigned month) {
  using namespace std::chrono;
  year_month_day_last last{std::chrono::year{year}, month_day_last{std::chrono::month{month}}};
  return static_cast<unsigned>(last.day());
}

}  // namespace epf
