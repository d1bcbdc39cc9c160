#ifndef FADER_DAY_H_
#define FADER_DAY_H_

#include <chrono>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace fader {

// A UTC calendar day, stored as days since 1970-01-01.
class Day {
 public:
  constexpr Day() = default;
  constexpr explicit Day(std::int32_t serial) : serial_(serial) {}

  static Day FromYmd(int year, unsigned month, unsigned day);

  // Parses "YYYY-MM-DD". Returns nullopt on any syntax or calendar error.
  static std::optional<Day> Parse(std::string_view text);

  // Day containing a UTC instant given as seconds since the epoch.
  static Day FromUnixSeconds(std::int64_t seconds);

  constexpr std::int32_t serial() const { return serial_; }
  int year() const;
  std::string ToString() const;

  constexpr Day operator+(std::int32_t days) const { return Day(serial_ + days); }
  constexpr Day operator-(std::int32_t days) const { return Day(serial_ - days); }
  constexpr std::int32_t operator-(Day other) const {
    return serial_ - other.serial_;
  }

  constexpr auto operator<=>(const Day&) const = default;

 private:
  std::int32_t serial_ = 0;
};

// First and last day of a calendar year.
Day FirstDayOfYear(int year);
Day LastDayOfYear(int year);

// Closed day interval [first, last].
struct DayRange {
  Day first;
  Day last;

  bool Contains(Day d) const { return first <= d && d <= last; }
  static DayRange Year(int year) {
    return {FirstDayOfYear(year), LastDayOfYear(year)};
  }
  static DayRange Years(int first_year, int last_year) {
    return {FirstDayOfYear(first_year), LastDayOfYear(last_year)};
  }
  static DayRange All();
};

// Parses "YYYY-MM-DDThh:mm:ssZ" into seconds since the epoch.
std::optional<std::int64_t> ParseTimestamp(std::string_view text);
std::string FormatTimestamp(std::int64_t seconds);

}  // namespace fader

template <>
struct std::hash<fader::Day> {
  std::size_t operator()(fader::Day d) const noexcept {
    return std::hash<std::int32_t>()(d.serial());
  }
};

#endif  // FADER_DAY_H_
