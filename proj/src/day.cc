#include "fader/day.h"

#include <cstdio>
#include <limits>

namespace fader {

namespace {

using std::chrono::sys_days;
using std::chrono::year_month_day;

bool ParseDigits(std::string_view text, std::size_t pos, std::size_t n,
                 int* out) {
  if (pos + n > text.size()) return false;
  int value = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    char c = text[i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
  }
  *out = value;
  return true;
}

std::optional<Day> ParseDatePart(std::string_view text) {
  int y, m, d;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!ParseDigits(text, 0, 4, &y) || !ParseDigits(text, 5, 2, &m) ||
      !ParseDigits(text, 8, 2, &d)) {
    return std::nullopt;
  }
  year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                     std::chrono::day{unsigned(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Day(sys_days{ymd}.time_since_epoch().count());
}

}  // namespace

Day Day::FromYmd(int year, unsigned month, unsigned day) {
  year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                     std::chrono::day{day}};
  return Day(sys_days{ymd}.time_since_epoch().count());
}

std::optional<Day> Day::Parse(std::string_view text) {
  if (text.size() != 10) return std::nullopt;
  return ParseDatePart(text);
}

Day Day::FromUnixSeconds(std::int64_t seconds) {
  std::int64_t days = seconds / 86400;
  if (seconds % 86400 < 0) --days;
  return Day(static_cast<std::int32_t>(days));
}

int Day::year() const {
  year_month_day ymd{sys_days{std::chrono::days{serial_}}};
  return int(ymd.year());
}

std::string Day::ToString() const {
  year_month_day ymd{sys_days{std::chrono::days{serial_}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

Day FirstDayOfYear(int year) { return Day::FromYmd(year, 1, 1); }
Day LastDayOfYear(int year) { return Day::FromYmd(year, 12, 31); }

DayRange DayRange::All() {
  return {Day(std::numeric_limits<std::int32_t>::min()),
          Day(std::numeric_limits<std::int32_t>::max())};
}

std::optional<std::int64_t> ParseTimestamp(std::string_view text) {
  if (text.size() != 20 || text[10] != 'T' || text[13] != ':' ||
      text[16] != ':' || text[19] != 'Z') {
    return std::nullopt;
  }
  auto day = ParseDatePart(text.substr(0, 10));
  if (!day) return std::nullopt;
  int hh, mm, ss;
  if (!ParseDigits(text, 11, 2, &hh) || !ParseDigits(text, 14, 2, &mm) ||
      !ParseDigits(text, 17, 2, &ss)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
  return std::int64_t{day->serial()} * 86400 + hh * 3600 + mm * 60 + ss;
}

std::string FormatTimestamp(std::int64_t seconds) {
  Day day = Day::FromUnixSeconds(seconds);
  std::int64_t rem = seconds - std::int64_t{day.serial()} * 86400;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%sT%02d:%02d:%02dZ", day.ToString().c_str(),
                int(rem / 3600), int(rem / 60 % 60), int(rem % 60));
  return buf;
}

}  // namespace fader
