#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace airdelay {

/// Base exception. `where` names the module (or config field path) that failed.
class Error : public std::runtime_error {
 public:
  Error(std::string where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

using CityId = std::string;

enum class CarrierClass { FSC, LCC };
enum class CauseCode { NONE, WEATHER, INCIDENT, CONNECTION, OTHER };

std::string_view to_string(CarrierClass c);
std::string_view to_string(CauseCode c);
CarrierClass parse_carrier_class(std::string_view s);
CauseCode parse_cause_code(std::string_view s);

/// Calendar month; ordered chronologically.
struct YearMonth {
  int year = 1970;
  int month = 1;  // 1..12

  /// Months since year 0, handy for lag arithmetic.
  int index() const { return year * 12 + (month - 1); }
  static YearMonth from_index(int idx) { return {idx / 12, idx % 12 + 1}; }
  int days() const;

  auto operator<=>(const YearMonth&) const = default;
};

YearMonth parse_year_month(std::string_view s);  // "YYYY-MM"
std::string format_year_month(YearMonth ym);

/// Local civil time at minute resolution, stored as minutes since 1970-01-01T00:00.
struct Timestamp {
  std::int64_t minutes = 0;

  auto operator<=>(const Timestamp&) const = default;

  YearMonth year_month() const;
  int hour() const;           // 0..23
  std::int64_t day() const;   // days since epoch
};

Timestamp parse_timestamp(std::string_view s);  // "YYYY-MM-DDTHH:MM"
std::string format_timestamp(Timestamp t);

/// Whole-minute signed difference a - b.
inline std::int64_t minutes_between(Timestamp a, Timestamp b) { return a.minutes - b.minutes; }

// Small text helpers shared by the CSV readers and the config loader.
std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);
double parse_double(std::string_view s, const std::string& where);
long long parse_int(std::string_view s, const std::string& where);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace airdelay
