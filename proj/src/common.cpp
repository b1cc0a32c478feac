#include "airdelay/common.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace airdelay {

namespace chr = std::chrono;

std::string_view to_string(CarrierClass c) { return c == CarrierClass::FSC ? "FSC" : "LCC"; }

std::string_view to_string(CauseCode c) {
  switch (c) {
    case CauseCode::NONE: return "NONE";
    case CauseCode::WEATHER: return "WEATHER";
    case CauseCode::INCIDENT: return "INCIDENT";
    case CauseCode::CONNECTION: return "CONNECTION";
    case CauseCode::OTHER: return "OTHER";
  }
  return "NONE";
}

CarrierClass parse_carrier_class(std::string_view s) {
  s = trim(s);
  if (s == "FSC") return CarrierClass::FSC;
  if (s == "LCC") return CarrierClass::LCC;
  throw Error("carrier_class", "unknown value '" + std::string(s) + "'");
}

CauseCode parse_cause_code(std::string_view s) {
  s = trim(s);
  if (s == "NONE" || s.empty()) return CauseCode::NONE;
  if (s == "WEATHER") return CauseCode::WEATHER;
  if (s == "INCIDENT") return CauseCode::INCIDENT;
  if (s == "CONNECTION") return CauseCode::CONNECTION;
  if (s == "OTHER") return CauseCode::OTHER;
  throw Error("cause_code", "unknown value '" + std::string(s) + "'");
}

int YearMonth::days() const {
  chr::year_month_day_last last{chr::year{year} / chr::month{static_cast<unsigned>(month)} / chr::last};
  return static_cast<int>(static_cast<unsigned>(last.day()));
}

namespace {

int fixed_int(std::string_view s, std::size_t pos, std::size_t len, const char* what) {
  int v = 0;
  if (pos + len > s.size()) throw Error("timestamp", std::string("truncated ") + what);
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') throw Error("timestamp", std::string("bad digit in ") + what);
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

}  // namespace

YearMonth parse_year_month(std::string_view s) {
  s = trim(s);
  if (s.size() != 7 || s[4] != '-') throw Error("year_month", "expected YYYY-MM, got '" + std::string(s) + "'");
  YearMonth ym{fixed_int(s, 0, 4, "year"), fixed_int(s, 5, 2, "month")};
  if (ym.month < 1 || ym.month > 12) throw Error("year_month", "month out of range in '" + std::string(s) + "'");
  return ym;
}

std::string format_year_month(YearMonth ym) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", ym.year, ym.month);
  return buf;
}

Timestamp parse_timestamp(std::string_view s) {
  s = trim(s);
  if (s.size() != 16 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':')
    throw Error("timestamp", "expected YYYY-MM-DDTHH:MM, got '" + std::string(s) + "'");
  const int y = fixed_int(s, 0, 4, "year");
  const int mo = fixed_int(s, 5, 2, "month");
  const int d = fixed_int(s, 8, 2, "day");
  const int h = fixed_int(s, 11, 2, "hour");
  const int mi = fixed_int(s, 14, 2, "minute");
  chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(mo)}, chr::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59) throw Error("timestamp", "invalid date/time '" + std::string(s) + "'");
  const auto days = chr::sys_days{ymd}.time_since_epoch().count();
  return Timestamp{static_cast<std::int64_t>(days) * 1440 + h * 60 + mi};
}

std::string format_timestamp(Timestamp t) {
  const std::int64_t day = t.day();
  const int mins = static_cast<int>(t.minutes - day * 1440);
  chr::year_month_day ymd{chr::sys_days{chr::days{day}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), mins / 60, mins % 60);
  return buf;
}

std::int64_t Timestamp::day() const {
  // floor division so pre-epoch times land on the right day
  return minutes >= 0 ? minutes / 1440 : -((-minutes + 1439) / 1440);
}

int Timestamp::hour() const { return static_cast<int>((minutes - day() * 1440) / 60); }

YearMonth Timestamp::year_month() const {
  chr::year_month_day ymd{chr::sys_days{chr::days{day()}}};
  return {static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month()))};
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view s, const std::string& where) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw Error(where, "not a number: '" + std::string(s) + "'");
  return v;
}

long long parse_int(std::string_view s, const std::string& where) {
  s = trim(s);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw Error(where, "not an integer: '" + std::string(s) + "'");
  return v;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace airdelay
