#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "airdelay/ingest.hpp"

namespace testutil {

inline const std::filesystem::path kSource = AIRDELAY_SOURCE_DIR;

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline airdelay::FlightRecord flight(const std::string& carrier, const std::string& origin, const std::string& dest,
                                     const std::string& dep, const std::string& arr, int dep_delay, int arr_delay,
                                     airdelay::CarrierClass cls = airdelay::CarrierClass::FSC) {
  airdelay::FlightRecord f;
  f.carrier = carrier;
  f.carrier_class = cls;
  f.origin = origin;
  f.destination = dest;
  f.flight_number = std::to_string(std::hash<std::string>{}(dep + origin + dest + carrier) % 10000);
  f.scheduled_departure = airdelay::parse_timestamp(dep);
  f.scheduled_arrival = airdelay::parse_timestamp(arr);
  f.actual_departure = airdelay::Timestamp{f.scheduled_departure.minutes + dep_delay};
  f.actual_arrival = airdelay::Timestamp{f.scheduled_arrival.minutes + arr_delay};
  return f;
}

inline airdelay::FlightRecord cancelled(airdelay::FlightRecord f) {
  f.cancelled = true;
  f.actual_departure.reset();
  f.actual_arrival.reset();
  return f;
}

inline airdelay::TrafficRecord traffic(const std::string& carrier, const std::string& o, const std::string& d,
                                       const std::string& month, long long pax,
                                       airdelay::CarrierClass cls = airdelay::CarrierClass::FSC) {
  return {carrier, cls, o, d, airdelay::parse_year_month(month), pax};
}

}  // namespace testutil
