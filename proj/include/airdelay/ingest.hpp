#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "airdelay/common.hpp"

namespace airdelay {

/// One scheduled flight leg. Airport codes are already resolved to cities.
struct FlightRecord {
  std::string carrier;
  CarrierClass carrier_class = CarrierClass::FSC;
  CityId origin;
  CityId destination;
  std::string flight_number;
  Timestamp scheduled_departure;
  std::optional<Timestamp> actual_departure;
  Timestamp scheduled_arrival;
  std::optional<Timestamp> actual_arrival;
  bool cancelled = false;
  CauseCode cause = CauseCode::NONE;

  bool operator==(const FlightRecord&) const = default;
};

struct TrafficRecord {
  std::string carrier;
  CarrierClass carrier_class = CarrierClass::FSC;
  CityId origin;
  CityId destination;
  YearMonth month;
  long long revenue_pax = 0;

  bool operator==(const TrafficRecord&) const = default;
};

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
};

/// Cities with coordinates plus the airport -> city map (several airports may share a city).
class CityRegistry {
 public:
  void add_city(const CityId& id, GeoPoint where);
  void add_airport(const std::string& code, const CityId& city);

  bool has_city(const CityId& id) const { return cities_.count(id) != 0; }
  const GeoPoint& location(const CityId& id) const;
  /// Throws if the code is unknown.
  const CityId& city_of(const std::string& airport) const;
  std::optional<CityId> find_city_of(const std::string& airport) const;

  const std::map<CityId, GeoPoint>& cities() const { return cities_; }
  const std::map<std::string, CityId>& airports() const { return airports_; }

 private:
  std::map<CityId, GeoPoint> cities_;
  std::map<std::string, CityId> airports_;
};

/// Declared movements per clock hour, per city.
class CapacityRegistry {
 public:
  void set(const CityId& city, long long hourly_capacity);
  bool has(const CityId& city) const { return capacity_.count(city) != 0; }
  long long hourly_capacity(const CityId& city) const;
  const std::map<CityId, long long>& entries() const { return capacity_; }

 private:
  std::map<CityId, long long> capacity_;
};

/// A codeshare agreement on a directional pair, inclusive month range.
struct CodeshareRow {
  CityId origin;
  CityId destination;
  YearMonth start;
  YearMonth end;
};

struct DelayStatus {
  long long arrival_delay_minutes = 0;
  long long departure_delay_minutes = 0;
  bool arrival_delayed = false;
  bool departure_delayed = false;
};

struct RejectedRow {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string reason;
};

template <typename Record>
struct ParseResult {
  std::vector<Record> accepted;
  std::vector<RejectedRow> rejected;
  std::size_t rows() const { return accepted.size() + rejected.size(); }
};

/// Reads flights.csv. Bad rows go to the reject list; an input with no data rows throws.
/// Output is sorted by (scheduled_departure, carrier, flight_number).
ParseResult<FlightRecord> parse_flights(std::istream& in, const CityRegistry& registry);

/// Writes the flights.csv schema. Cities are written through `airport_of` when
/// given, otherwise the city id itself is used as the airport code.
void write_flights(std::ostream& out, const std::vector<FlightRecord>& flights,
                   const std::map<CityId, std::string>* airport_of = nullptr);

ParseResult<TrafficRecord> parse_traffic(std::istream& in, const CityRegistry& registry);
void write_traffic(std::ostream& out, const std::vector<TrafficRecord>& traffic);

CityRegistry parse_cities(std::istream& cities_csv, std::istream& airports_csv);
CapacityRegistry parse_capacity(std::istream& in, const CityRegistry& registry);
std::vector<CodeshareRow> parse_codeshare(std::istream& in, const CityRegistry& registry);

/// Signed arrival/departure delays; "delayed" is strictly greater than `threshold_minutes`.
/// Throws for cancelled flights, which never enter delay statistics.
DelayStatus classify_delay(const FlightRecord& flight, int threshold_minutes = 15);

}  // namespace airdelay
