#include "airdelay/ingest.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

namespace airdelay {

void CityRegistry::add_city(const CityId& id, GeoPoint where) {
  if (id.empty()) throw Error("cities", "empty city id");
  if (!(where.lat >= -90.0 && where.lat <= 90.0) || !(where.lon >= -180.0 && where.lon <= 180.0))
    throw Error("cities", "coordinates out of range for " + id);
  if (!cities_.emplace(id, where).second) throw Error("cities", "duplicate city id " + id);
}

void CityRegistry::add_airport(const std::string& code, const CityId& city) {
  if (!has_city(city)) throw Error("airports", "airport " + code + " maps to unknown city " + city);
  if (!airports_.emplace(code, city).second) throw Error("airports", "duplicate airport code " + code);
}

const GeoPoint& CityRegistry::location(const CityId& id) const {
  auto it = cities_.find(id);
  if (it == cities_.end()) throw Error("cities", "unknown city " + id);
  return it->second;
}

const CityId& CityRegistry::city_of(const std::string& airport) const {
  auto it = airports_.find(airport);
  if (it == airports_.end()) throw Error("airports", "unknown airport code " + airport);
  return it->second;
}

std::optional<CityId> CityRegistry::find_city_of(const std::string& airport) const {
  auto it = airports_.find(airport);
  if (it == airports_.end()) return std::nullopt;
  return it->second;
}

void CapacityRegistry::set(const CityId& city, long long hourly_capacity) {
  if (hourly_capacity <= 0) throw Error("capacity", "non-positive capacity for " + city);
  if (!capacity_.emplace(city, hourly_capacity).second) throw Error("capacity", "duplicate entry for " + city);
}

long long CapacityRegistry::hourly_capacity(const CityId& city) const {
  auto it = capacity_.find(city);
  if (it == capacity_.end()) throw Error("capacity", "no declared capacity for city " + city);
  return it->second;
}

namespace {

/// Header-indexed CSV reader over a line stream. No quoting: none of the schemas need it.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string name, const std::vector<std::string>& required)
      : in_(in), name_(std::move(name)) {
    std::string header;
    if (!next_nonempty(header)) throw Error(name_, "empty file");
    const auto cols = split(header, ',');
    for (const auto& want : required) {
      auto it = std::find_if(cols.begin(), cols.end(), [&](const std::string& c) { return trim(c) == want; });
      if (it == cols.end()) throw Error(name_, "missing column '" + want + "'");
      index_.push_back(static_cast<std::size_t>(it - cols.begin()));
    }
    width_ = cols.size();
  }

  /// Fills `fields` in the order of `required`. Returns false at end of input.
  bool next(std::vector<std::string>& fields, std::size_t& line_no, std::string& error) {
    std::string line;
    if (!next_nonempty(line)) return false;
    line_no = line_;
    error.clear();
    const auto cols = split(line, ',');
    fields.clear();
    if (cols.size() != width_) {
      error = "expected " + std::to_string(width_) + " fields, got " + std::to_string(cols.size());
      return true;
    }
    for (auto i : index_) fields.emplace_back(trim(cols[i]));
    return true;
  }

  const std::string& name() const { return name_; }

 private:
  bool next_nonempty(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_;
      if (!trim(line).empty()) return true;
    }
    return false;
  }

  std::istream& in_;
  std::string name_;
  std::vector<std::size_t> index_;
  std::size_t width_ = 0;
  std::size_t line_ = 0;
};

bool parse_bool(std::string_view s) {
  if (s == "1" || s == "true" || s == "TRUE" || s == "True") return true;
  if (s == "0" || s == "false" || s == "FALSE" || s == "False") return false;
  throw Error("cancelled", "not a boolean: '" + std::string(s) + "'");
}

Timestamp timestamp_field(const std::string& s, const char* column) {
  try {
    return parse_timestamp(s);
  } catch (const Error& e) {
    throw Error(column, e.what());
  }
}

std::optional<Timestamp> optional_timestamp(const std::string& s, const char* column) {
  if (s.empty() || s == "NA") return std::nullopt;
  return timestamp_field(s, column);
}

const std::vector<std::string> kFlightColumns = {"carrier",   "carrier_class", "origin_airport", "dest_airport",
                                                 "flight_no", "sched_dep",     "actual_dep",     "sched_arr",
                                                 "actual_arr", "cancelled",    "cause_code"};

}  // namespace

ParseResult<FlightRecord> parse_flights(std::istream& in, const CityRegistry& registry) {
  CsvReader reader(in, "flights.csv", kFlightColumns);
  ParseResult<FlightRecord> out;
  std::set<std::tuple<std::string, std::string, Timestamp>> seen;
  std::vector<std::string> f;
  std::size_t line = 0;
  std::string err;
  while (reader.next(f, line, err)) {
    if (!err.empty()) {
      out.rejected.push_back({line, err});
      continue;
    }
    try {
      FlightRecord r;
      r.carrier = f[0];
      if (r.carrier.empty()) throw Error("carrier", "empty");
      r.carrier_class = parse_carrier_class(f[1]);
      auto o = registry.find_city_of(f[2]);
      if (!o) throw Error("origin_airport", "unknown airport code " + f[2]);
      auto d = registry.find_city_of(f[3]);
      if (!d) throw Error("dest_airport", "unknown airport code " + f[3]);
      r.origin = *o;
      r.destination = *d;
      if (r.origin == r.destination) throw Error("dest_airport", "origin and destination are the same city");
      r.flight_number = f[4];
      r.scheduled_departure = timestamp_field(f[5], "sched_dep");
      r.actual_departure = optional_timestamp(f[6], "actual_dep");
      r.scheduled_arrival = timestamp_field(f[7], "sched_arr");
      r.actual_arrival = optional_timestamp(f[8], "actual_arr");
      r.cancelled = parse_bool(f[9]);
      r.cause = parse_cause_code(f[10]);
      if (r.scheduled_arrival <= r.scheduled_departure)
        throw Error("sched_arr", "scheduled arrival not after scheduled departure");
      if (r.cancelled && (r.actual_departure || r.actual_arrival))
        throw Error("cancelled", "cancelled flight carries actual times");
      if (!r.cancelled && (!r.actual_departure || !r.actual_arrival))
        throw Error("actual_arr", "operated flight is missing actual times");
      if (!seen.emplace(r.carrier, r.flight_number, r.scheduled_departure).second)
        throw Error("flight_no", "duplicate of an earlier (carrier, flight_no, sched_dep) row");
      out.accepted.push_back(std::move(r));
    } catch (const Error& e) {
      out.rejected.push_back({line, e.what()});
    }
  }
  if (out.rows() == 0) throw Error("flights.csv", "no data rows");
  std::stable_sort(out.accepted.begin(), out.accepted.end(), [](const FlightRecord& a, const FlightRecord& b) {
    return std::tie(a.scheduled_departure, a.carrier, a.flight_number) <
           std::tie(b.scheduled_departure, b.carrier, b.flight_number);
  });
  return out;
}

void write_flights(std::ostream& out, const std::vector<FlightRecord>& flights,
                   const std::map<CityId, std::string>* airport_of) {
  auto code = [&](const CityId& c) -> const std::string& {
    if (airport_of) {
      auto it = airport_of->find(c);
      if (it != airport_of->end()) return it->second;
    }
    return c;
  };
  auto ts = [](const std::optional<Timestamp>& t) { return t ? format_timestamp(*t) : std::string(); };
  out << "carrier,carrier_class,origin_airport,dest_airport,flight_no,sched_dep,actual_dep,sched_arr,actual_arr,"
         "cancelled,cause_code\n";
  for (const auto& r : flights) {
    out << r.carrier << ',' << to_string(r.carrier_class) << ',' << code(r.origin) << ',' << code(r.destination)
        << ',' << r.flight_number << ',' << format_timestamp(r.scheduled_departure) << ','
        << ts(r.actual_departure) << ',' << format_timestamp(r.scheduled_arrival) << ',' << ts(r.actual_arrival)
        << ',' << (r.cancelled ? 1 : 0) << ',' << to_string(r.cause) << '\n';
  }
}

ParseResult<TrafficRecord> parse_traffic(std::istream& in, const CityRegistry& registry) {
  CsvReader reader(in, "traffic.csv", {"carrier", "carrier_class", "origin_city", "dest_city", "month", "revenue_pax"});
  ParseResult<TrafficRecord> out;
  std::set<std::tuple<std::string, CityId, CityId, YearMonth>> seen;
  std::vector<std::string> f;
  std::size_t line = 0;
  std::string err;
  while (reader.next(f, line, err)) {
    if (!err.empty()) {
      out.rejected.push_back({line, err});
      continue;
    }
    try {
      TrafficRecord r;
      r.carrier = f[0];
      r.carrier_class = parse_carrier_class(f[1]);
      r.origin = f[2];
      r.destination = f[3];
      if (!registry.has_city(r.origin)) throw Error("origin_city", "unknown city " + r.origin);
      if (!registry.has_city(r.destination)) throw Error("dest_city", "unknown city " + r.destination);
      r.month = parse_year_month(f[4]);
      r.revenue_pax = parse_int(f[5], "revenue_pax");
      if (r.revenue_pax < 0) throw Error("revenue_pax", "negative");
      if (!seen.emplace(r.carrier, r.origin, r.destination, r.month).second)
        throw Error("carrier", "duplicate (carrier, pair, month)");
      out.accepted.push_back(std::move(r));
    } catch (const Error& e) {
      out.rejected.push_back({line, e.what()});
    }
  }
  if (out.rows() == 0) throw Error("traffic.csv", "no data rows");
  std::stable_sort(out.accepted.begin(), out.accepted.end(), [](const TrafficRecord& a, const TrafficRecord& b) {
    return std::tie(a.month, a.origin, a.destination, a.carrier) <
           std::tie(b.month, b.origin, b.destination, b.carrier);
  });
  return out;
}

void write_traffic(std::ostream& out, const std::vector<TrafficRecord>& traffic) {
  out << "carrier,carrier_class,origin_city,dest_city,month,revenue_pax\n";
  for (const auto& r : traffic)
    out << r.carrier << ',' << to_string(r.carrier_class) << ',' << r.origin << ',' << r.destination << ','
        << format_year_month(r.month) << ',' << r.revenue_pax << '\n';
}

CityRegistry parse_cities(std::istream& cities_csv, std::istream& airports_csv) {
  CityRegistry reg;
  {
    CsvReader reader(cities_csv, "cities.csv", {"city_id", "lat", "lon"});
    std::vector<std::string> f;
    std::size_t line = 0;
    std::string err;
    while (reader.next(f, line, err)) {
      const std::string where = "cities.csv:" + std::to_string(line);
      if (!err.empty()) throw Error(where, err);
      reg.add_city(f[0], {parse_double(f[1], where + ".lat"), parse_double(f[2], where + ".lon")});
    }
  }
  CsvReader reader(airports_csv, "airports.csv", {"airport_code", "city_id"});
  std::vector<std::string> f;
  std::size_t line = 0;
  std::string err;
  while (reader.next(f, line, err)) {
    if (!err.empty()) throw Error("airports.csv:" + std::to_string(line), err);
    reg.add_airport(f[0], f[1]);
  }
  return reg;
}

CapacityRegistry parse_capacity(std::istream& in, const CityRegistry& registry) {
  CapacityRegistry cap;
  CsvReader reader(in, "capacity.csv", {"city_id", "hourly_capacity"});
  std::vector<std::string> f;
  std::size_t line = 0;
  std::string err;
  while (reader.next(f, line, err)) {
    const std::string where = "capacity.csv:" + std::to_string(line);
    if (!err.empty()) throw Error(where, err);
    if (!registry.has_city(f[0])) throw Error(where, "unknown city " + f[0]);
    cap.set(f[0], parse_int(f[1], where + ".hourly_capacity"));
  }
  return cap;
}

std::vector<CodeshareRow> parse_codeshare(std::istream& in, const CityRegistry& registry) {
  std::vector<CodeshareRow> rows;
  CsvReader reader(in, "codeshare.csv", {"origin_city", "dest_city", "start_month", "end_month"});
  std::vector<std::string> f;
  std::size_t line = 0;
  std::string err;
  while (reader.next(f, line, err)) {
    const std::string where = "codeshare.csv:" + std::to_string(line);
    if (!err.empty()) throw Error(where, err);
    if (!registry.has_city(f[0]) || !registry.has_city(f[1])) throw Error(where, "unknown city");
    CodeshareRow r{f[0], f[1], parse_year_month(f[2]), parse_year_month(f[3])};
    if (r.end < r.start) throw Error(where, "end_month before start_month");
    rows.push_back(std::move(r));
  }
  return rows;
}

DelayStatus classify_delay(const FlightRecord& flight, int threshold_minutes) {
  if (flight.cancelled || !flight.actual_arrival || !flight.actual_departure)
    throw Error("classify_delay", "cancelled flight " + flight.carrier + flight.flight_number);
  if (threshold_minutes <= 0) throw Error("classify_delay", "threshold must be positive");
  DelayStatus s;
  s.arrival_delay_minutes = minutes_between(*flight.actual_arrival, flight.scheduled_arrival);
  s.departure_delay_minutes = minutes_between(*flight.actual_departure, flight.scheduled_departure);
  s.arrival_delayed = s.arrival_delay_minutes > threshold_minutes;
  s.departure_delayed = s.departure_delay_minutes > threshold_minutes;
  return s;
}

}  // namespace airdelay
