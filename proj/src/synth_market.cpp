#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "airdelay/instruments.hpp"
#include "airdelay/synthlab.hpp"

namespace airdelay {

void MarketScenario::validate() const {
  const std::string where = "MarketScenario";
  if (cities.empty()) throw Error(where + ".cities", "no cities");
  if (routes.empty()) throw Error(where + ".routes", "no routes");
  if (months < 1) throw Error(where + ".months", "must be >= 1");
  if (!(base_delay_rate > 0.0 && base_delay_rate < 1.0)) throw Error(where + ".base_delay_rate", "must lie in (0, 1)");
  if (!(cancel_rate >= 0.0 && cancel_rate < 1.0)) throw Error(where + ".cancel_rate", "must lie in [0, 1)");
  if (weather_share < 0.0 || incident_share < 0.0 || connection_share < 0.0 ||
      weather_share + incident_share + connection_share > 1.0)
    throw Error(where, "cause shares must be non-negative and sum to at most 1");
  if (seats_per_flight <= 0 || !(load_factor > 0.0 && load_factor <= 1.0))
    throw Error(where, "seats_per_flight and load_factor must be positive");
  std::set<CityId> ids;
  for (const auto& c : cities) {
    if (c.airports.empty()) throw Error(where + ".cities." + c.id, "city without airports");
    if (c.hourly_capacity <= 0) throw Error(where + ".cities." + c.id, "capacity must be positive");
    if (!ids.insert(c.id).second) throw Error(where + ".cities." + c.id, "duplicate city");
  }
  std::set<std::string> codes;
  for (const auto& c : carriers) codes.insert(c.code);
  for (const auto& r : routes) {
    const std::string rw = where + ".routes." + r.origin + "-" + r.destination;
    if (!ids.count(r.origin) || !ids.count(r.destination)) throw Error(rw, "unknown city");
    if (r.origin == r.destination) throw Error(rw, "origin equals destination");
    for (const auto& s : r.services) {
      if (!codes.count(s.carrier)) throw Error(rw, "unknown carrier " + s.carrier);
      if (s.flights_per_day < 1 || s.flights_per_day > 19) throw Error(rw, "flights_per_day must be in 1..19");
      if (s.entry_month < 0) throw Error(rw, "entry_month must be >= 0");
    }
  }
}

MarketScenario default_market_scenario() {
  MarketScenario s;
  s.cities = {
      {"SAO", {-23.55, -46.63}, 4, {"GRU", "CGH", "VCP"}},
      {"RIO", {-22.91, -43.17}, 3, {"GIG", "SDU"}},
      {"BSB", {-15.79, -47.88}, 3, {"BSB"}},
      {"BHZ", {-19.92, -43.94}, 2, {"CNF", "PLU"}},
      {"POA", {-30.03, -51.23}, 2, {"POA"}},
      {"REC", {-8.05, -34.88}, 2, {"REC"}},
      {"SSA", {-12.97, -38.50}, 2, {"SSA"}},
      {"MAO", {-3.12, -60.02}, 2, {"MAO"}},
      {"CWB", {-25.43, -49.27}, 2, {"CWB"}},
      {"FLN", {-27.60, -48.55}, 2, {"FLN"}},
  };
  s.carriers = {{"FA", CarrierClass::FSC}, {"FB", CarrierClass::FSC}, {"LC", CarrierClass::LCC}};
  struct Pair {
    CityId a, b;
    std::vector<ScenarioRoute::Service> services;
    std::optional<int> codeshare_from;
  };
  const std::vector<Pair> pairs = {
      {"SAO", "RIO", {{"FA", 4, 0}, {"FB", 3, 0}, {"LC", 2, 6}}, 3},
      {"SAO", "BSB", {{"FA", 2, 0}, {"FB", 2, 0}}, std::nullopt},
      {"SAO", "BHZ", {{"FA", 2, 0}, {"LC", 1, 0}}, std::nullopt},
      {"SAO", "POA", {{"FA", 2, 0}, {"FB", 1, 4}}, 9},
      {"SAO", "REC", {{"FA", 1, 0}, {"LC", 1, 8}}, std::nullopt},
      {"RIO", "BSB", {{"FB", 2, 0}, {"LC", 1, 10}}, std::nullopt},
      {"RIO", "SSA", {{"FA", 1, 0}, {"FB", 1, 0}}, 6},
      {"BSB", "MAO", {{"FA", 1, 0}, {"FB", 1, 5}}, std::nullopt},
      {"BHZ", "REC", {{"FB", 1, 0}, {"LC", 1, 2}}, std::nullopt},
      {"POA", "RIO", {{"FA", 1, 0}, {"FB", 1, 0}}, 12},
      {"SSA", "REC", {{"FA", 1, 0}, {"LC", 1, 0}}, std::nullopt},
      {"BSB", "SSA", {{"FA", 1, 0}, {"FB", 1, 7}}, std::nullopt},
      {"SAO", "CWB", {{"FA", 2, 0}, {"LC", 1, 14}}, std::nullopt},
      {"FLN", "RIO", {{"FB", 1, 0}, {"FA", 1, 3}}, 15},
      {"CWB", "POA", {{"FA", 1, 0}, {"FB", 1, 0}}, std::nullopt},
      {"FLN", "BSB", {{"FA", 1, 0}, {"LC", 1, 16}}, std::nullopt},
  };
  for (const auto& p : pairs) {
    s.routes.push_back({p.a, p.b, p.services, p.codeshare_from});
    s.routes.push_back({p.b, p.a, p.services, p.codeshare_from});
  }
  s.start = {2012, 1};
  s.months = 24;
  s.seed = 20120101;
  return s;
}

namespace {

struct Leg {
  std::size_t route = 0;
  std::string carrier;
  CarrierClass cls = CarrierClass::FSC;
  std::string flight_no;
  std::string origin_airport;
  std::string dest_airport;
  Timestamp sched_dep;
  Timestamp sched_arr;
};

Timestamp month_start(YearMonth ym) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-01T00:00", ym.year, ym.month);
  return parse_timestamp(buf);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

MarketFiles generate_market(const MarketScenario& s) {
  s.validate();
  std::map<CityId, const ScenarioCity*> city;
  CityRegistry registry;
  for (const auto& c : s.cities) {
    city[c.id] = &c;
    registry.add_city(c.id, c.location);
  }
  std::map<std::string, CarrierClass> carrier_class;
  for (const auto& c : s.carriers) carrier_class[c.code] = c.carrier_class;

  MarketFiles files;
  {
    std::ostringstream cities, airports, capacity;
    cities << "city_id,lat,lon\n";
    airports << "airport_code,city_id\n";
    capacity << "city_id,hourly_capacity\n";
    for (const auto& c : s.cities) {
      cities << c.id << ',' << format_double(c.location.lat) << ',' << format_double(c.location.lon) << '\n';
      for (const auto& a : c.airports) airports << a << ',' << c.id << '\n';
      capacity << c.id << ',' << c.hourly_capacity << '\n';
    }
    files.cities = cities.str();
    files.airports = airports.str();
    files.capacity = capacity.str();
  }

  std::ostringstream flights, traffic, codeshare;
  flights << "carrier,carrier_class,origin_airport,dest_airport,flight_no,sched_dep,actual_dep,sched_arr,actual_arr,"
             "cancelled,cause_code\n";
  traffic << "carrier,carrier_class,origin_city,dest_city,month,revenue_pax\n";
  codeshare << "origin_city,dest_city,start_month,end_month\n";

  const YearMonth last = YearMonth::from_index(s.start.index() + s.months - 1);
  for (const auto& r : s.routes) {
    if (r.codeshare_from && *r.codeshare_from < s.months)
      codeshare << r.origin << ',' << r.destination << ','
                << format_year_month(YearMonth::from_index(s.start.index() + *r.codeshare_from)) << ','
                << format_year_month(last) << '\n';
  }

  const double base_logit = std::log(s.base_delay_rate / (1.0 - s.base_delay_rate));
  for (int mo = 0; mo < s.months; ++mo) {
    const YearMonth ym = YearMonth::from_index(s.start.index() + mo);
    auto rng = make_rng(s.seed, static_cast<std::uint64_t>(mo) + 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    // Monthly schedule: each service slot keeps its hour, minute and airports for the whole month.
    std::vector<Leg> legs;
    for (std::size_t ri = 0; ri < s.routes.size(); ++ri) {
      const auto& r = s.routes[ri];
      const double km = great_circle_km(city[r.origin]->location, city[r.destination]->location);
      const auto block = static_cast<std::int64_t>(30 + std::lround(km / 12.0));
      for (const auto& svc : r.services) {
        if (mo < svc.entry_month) continue;
        for (int slot = 0; slot < svc.flights_per_day; ++slot) {
          Leg leg;
          leg.route = ri;
          leg.carrier = svc.carrier;
          leg.cls = carrier_class.at(svc.carrier);
          leg.flight_no = svc.carrier + std::to_string(1000 + ri * 20 + static_cast<std::size_t>(slot));
          const auto& oa = city[r.origin]->airports;
          const auto& da = city[r.destination]->airports;
          leg.origin_airport = oa[static_cast<std::size_t>(unif(rng) * oa.size()) % oa.size()];
          leg.dest_airport = da[static_cast<std::size_t>(unif(rng) * da.size()) % da.size()];
          const auto hour = 6 + static_cast<std::int64_t>(unif(rng) * 16.0);
          const auto minute = 5 * static_cast<std::int64_t>(unif(rng) * 12.0);
          leg.sched_dep = Timestamp{hour * 60 + minute};  // offset within the day for now
          leg.sched_arr = Timestamp{leg.sched_dep.minutes + block};
          legs.push_back(std::move(leg));
        }
      }
    }

    // Scheduled movements per city and hour of day; identical for every day of the month.
    std::map<std::pair<CityId, std::int64_t>, long long> movements;
    for (const auto& leg : legs) {
      const auto& r = s.routes[leg.route];
      ++movements[{r.origin, leg.sched_dep.minutes / 60}];
      ++movements[{r.destination, leg.sched_arr.minutes / 60}];
    }
    auto excess = [&](const CityId& c, std::int64_t hour) {
      const auto it = movements.find({c, hour});
      const long long m = it == movements.end() ? 0 : it->second;
      return static_cast<double>(std::max(0LL, m - city[c]->hourly_capacity));
    };
    std::map<CityId, double> city_shock;
    for (const auto& c : s.cities) city_shock[c.id] = 0.3 * normal(rng);

    const Timestamp first = month_start(ym);
    std::map<std::pair<std::string, std::size_t>, long long> operated;
    for (int day = 0; day < ym.days(); ++day) {
      const std::int64_t day0 = first.minutes + static_cast<std::int64_t>(day) * 1440;
      for (const auto& leg : legs) {
        const auto& r = s.routes[leg.route];
        const Timestamp dep{day0 + leg.sched_dep.minutes};
        const Timestamp arr{day0 + leg.sched_arr.minutes};
        const bool cancelled = unif(rng) < s.cancel_rate;
        flights << leg.carrier << ',' << to_string(leg.cls) << ',' << leg.origin_airport << ',' << leg.dest_airport
                << ',' << leg.flight_no << ',' << format_timestamp(dep) << ',';
        if (cancelled) {
          flights << "NA," << format_timestamp(arr) << ",NA,1,NONE\n";
          continue;
        }
        const double z = base_logit + city_shock[r.origin] + city_shock[r.destination] +
                         s.congestion_sensitivity *
                             (excess(r.origin, leg.sched_dep.minutes / 60) +
                              excess(r.destination, leg.sched_arr.minutes / 60));
        const bool late = unif(rng) < logistic(z);
        std::int64_t arr_delay = 0;
        CauseCode cause = CauseCode::NONE;
        if (late) {
          arr_delay = 16 + static_cast<std::int64_t>(-30.0 * std::log(1.0 - unif(rng)));
          const double c = unif(rng);
          if (c < s.weather_share) cause = CauseCode::WEATHER;
          else if (c < s.weather_share + s.incident_share) cause = CauseCode::INCIDENT;
          else if (c < s.weather_share + s.incident_share + s.connection_share) cause = CauseCode::CONNECTION;
          else cause = CauseCode::OTHER;
        } else {
          arr_delay = static_cast<std::int64_t>(unif(rng) * 31.0) - 15;
        }
        const std::int64_t dep_delay = arr_delay - static_cast<std::int64_t>(unif(rng) * 11.0) + 3;
        flights << format_timestamp(Timestamp{dep.minutes + dep_delay}) << ',' << format_timestamp(arr) << ','
                << format_timestamp(Timestamp{arr.minutes + arr_delay}) << ",0," << to_string(cause) << '\n';
        ++operated[{leg.carrier, leg.route}];
      }
    }
    for (const auto& [key, count] : operated) {
      const auto& r = s.routes[key.second];
      const double noise = 0.9 + 0.2 * unif(rng);
      const auto pax = std::llround(static_cast<double>(count) * s.seats_per_flight * s.load_factor * noise);
      traffic << key.first << ',' << to_string(carrier_class.at(key.first)) << ',' << r.origin << ','
              << r.destination << ',' << format_year_month(ym) << ',' << pax << '\n';
    }
  }
  files.flights = flights.str();
  files.traffic = traffic.str();
  files.codeshare = codeshare.str();
  return files;
}

void write_market(const MarketFiles& files, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::pair<const char*, const std::string*> outputs[] = {
      {"cities.csv", &files.cities},       {"airports.csv", &files.airports}, {"capacity.csv", &files.capacity},
      {"flights.csv", &files.flights},     {"traffic.csv", &files.traffic},   {"codeshare.csv", &files.codeshare},
  };
  for (const auto& [name, text] : outputs) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("write_market", "cannot open " + (dir / name).string());
    out << *text;
    if (!out) throw Error("write_market", "write failed for " + (dir / name).string());
  }
}

}  // namespace airdelay
