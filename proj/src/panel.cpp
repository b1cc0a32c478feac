#include "airdelay/panel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

namespace airdelay {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ColumnDef {
  std::string name;
  double (*get)(const PanelObservation&);
};

const std::vector<ColumnDef>& column_defs() {
  static const std::vector<ColumnDef> defs = {
      {"odds", [](const PanelObservation& o) { return o.odds_defined ? o.odds : kNaN; }},
      {"mins", [](const PanelObservation& o) { return o.mins; }},
      {"mins_gt_threshold", [](const PanelObservation& o) { return o.mins_gt_threshold; }},
      {"odds_dep", [](const PanelObservation& o) { return o.odds_dep_defined ? o.odds_dep : kNaN; }},
      {"mins_dep", [](const PanelObservation& o) { return o.mins_dep; }},
      {"mins_dep_gt_threshold", [](const PanelObservation& o) { return o.mins_dep_gt_threshold; }},
      {"n_congested", [](const PanelObservation& o) { return o.n_congested; }},
      {"n_uncongested", [](const PanelObservation& o) { return o.n_uncongested; }},
      {"prop_weather", [](const PanelObservation& o) { return o.prop_weather; }},
      {"prop_incident", [](const PanelObservation& o) { return o.prop_incident; }},
      {"prop_connection", [](const PanelObservation& o) { return o.prop_connection; }},
      {"max_city_delay_prop", [](const PanelObservation& o) { return o.max_city_delay_prop; }},
      {"codeshare", [](const PanelObservation& o) { return double(o.codeshare); }},
      {"hhi_pair", [](const PanelObservation& o) { return o.hhi_pair; }},
      {"hhi_max_city", [](const PanelObservation& o) { return o.hhi_max_city; }},
      {"lcc_pair", [](const PanelObservation& o) { return double(o.lcc_pair); }},
      {"lcc_max_city", [](const PanelObservation& o) { return double(o.lcc_max_city); }},
      {"n_flights_total", [](const PanelObservation& o) { return double(o.n_flights_total); }},
  };
  return defs;
}

}  // namespace

const std::vector<std::string>& panel_numeric_columns() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& d : column_defs()) n.push_back(d.name);
    return n;
  }();
  return names;
}

bool is_panel_column(std::string_view name) {
  const auto& defs = column_defs();
  return std::any_of(defs.begin(), defs.end(), [&](const ColumnDef& d) { return d.name == name; });
}

double panel_value(const PanelObservation& obs, std::string_view column) {
  for (const auto& d : column_defs())
    if (d.name == column) return d.get(obs);
  throw Error("panel", "unknown column '" + std::string(column) + "'");
}

std::optional<double> logit_odds(double p) {
  if (!(p > 0.0 && p < 1.0)) return std::nullopt;
  return std::log(p / (1.0 - p));
}

double cell_mins(std::span<const long long> delays, std::optional<int> threshold) {
  if (delays.empty()) throw Error("cell_mins", "cell has no operated flights");
  double sum = 0.0;
  long long n = 0;
  for (auto d : delays) {
    if (threshold && d <= *threshold) continue;
    sum += static_cast<double>(d);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::map<int, long long> hourly_movements(const CityId& city, std::int64_t day, std::span<const FlightRecord> flights) {
  std::map<int, long long> count;
  for (const auto& f : flights) {
    if (f.origin == city && f.scheduled_departure.day() == day) ++count[f.scheduled_departure.hour()];
    if (f.destination == city && f.scheduled_arrival.day() == day) ++count[f.scheduled_arrival.hour()];
  }
  return count;
}

std::set<int> congested_hours(const CityId& city, std::int64_t day, std::span<const FlightRecord> flights,
                              long long capacity) {
  std::set<int> hours;
  for (const auto& [hour, n] : hourly_movements(city, day, flights))
    if (n > capacity) hours.insert(hour);
  return hours;
}

std::set<int> congested_hours(const CityId& city, std::int64_t day, std::span<const FlightRecord> flights,
                              const CapacityRegistry& capacities) {
  return congested_hours(city, day, flights, capacities.hourly_capacity(city));
}

CongestionCalendar::CongestionCalendar(std::span<const FlightRecord> flights, const CapacityRegistry& capacities) {
  std::map<std::tuple<CityId, std::int64_t, int>, long long> movements;
  for (const auto& f : flights) {
    ++movements[{f.origin, f.scheduled_departure.day(), f.scheduled_departure.hour()}];
    ++movements[{f.destination, f.scheduled_arrival.day(), f.scheduled_arrival.hour()}];
  }
  for (const auto& [key, n] : movements)
    if (n > capacities.hourly_capacity(std::get<0>(key))) congested_.insert(key);
}

std::set<int> CongestionCalendar::hours(const CityId& city, std::int64_t day) const {
  std::set<int> out;
  for (auto it = congested_.lower_bound({city, day, 0}); it != congested_.end(); ++it) {
    if (std::get<0>(*it) != city || std::get<1>(*it) != day) break;
    out.insert(std::get<2>(*it));
  }
  return out;
}

std::pair<double, double> congestion_split(std::span<const FlightRecord> cell_flights, YearMonth month,
                                           const CongestionCalendar& calendar) {
  long long congested = 0;
  long long total = 0;
  for (const auto& f : cell_flights) {
    ++total;
    if (calendar.is_congested(f.origin, f.scheduled_departure) ||
        calendar.is_congested(f.destination, f.scheduled_arrival))
      ++congested;
  }
  const double days = month.days();
  return {static_cast<double>(congested) / days, static_cast<double>(total - congested) / days};
}

double hhi(std::span<const double> shares) {
  if (shares.empty()) throw Error("hhi", "empty share list");
  double sum = 0.0;
  double sq = 0.0;
  for (double s : shares) {
    if (!(s >= 0.0)) throw Error("hhi", "negative share");
    sum += s;
    sq += s * s;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error("hhi", "shares sum to " + format_double(sum) + ", not 1");
  return sq;
}

std::optional<double> hhi_from_pax(const std::map<std::string, long long>& pax) {
  long long total = 0;
  for (const auto& [carrier, n] : pax) total += n;
  if (total <= 0) return std::nullopt;
  std::vector<double> shares;
  shares.reserve(pax.size());
  for (const auto& [carrier, n] : pax) shares.push_back(static_cast<double>(n) / static_cast<double>(total));
  return hhi(shares);
}

TrafficIndex::TrafficIndex(std::span<const TrafficRecord> traffic) {
  for (const auto& r : traffic) {
    pair_[{r.origin, r.destination, r.month}][r.carrier] += r.revenue_pax;
    city_[{r.origin, r.month}][r.carrier] += r.revenue_pax;
    city_[{r.destination, r.month}][r.carrier] += r.revenue_pax;
    if (r.carrier_class == CarrierClass::LCC && r.revenue_pax > 0) {
      lcc_pair_.insert({r.origin, r.destination, r.month});
      lcc_city_.insert({r.origin, r.month});
      lcc_city_.insert({r.destination, r.month});
    }
  }
}

std::map<std::string, long long> TrafficIndex::pair_shares(const CityId& o, const CityId& d, YearMonth m) const {
  auto it = pair_.find({o, d, m});
  return it == pair_.end() ? std::map<std::string, long long>{} : it->second;
}

std::map<std::string, long long> TrafficIndex::city_shares(const CityId& c, YearMonth m) const {
  auto it = city_.find({c, m});
  return it == city_.end() ? std::map<std::string, long long>{} : it->second;
}

bool TrafficIndex::lcc_on_pair(const CityId& o, const CityId& d, YearMonth m) const {
  return lcc_pair_.count({o, d, m}) != 0;
}

bool TrafficIndex::lcc_at_city(const CityId& c, YearMonth m) const { return lcc_city_.count({c, m}) != 0; }

std::optional<std::pair<double, double>> pair_and_city_hhi(const TrafficIndex& traffic, const CityId& origin,
                                                           const CityId& destination, YearMonth month) {
  auto pair = hhi_from_pax(traffic.pair_shares(origin, destination, month));
  auto a = hhi_from_pax(traffic.city_shares(origin, month));
  auto b = hhi_from_pax(traffic.city_shares(destination, month));
  if (!pair || !a || !b) return std::nullopt;
  return std::pair{*pair, std::max(*a, *b)};
}

std::pair<int, int> lcc_presence(const TrafficIndex& traffic, const CityId& origin, const CityId& destination,
                                 YearMonth month) {
  const int on_pair = traffic.lcc_on_pair(origin, destination, month) ? 1 : 0;
  const int at_city = traffic.lcc_at_city(origin, month) || traffic.lcc_at_city(destination, month) ? 1 : 0;
  return {on_pair, at_city};
}

CityDelayIndex::CityDelayIndex(std::span<const FlightRecord> flights, int threshold_minutes) {
  for (const auto& f : flights) {
    if (f.cancelled) continue;
    const auto status = classify_delay(f, threshold_minutes);
    auto& dep = ops_[{f.origin, f.scheduled_departure.year_month()}];
    dep.first += status.departure_delayed ? 1 : 0;
    dep.second += 1;
    auto& arr = ops_[{f.destination, f.scheduled_arrival.year_month()}];
    arr.first += status.arrival_delayed ? 1 : 0;
    arr.second += 1;
  }
}

double CityDelayIndex::proportion(const CityId& city, YearMonth month) const {
  auto it = ops_.find({city, month});
  if (it == ops_.end() || it->second.second == 0)
    throw Error("max_city_delay_prop", "city " + city + " has no operations in " + format_year_month(month));
  return static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
}

double max_city_delay_prop(const CityDelayIndex& index, const CityId& origin, const CityId& destination,
                           YearMonth month) {
  return std::max(index.proportion(origin, month), index.proportion(destination, month));
}

namespace {

bool codeshare_active(std::span<const CodeshareRow> rows, const CityId& o, const CityId& d, YearMonth m) {
  return std::any_of(rows.begin(), rows.end(), [&](const CodeshareRow& r) {
    return r.origin == o && r.destination == d && !(m < r.start) && !(r.end < m);
  });
}

double odds_value(long long delayed, long long n, bool corrected, bool& defined) {
  const double p = static_cast<double>(delayed) / static_cast<double>(n);
  if (corrected) {
    const double c = 0.5 / static_cast<double>(n);
    defined = true;
    return std::log((p + c) / (1.0 - p + c));
  }
  auto v = logit_odds(p);
  defined = v.has_value();
  return v.value_or(kNaN);
}

}  // namespace

Panel build_panel(const PanelInputs& in, const PanelConfig& config) {
  if (!in.cities || !in.capacities) throw Error("build_panel", "city and capacity registries are required");
  for (const auto& f : in.flights)
    if (!in.capacities->has(f.origin) || !in.capacities->has(f.destination))
      throw Error("build_panel", "no declared capacity for a city served by flight " + f.carrier + f.flight_number);

  const CongestionCalendar calendar(in.flights, *in.capacities);
  const CityDelayIndex city_delays(in.flights, config.threshold_minutes);
  const TrafficIndex traffic(in.traffic);

  std::map<std::pair<std::string, YearMonth>, std::vector<FlightRecord>> cells;
  for (const auto& f : in.flights) {
    if (f.carrier_class != config.modeled_class) continue;
    cells[{f.origin + "-" + f.destination, f.scheduled_departure.year_month()}].push_back(f);
  }

  Panel panel;
  for (const auto& [key, flights] : cells) {
    const auto& [pair_id, month] = key;
    const CityId& origin = flights.front().origin;
    const CityId& dest = flights.front().destination;

    std::vector<long long> arr, dep;
    long long arr_delayed = 0, dep_delayed = 0, weather = 0, incident = 0, connection = 0;
    for (const auto& f : flights) {
      if (f.cancelled) continue;
      const auto s = classify_delay(f, config.threshold_minutes);
      arr.push_back(s.arrival_delay_minutes);
      dep.push_back(s.departure_delay_minutes);
      arr_delayed += s.arrival_delayed;
      dep_delayed += s.departure_delayed;
      if (s.arrival_delayed) {
        weather += f.cause == CauseCode::WEATHER;
        incident += f.cause == CauseCode::INCIDENT;
        connection += f.cause == CauseCode::CONNECTION;
      }
    }
    if (arr.empty()) {
      panel.dropped.push_back({pair_id, month, "every scheduled flight was cancelled"});
      continue;
    }
    const auto hhis = pair_and_city_hhi(traffic, origin, dest, month);
    if (!hhis) {
      panel.dropped.push_back({pair_id, month, "no revenue passengers on the pair or an endpoint city"});
      continue;
    }

    PanelObservation o;
    o.pair_id = pair_id;
    o.origin = origin;
    o.destination = dest;
    o.month = month;
    const auto n = static_cast<long long>(arr.size());
    const double nd = static_cast<double>(n);
    o.n_flights_total = n;
    o.odds = odds_value(arr_delayed, n, config.odds_continuity_correction, o.odds_defined);
    o.odds_dep = odds_value(dep_delayed, n, config.odds_continuity_correction, o.odds_dep_defined);
    o.mins = cell_mins(arr);
    o.mins_gt_threshold = cell_mins(arr, config.threshold_minutes);
    o.mins_dep = cell_mins(dep);
    o.mins_dep_gt_threshold = cell_mins(dep, config.threshold_minutes);
    std::tie(o.n_congested, o.n_uncongested) = congestion_split(flights, month, calendar);
    o.prop_weather = static_cast<double>(weather) / nd;
    o.prop_incident = static_cast<double>(incident) / nd;
    o.prop_connection = static_cast<double>(connection) / nd;
    o.max_city_delay_prop = max_city_delay_prop(city_delays, origin, dest, month);
    o.codeshare = codeshare_active(in.codeshare, origin, dest, month) ? 1 : 0;
    std::tie(o.hhi_pair, o.hhi_max_city) = *hhis;
    std::tie(o.lcc_pair, o.lcc_max_city) = lcc_presence(traffic, origin, dest, month);
    panel.observations.push_back(std::move(o));
  }
  return panel;
}

namespace {

const char* kPanelHeader =
    "pair_id,origin,destination,month,odds,mins,mins_gt_threshold,odds_dep,mins_dep,mins_dep_gt_threshold,"
    "n_congested,n_uncongested,prop_weather,prop_incident,prop_connection,max_city_delay_prop,codeshare,hhi_pair,"
    "hhi_max_city,lcc_pair,lcc_max_city,n_flights_total,odds_defined,odds_dep_defined";

}  // namespace

void write_panel_csv(std::ostream& out, std::span<const PanelObservation> panel) {
  out << kPanelHeader << '\n';
  for (const auto& o : panel) {
    out << o.pair_id << ',' << o.origin << ',' << o.destination << ',' << format_year_month(o.month) << ','
        << (o.odds_defined ? format_double(o.odds) : "NA") << ',' << format_double(o.mins) << ','
        << format_double(o.mins_gt_threshold) << ','
        << (o.odds_dep_defined ? format_double(o.odds_dep) : "NA") << ',' << format_double(o.mins_dep) << ','
        << format_double(o.mins_dep_gt_threshold) << ',' << format_double(o.n_congested) << ','
        << format_double(o.n_uncongested) << ',' << format_double(o.prop_weather) << ','
        << format_double(o.prop_incident) << ',' << format_double(o.prop_connection) << ','
        << format_double(o.max_city_delay_prop) << ',' << o.codeshare << ',' << format_double(o.hhi_pair) << ','
        << format_double(o.hhi_max_city) << ',' << o.lcc_pair << ',' << o.lcc_max_city << ','
        << o.n_flights_total << ',' << (o.odds_defined ? 1 : 0) << ',' << (o.odds_dep_defined ? 1 : 0) << '\n';
  }
}

std::vector<PanelObservation> read_panel_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kPanelHeader) throw Error("panel.csv", "unexpected header");
  std::vector<PanelObservation> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = "panel.csv:" + std::to_string(line_no);
    const auto f = split(trim(line), ',');
    if (f.size() != 24) throw Error(where, "expected 24 fields");
    auto num = [&](std::size_t i) { return f[i] == "NA" ? kNaN : parse_double(f[i], where); };
    PanelObservation o;
    o.pair_id = f[0];
    o.origin = f[1];
    o.destination = f[2];
    o.month = parse_year_month(f[3]);
    o.odds = num(4);
    o.mins = num(5);
    o.mins_gt_threshold = num(6);
    o.odds_dep = num(7);
    o.mins_dep = num(8);
    o.mins_dep_gt_threshold = num(9);
    o.n_congested = num(10);
    o.n_uncongested = num(11);
    o.prop_weather = num(12);
    o.prop_incident = num(13);
    o.prop_connection = num(14);
    o.max_city_delay_prop = num(15);
    o.codeshare = static_cast<int>(parse_int(f[16], where));
    o.hhi_pair = num(17);
    o.hhi_max_city = num(18);
    o.lcc_pair = static_cast<int>(parse_int(f[19], where));
    o.lcc_max_city = static_cast<int>(parse_int(f[20], where));
    o.n_flights_total = parse_int(f[21], where);
    o.odds_defined = parse_int(f[22], where) != 0;
    o.odds_dep_defined = parse_int(f[23], where) != 0;
    out.push_back(std::move(o));
  }
  return out;
}

DescriptiveStats describe(std::span<const PanelObservation> panel, const std::vector<std::string>& columns) {
  const std::size_t k = columns.size();
  std::vector<std::vector<double>> data(k);
  for (std::size_t j = 0; j < k; ++j) {
    data[j].reserve(panel.size());
    for (const auto& o : panel) data[j].push_back(panel_value(o, columns[j]));
  }

  DescriptiveStats st;
  st.columns = columns;
  st.mean.assign(k, kNaN);
  st.sd.assign(k, kNaN);
  st.min.assign(k, kNaN);
  st.max.assign(k, kNaN);
  st.count.assign(k, 0);
  st.correlation.assign(k, std::vector<double>(k, kNaN));
  for (std::size_t j = 0; j < k; ++j) {
    double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
    long long n = 0;
    for (double v : data[j]) {
      if (std::isnan(v)) continue;
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      ++n;
    }
    st.count[j] = n;
    if (n == 0) continue;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : data[j])
      if (!std::isnan(v)) ss += (v - mean) * (v - mean);
    st.mean[j] = mean;
    st.sd[j] = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    st.min[j] = lo;
    st.max[j] = hi;
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      // pairwise-complete observations
      double sa = 0.0, sb = 0.0;
      long long n = 0;
      for (std::size_t i = 0; i < panel.size(); ++i) {
        if (std::isnan(data[a][i]) || std::isnan(data[b][i])) continue;
        sa += data[a][i];
        sb += data[b][i];
        ++n;
      }
      if (n < 2) continue;
      const double ma = sa / static_cast<double>(n), mb = sb / static_cast<double>(n);
      double sab = 0.0, saa = 0.0, sbb = 0.0;
      for (std::size_t i = 0; i < panel.size(); ++i) {
        if (std::isnan(data[a][i]) || std::isnan(data[b][i])) continue;
        sab += (data[a][i] - ma) * (data[b][i] - mb);
        saa += (data[a][i] - ma) * (data[a][i] - ma);
        sbb += (data[b][i] - mb) * (data[b][i] - mb);
      }
      const double r = (saa > 0.0 && sbb > 0.0) ? sab / std::sqrt(saa * sbb) : kNaN;
      st.correlation[a][b] = st.correlation[b][a] = (a == b && saa > 0.0) ? 1.0 : r;
    }
  }
  return st;
}

}  // namespace airdelay
