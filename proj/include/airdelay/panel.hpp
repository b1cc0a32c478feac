#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "airdelay/common.hpp"
#include "airdelay/ingest.hpp"

namespace airdelay {

/// One directional city-pair in one month, carrying every regressand and regressor of the delay model.
struct PanelObservation {
  std::string pair_id;  // "<origin>-<destination>"
  CityId origin;
  CityId destination;
  YearMonth month;

  double odds = 0.0;  // NaN when !odds_defined
  double mins = 0.0;
  double mins_gt_threshold = 0.0;
  double odds_dep = 0.0;  // NaN when !odds_dep_defined
  double mins_dep = 0.0;
  double mins_dep_gt_threshold = 0.0;

  double n_congested = 0.0;    // flights per day
  double n_uncongested = 0.0;  // flights per day
  double prop_weather = 0.0;
  double prop_incident = 0.0;
  double prop_connection = 0.0;
  double max_city_delay_prop = 0.0;
  int codeshare = 0;
  double hhi_pair = 1.0;
  double hhi_max_city = 1.0;
  int lcc_pair = 0;
  int lcc_max_city = 0;
  long long n_flights_total = 0;  // operated (non-cancelled) modeled-class flights
  bool odds_defined = false;
  bool odds_dep_defined = false;
};

/// Names of the numeric panel columns, in export order.
const std::vector<std::string>& panel_numeric_columns();
bool is_panel_column(std::string_view name);
/// Value of a numeric column by name; NaN for undefined odds. Throws on unknown names.
double panel_value(const PanelObservation& obs, std::string_view column);

// ---- cell-level operations -------------------------------------------------

/// ln(p / (1 - p)); nullopt when p is 0 or 1 (the cell cannot enter a log-odds regression).
std::optional<double> logit_odds(double p);

/// Mean signed delay; with a threshold, mean over delays strictly above it (0 when none qualify).
double cell_mins(std::span<const long long> delays, std::optional<int> threshold = std::nullopt);

/// Scheduled movements (departures + arrivals) touching `city` on `day`, by clock hour.
std::map<int, long long> hourly_movements(const CityId& city, std::int64_t day, std::span<const FlightRecord> flights);

/// Clock hours of `day` in which scheduled movements at `city` strictly exceed `capacity`.
std::set<int> congested_hours(const CityId& city, std::int64_t day, std::span<const FlightRecord> flights,
                              long long capacity);
std::set<int> congested_hours(const CityId& city, std::int64_t day, std::span<const FlightRecord> flights,
                              const CapacityRegistry& capacities);

/// Every congested (city, day, hour) for a flight set, computed once from scheduled times of all carriers.
class CongestionCalendar {
 public:
  CongestionCalendar() = default;
  CongestionCalendar(std::span<const FlightRecord> flights, const CapacityRegistry& capacities);

  void mark(const CityId& city, std::int64_t day, int hour) { congested_.emplace(city, day, hour); }
  bool is_congested(const CityId& city, Timestamp t) const {
    return congested_.count({city, t.day(), t.hour()}) != 0;
  }
  std::set<int> hours(const CityId& city, std::int64_t day) const;
  bool empty() const { return congested_.empty(); }

 private:
  std::set<std::tuple<CityId, std::int64_t, int>> congested_;
};

/// Daily averages (n_congested, n_uncongested) of scheduled flights in a cell. A flight is congested when
/// its departure hour at the origin or its arrival hour at the destination is congested.
std::pair<double, double> congestion_split(std::span<const FlightRecord> cell_flights, YearMonth month,
                                           const CongestionCalendar& calendar);

/// Sum of squared shares. Shares must be non-negative and sum to one within 1e-9.
double hhi(std::span<const double> shares);

/// Revenue-passenger aggregates per directional pair and per city (both directions), by month.
class TrafficIndex {
 public:
  explicit TrafficIndex(std::span<const TrafficRecord> traffic);

  /// carrier -> pax on the pair-month (empty when absent).
  std::map<std::string, long long> pair_shares(const CityId& o, const CityId& d, YearMonth m) const;
  /// carrier -> pax over all records touching the city in the month.
  std::map<std::string, long long> city_shares(const CityId& c, YearMonth m) const;
  bool lcc_on_pair(const CityId& o, const CityId& d, YearMonth m) const;
  bool lcc_at_city(const CityId& c, YearMonth m) const;

 private:
  std::map<std::tuple<CityId, CityId, YearMonth>, std::map<std::string, long long>> pair_;
  std::map<std::pair<CityId, YearMonth>, std::map<std::string, long long>> city_;
  std::set<std::tuple<CityId, CityId, YearMonth>> lcc_pair_;
  std::set<std::pair<CityId, YearMonth>> lcc_city_;
};

/// HHI of carrier pax shares from a carrier->pax map; nullopt when total pax is zero.
std::optional<double> hhi_from_pax(const std::map<std::string, long long>& pax);

/// (hhi_pair, hhi_max_city); nullopt when the pair or an endpoint city has no passengers that month.
std::optional<std::pair<double, double>> pair_and_city_hhi(const TrafficIndex& traffic, const CityId& origin,
                                                           const CityId& destination, YearMonth month);

/// (lcc_pair, lcc_max_city) presence flags.
std::pair<int, int> lcc_presence(const TrafficIndex& traffic, const CityId& origin, const CityId& destination,
                                 YearMonth month);

/// Delayed and total operations per (city, month); arrivals and departures both count as operations.
class CityDelayIndex {
 public:
  CityDelayIndex(std::span<const FlightRecord> flights, int threshold_minutes);
  /// Proportion of delayed operations; throws when the city had no operations.
  double proportion(const CityId& city, YearMonth month) const;

 private:
  std::map<std::pair<CityId, YearMonth>, std::pair<long long, long long>> ops_;  // delayed, total
};

double max_city_delay_prop(const CityDelayIndex& index, const CityId& origin, const CityId& destination,
                           YearMonth month);

// ---- whole-panel construction ---------------------------------------------

struct PanelConfig {
  int threshold_minutes = 15;
  CarrierClass modeled_class = CarrierClass::FSC;
  /// Replace logit(p) by ln((p + 0.5/n) / (1 - p + 0.5/n)) so that p in {0, 1} cells stay defined.
  bool odds_continuity_correction = false;
};

struct DroppedCell {
  std::string pair_id;
  YearMonth month;
  std::string reason;
};

struct Panel {
  std::vector<PanelObservation> observations;  // sorted by (pair_id, month)
  std::vector<DroppedCell> dropped;
};

struct PanelInputs {
  std::span<const FlightRecord> flights;
  std::span<const TrafficRecord> traffic;
  const CityRegistry* cities = nullptr;
  const CapacityRegistry* capacities = nullptr;
  std::span<const CodeshareRow> codeshare;
};

Panel build_panel(const PanelInputs& inputs, const PanelConfig& config = {});

void write_panel_csv(std::ostream& out, std::span<const PanelObservation> panel);
std::vector<PanelObservation> read_panel_csv(std::istream& in);

/// Univariate statistics and Pearson correlations over panel columns. NaN entries are skipped
/// (pairwise for correlations).
struct DescriptiveStats {
  std::vector<std::string> columns;
  std::vector<double> mean, sd, min, max;
  std::vector<long long> count;
  std::vector<std::vector<double>> correlation;
};

DescriptiveStats describe(std::span<const PanelObservation> panel, const std::vector<std::string>& columns);

}  // namespace airdelay
