#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "airdelay/common.hpp"
#include "airdelay/estimators.hpp"
#include "airdelay/ingest.hpp"

namespace airdelay {

/// Seed of the `index`-th independent substream of `master` (splitmix64 over master and index).
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index);
std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t index = 0);

/// Linear panel y = beta x + sum_j gamma_j w_j + a_i + b_t + u, x = sum_m pi_m z_m + v.
/// (u, v) have correlation rho per period; u follows an AR(1) within units with coefficient phi.
struct DgpConfig {
  int n_units = 100;
  int n_periods = 20;
  double beta = 1.0;
  std::vector<double> pi{1.0};     // one excluded instrument per entry
  std::vector<double> gamma;       // exogenous regressors w_j, unit variance
  double w_loading = 0.0;          // w_j = w_loading z_1 + sqrt(1 - w_loading^2) eta_j
  double rho = 0.0;
  double sigma_u = 1.0;
  double phi = 0.0;
  bool heteroscedastic = false;    // sd(u) proportional to sqrt(1 + x^2)
  double unit_effect_sd = 0.0;
  double time_effect_sd = 0.0;
  double invalid_instrument = 0.0; // correlation of z_1 with u
  FixedEffectsSpec fe;             // no effects: a constant is included instead
  std::optional<int> hac_bandwidth;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Population quantities implied by a configuration.
struct DgpTruth {
  double beta = 0.0;
  double cov_xu = 0.0;
  double var_x = 0.0;
  double ols_plim = 0.0;  // beta + cov(x, u) / var(x); exact for homoscedastic designs
};

struct SyntheticPanel {
  EstimationProblem problem;
  DgpTruth truth;
  VectorXd u;
  VectorXd v;
};

DgpTruth dgp_truth(const DgpConfig& config);
SyntheticPanel generate_linear_panel(const DgpConfig& config);

/// Strong instrument, rho = 0.8, two-way effects, 100 units by 20 periods.
DgpConfig standard_scenario();
/// beta = 0.8 with OLS plim -0.2: pi = 1, sigma_u = 2.5, rho = -0.8, n = 5000.
DgpConfig sign_flip_scenario();

/// Reads `key = value` lines (section-less INI) into a configuration, starting from `base`.
DgpConfig parse_dgp_config(std::istream& in, DgpConfig base = {});

/// Runs `task(rep_seed, rep)` for rep = 0..reps-1 on up to `threads` workers. Results land in
/// replication order, so the output does not depend on scheduling.
template <class R>
std::vector<R> run_replications(int reps, std::uint64_t master_seed, int threads,
                                const std::function<R(std::uint64_t, int)>& task);

/// Neumaier-compensated mean.
double compensated_mean(const std::vector<double>& values);

/// Least squares by normal equations, long double accumulation and Gaussian elimination with
/// partial pivoting. Independent of the Eigen-based estimators; used as a cross-check.
std::vector<double> oracle_ols(const VectorXd& y, const MatrixXd& X);

// Synthetic airline market ------------------------------------------------------------------------

struct ScenarioCity {
  CityId id;
  GeoPoint location;
  long long hourly_capacity = 0;
  std::vector<std::string> airports;
};

struct ScenarioCarrier {
  std::string code;
  CarrierClass carrier_class = CarrierClass::FSC;
};

/// A directional route. A carrier listed in `carriers` flies it from `entry_month` (0-based offset
/// from the scenario start; 0 means from the beginning) onward.
struct ScenarioRoute {
  CityId origin;
  CityId destination;
  struct Service {
    std::string carrier;
    int flights_per_day = 1;
    int entry_month = 0;
  };
  std::vector<Service> services;
  std::optional<int> codeshare_from;  // month offset at which a codeshare agreement starts
};

struct MarketScenario {
  std::vector<ScenarioCity> cities;
  std::vector<ScenarioCarrier> carriers;
  std::vector<ScenarioRoute> routes;
  YearMonth start{2012, 1};
  int months = 12;
  double base_delay_rate = 0.15;         // probability of arriving >15 min late in uncongested hours
  double congestion_sensitivity = 0.25;  // logit shift per movement above capacity, per endpoint
  double cancel_rate = 0.01;
  double weather_share = 0.3;
  double incident_share = 0.05;
  double connection_share = 0.15;
  int seats_per_flight = 150;
  double load_factor = 0.75;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Ingest-format CSV text for every input table.
struct MarketFiles {
  std::string cities;
  std::string airports;
  std::string capacity;
  std::string flights;
  std::string traffic;
  std::string codeshare;
};

MarketScenario default_market_scenario();
MarketFiles generate_market(const MarketScenario& scenario);
/// Writes cities.csv, airports.csv, capacity.csv, flights.csv, traffic.csv, codeshare.csv.
void write_market(const MarketFiles& files, const std::filesystem::path& dir);

// Implementation ----------------------------------------------------------------------------------

namespace detail {
void parallel_for(int count, int threads, const std::function<void(int)>& body);
}

template <class R>
std::vector<R> run_replications(int reps, std::uint64_t master_seed, int threads,
                                const std::function<R(std::uint64_t, int)>& task) {
  if (reps < 0) throw Error("run_replications", "negative replication count");
  std::vector<R> out(static_cast<std::size_t>(reps));
  detail::parallel_for(reps, threads, [&](int rep) {
    out[static_cast<std::size_t>(rep)] = task(substream_seed(master_seed, static_cast<std::uint64_t>(rep)), rep);
  });
  return out;
}

}  // namespace airdelay
