#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"

#include "airdelay/panel.hpp"
#include "airdelay/synthlab.hpp"

using namespace airdelay;

TEST_CASE("oracle OLS fixtures") {
  VectorXd y(4);
  y << 2, 4, 6, 8;
  MatrixXd X(4, 1);
  X << 1, 2, 3, 4;
  CHECK(oracle_ols(y, X)[0] == doctest::Approx(2.0));

  VectorXd y3(3);
  y3 << 1, 1.5, 2;
  MatrixXd X3(3, 2);
  X3 << 0, 1, 1, 1, 2, 1;
  const auto b = oracle_ols(y3, X3);
  CHECK(b[0] == doctest::Approx(0.5));
  CHECK(b[1] == doctest::Approx(1.0));

  MatrixXd singular(3, 2);
  singular << 1, 2, 2, 4, 3, 6;
  CHECK_THROWS(oracle_ols(y3, singular));
}

TEST_CASE("oracle OLS agrees with the library estimator") {
  DgpConfig cfg;
  cfg.n_units = 100;
  cfg.n_periods = 5;
  cfg.gamma = {0.5, -1.0};
  cfg.seed = 42;
  const auto p = generate_linear_panel(cfg).problem;
  const auto lib = ols(p);
  const auto ref = oracle_ols(p.y, p.X);
  for (Eigen::Index j = 0; j < p.k(); ++j) CHECK(std::abs(lib.coef(j) - ref[static_cast<std::size_t>(j)]) < 1e-9);
}

TEST_CASE("substreams and determinism") {
  CHECK(substream_seed(1, 0) != substream_seed(1, 1));
  CHECK(substream_seed(1, 0) != substream_seed(2, 0));
  CHECK(make_rng(5, 3)() == make_rng(5, 3)());

  DgpConfig cfg = standard_scenario();
  cfg.seed = 9;
  const auto a = generate_linear_panel(cfg), b = generate_linear_panel(cfg);
  CHECK(a.problem.y == b.problem.y);
  CHECK(a.problem.X == b.problem.X);
  cfg.seed = 10;
  CHECK(generate_linear_panel(cfg).problem.y != a.problem.y);

  const std::function<double(std::uint64_t, int)> task = [](std::uint64_t seed, int) {
    DgpConfig c;
    c.n_units = 20;
    c.n_periods = 5;
    c.seed = seed;
    return ols(generate_linear_panel(c).problem).coef(0);
  };
  CHECK(run_replications<double>(16, 77, 1, task) == run_replications<double>(16, 77, 4, task));
}

TEST_CASE("compensated mean") {
  std::vector<double> v = {1e16, 1.0, -1e16, 1.0};
  CHECK(compensated_mean(v) == doctest::Approx(0.5));
  CHECK_THROWS(compensated_mean({}));
}

TEST_CASE("DGP truth and layout") {
  const auto std_truth = dgp_truth(standard_scenario());
  CHECK(std_truth.ols_plim == doctest::Approx(1.4));
  const auto flip = dgp_truth(sign_flip_scenario());
  CHECK(flip.ols_plim == doctest::Approx(-0.2));
  CHECK(flip.beta == doctest::Approx(0.8));

  DgpConfig cfg;
  cfg.gamma = {1.0, 2.0};
  cfg.pi = {1.0, 0.5};
  cfg.n_units = 10;
  cfg.n_periods = 4;
  const auto p = generate_linear_panel(cfg).problem;
  CHECK(p.x_names == std::vector<std::string>{"x", "w1", "w2", "const"});
  CHECK(p.excluded.cols() == 2);
  CHECK(p.n() == 40);

  DgpConfig bad;
  bad.rho = 1.5;
  CHECK_THROWS(bad.validate());
  bad = {};
  bad.n_periods = 0;
  CHECK_THROWS(generate_linear_panel(bad));
}

TEST_CASE("DGP configuration text") {
  std::istringstream in("n_units = 30\nbeta = 2.5\npi = 0.5, 0.25\nfixed_effects = unit\nseed = 4\n");
  const auto cfg = parse_dgp_config(in);
  CHECK(cfg.n_units == 30);
  CHECK(cfg.beta == 2.5);
  CHECK(cfg.pi.size() == 2);
  CHECK(cfg.fe.unit_effects);
  CHECK_FALSE(cfg.fe.time_effects);
  std::istringstream bad("n_units = 30\nbogus = 1\n");
  CHECK_THROWS_AS(parse_dgp_config(bad), Error);
}

TEST_CASE("omitting a positively correlated regressor with a negative effect biases downwards") {
  auto cfg = sign_flip_scenario();
  cfg.gamma = {-1.0};
  cfg.w_loading = 0.5;
  double full = 0, dropped = 0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    cfg.seed = substream_seed(123, r);
    auto p = generate_linear_panel(cfg).problem;
    full += gmm_two_step(p).coef(0);
    // Remove w1 (column 1) from the regressors.
    MatrixXd X(p.n(), p.k() - 1);
    X << p.X.col(0), p.X.rightCols(p.k() - 2);
    p.X = X;
    p.x_names.erase(p.x_names.begin() + 1);
    dropped += gmm_two_step(p).coef(0);
  }
  full /= reps;
  dropped /= reps;
  // plim shift: gamma * cov(z, w) / cov(z, x) = -1 * 0.5 / 1
  CHECK(full == doctest::Approx(0.8).epsilon(0.05));
  CHECK(dropped - full == doctest::Approx(-0.5).epsilon(0.2));
}

namespace {

MarketScenario tiny_market() {
  MarketScenario s;
  s.cities = {{"A", {-23.5, -46.6}, 1000, {"AAA"}},
              {"B", {-22.9, -43.2}, 1000, {"BBB", "BB2"}},
              {"C", {-15.8, -47.9}, 1000, {"CCC"}}};
  s.carriers = {{"FA", CarrierClass::FSC}, {"LC", CarrierClass::LCC}};
  s.routes = {{"A", "B", {{"FA", 2, 0}, {"LC", 1, 12}}, std::nullopt},
              {"B", "C", {{"FA", 1, 0}}, std::nullopt},
              {"C", "B", {{"FA", 1, 0}}, std::nullopt}};
  s.months = 14;
  s.seed = 3;
  return s;
}

struct Parsed {
  CityRegistry cities;
  CapacityRegistry capacity;
  ParseResult<FlightRecord> flights;
  ParseResult<TrafficRecord> traffic;
  Panel panel;
};

Parsed parse(const MarketFiles& f) {
  Parsed p;
  std::istringstream c(f.cities), a(f.airports), cap(f.capacity), fl(f.flights), tr(f.traffic);
  p.cities = parse_cities(c, a);
  p.capacity = parse_capacity(cap, p.cities);
  p.flights = parse_flights(fl, p.cities);
  p.traffic = parse_traffic(tr, p.cities);
  PanelInputs in;
  in.flights = p.flights.accepted;
  in.traffic = p.traffic.accepted;
  in.cities = &p.cities;
  in.capacities = &p.capacity;
  p.panel = build_panel(in);
  return p;
}

}  // namespace

TEST_CASE("synthetic market") {
  SUBCASE("default scenario ingests cleanly and deterministically") {
    auto s = default_market_scenario();
    s.months = 3;
    const auto files = generate_market(s);
    CHECK(files.flights == generate_market(s).flights);
    const auto p = parse(files);
    CHECK(p.flights.rejected.empty());
    CHECK(p.traffic.rejected.empty());
    CHECK(p.flights.accepted.size() > 1000);
    CHECK(p.panel.observations.size() == 3 * 32);
  }
  SUBCASE("ample capacity means no congestion") {
    const auto p = parse(generate_market(tiny_market()));
    for (const auto& o : p.panel.observations) CHECK(o.n_congested == 0.0);
  }
  SUBCASE("a single carrier gives concentration one") {
    const auto p = parse(generate_market(tiny_market()));
    for (const auto& o : p.panel.observations)
      if (o.pair_id != "A-B" && o.month.index() < YearMonth{2013, 1}.index()) {
        CHECK(o.hhi_pair == 1.0);
        CHECK(o.hhi_max_city == 1.0);
      }
  }
  SUBCASE("an LCC entering A-B from the thirteenth month") {
    const auto p = parse(generate_market(tiny_market()));
    for (const auto& o : p.panel.observations) {
      const bool after = !(o.month < YearMonth{2013, 1});
      if (o.pair_id == "A-B") CHECK(o.lcc_pair == (after ? 1 : 0));
      if (o.pair_id == "B-C") {
        CHECK(o.lcc_pair == 0);
        CHECK(o.lcc_max_city == (after ? 1 : 0));
      }
    }
  }
  SUBCASE("invalid scenarios") {
    auto s = tiny_market();
    s.routes.push_back({"A", "Z", {{"FA", 1, 0}}, std::nullopt});
    CHECK_THROWS_AS(generate_market(s), Error);
    s = tiny_market();
    s.weather_share = 0.9;
    s.incident_share = 0.2;
    CHECK_THROWS_AS(s.validate(), Error);
  }
  SUBCASE("written files") {
    const auto dir = std::filesystem::temp_directory_path() / "airdelay_unit_market";
    std::filesystem::remove_all(dir);
    const auto files = generate_market(tiny_market());
    write_market(files, dir);
    CHECK(testutil::slurp(dir / "flights.csv") == files.flights);
    CHECK(std::filesystem::exists(dir / "codeshare.csv"));
    std::filesystem::remove_all(dir);
  }
}
