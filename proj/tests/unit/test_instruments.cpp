#include <cmath>
#include <numbers>

#include "doctest.h"

#include "airdelay/instruments.hpp"

using namespace airdelay;

namespace {

PanelObservation obs(const std::string& o, const std::string& d, YearMonth m, double hhi) {
  PanelObservation p;
  p.origin = o;
  p.destination = d;
  p.pair_id = o + "-" + d;
  p.month = m;
  p.hhi_pair = hhi;
  return p;
}

// Two close cities (~111 km apart) at each of two places ~1000 km apart.
CityRegistry square() {
  CityRegistry r;
  r.add_city("A", {0.0, 0.0});
  r.add_city("B", {0.0, 1.0});    // ~111 km from A
  r.add_city("C", {9.0, 0.0});    // ~1000 km from A
  r.add_city("D", {9.0, 1.0});
  return r;
}

}  // namespace

TEST_CASE("great-circle distances") {
  CHECK(great_circle_km({10, 20}, {10, 20}) == 0.0);
  CHECK(great_circle_km({0, 0}, {0, 180}) == doctest::Approx(std::numbers::pi * kEarthRadiusKm));
  CHECK(great_circle_km({0, 0}, {0, 180}) == doctest::Approx(20015.114).epsilon(1e-7));
  CHECK(great_circle_km({-23.55, -46.63}, {-22.91, -43.17}) == doctest::Approx(360.6).epsilon(1e-3));
  CHECK_THROWS(great_circle_km({91, 0}, {0, 0}));
  CHECK_THROWS(great_circle_km({0, 181}, {0, 0}));
}

TEST_CASE("distance matrix") {
  const DistanceMatrix dm(square());
  const auto& m = dm.matrix();
  CHECK(m.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) CHECK(m(i, k) <= m(i, j) + m(j, k) + 1e-6);
  CHECK(dm.min_endpoint_km("A", "C", "B", "D") == doctest::Approx(dm.km("C", "D")));
  CHECK_THROWS(dm.km("A", "Z"));
}

TEST_CASE("hausman instrument") {
  const DistanceMatrix dm(square());
  const YearMonth jan{2012, 1}, feb{2012, 2};
  const std::vector<PanelObservation> panel = {
      obs("A", "B", jan, 0.9), obs("C", "D", jan, 0.5), obs("A", "C", jan, 0.3),
      obs("B", "D", jan, 0.7), obs("C", "D", feb, 0.1)};

  SUBCASE("cutoff zero averages every other pair of the month") {
    CHECK(*hausman_instrument(panel, dm, "hhi_pair", 0, 0.0) == doctest::Approx((0.5 + 0.3 + 0.7) / 3));
  }
  SUBCASE("pairs sharing a city are always excluded at positive cutoffs") {
    // A-C shares A with A-B, B-D shares B; only C-D remains.
    CHECK(*hausman_instrument(panel, dm, "hhi_pair", 0, 1.0) == doctest::Approx(0.5));
    CHECK(*hausman_instrument(panel, dm, "hhi_pair", 0, 500.0) == doctest::Approx(0.5));
  }
  SUBCASE("nearby endpoints exclude a pair") {
    // For A-C every other January pair has an endpoint within ~111 km of A or C.
    CHECK_FALSE(hausman_instrument(panel, dm, "hhi_pair", 2, 150.0).has_value());
    CHECK(*hausman_instrument(panel, dm, "hhi_pair", 2, 100.0) == doctest::Approx(0.7));
  }
  SUBCASE("other months never enter") {
    CHECK(*hausman_instrument(panel, dm, "hhi_pair", 1, 500.0) == doctest::Approx(0.9));
    CHECK_FALSE(hausman_instrument(panel, dm, "hhi_pair", 4, 0.0).has_value());
  }
}

TEST_CASE("instrument matrix") {
  const DistanceMatrix dm(square());
  const YearMonth jan{2012, 1};
  std::vector<PanelObservation> panel = {obs("A", "B", jan, 0.9), obs("C", "D", jan, 0.5), obs("A", "C", jan, 0.3)};
  panel[0].hhi_max_city = 0.2;
  panel[1].hhi_max_city = 0.4;
  const std::vector<InstrumentSpec> specs = {{"hhi_pair", {150, 300, 500}}, {"hhi_max_city", {150, 300, 500}}};
  const auto iv = build_instrument_matrix(panel, dm, specs);
  CHECK(iv.labels.size() == 6);
  CHECK(iv.labels[0] == "hhi_pair__ge150km");
  CHECK(iv.labels[5] == "hhi_max_city__ge500km");
  CHECK(iv.values.rows() == 3);
  CHECK(iv.row_complete(0));
  CHECK_FALSE(iv.row_complete(2));
  CHECK(iv.values(0, 3) == doctest::Approx(0.4));
  CHECK(iv.notes.size() == 1);

  SUBCASE("a single pair has no instruments") {
    const std::vector<PanelObservation> one = {panel[0]};
    const auto iv1 = build_instrument_matrix(one, dm, specs);
    CHECK(iv1.values.hasNaN());
    for (int j = 0; j < 6; ++j) CHECK(std::isnan(iv1.values(0, j)));
  }
  SUBCASE("bad specs") {
    const std::vector<InstrumentSpec> unknown = {{"nope", {150}}};
    CHECK_THROWS(build_instrument_matrix(panel, dm, unknown));
    CHECK_THROWS(InstrumentSpec{"hhi_pair", {300, 150}}.validate());
    CHECK_THROWS(InstrumentSpec{"hhi_pair", {}}.validate());
    CHECK_THROWS(InstrumentSpec{"hhi_pair", {-1}}.validate());
  }
}

TEST_CASE("larger cutoffs only remove contributors") {
  CityRegistry r;
  std::vector<PanelObservation> panel;
  const char* ids[] = {"P", "Q", "R", "S", "T", "U"};
  for (int i = 0; i < 6; ++i) r.add_city(ids[i], {-5.0 * i, -40.0 - 1.3 * i});
  const YearMonth m{2012, 1};
  int k = 0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if (i != j) {
        panel.push_back(obs(ids[i], ids[j], m, 0.1 + 0.01 * k));
        panel.back().hhi_max_city = 0.0;
        ++k;
      }
  const DistanceMatrix dm(r);
  for (std::size_t row = 0; row < panel.size(); ++row) {
    // Use an indicator target so that the instrument counts contributors.
    std::vector<PanelObservation> ones = panel;
    for (auto& o : ones) o.hhi_max_city = 1.0;
    int prev = 1 << 30;
    for (double d : {0.0, 150.0, 300.0, 500.0, 800.0, 1200.0}) {
      int count = 0;
      for (std::size_t j = 0; j < panel.size(); ++j)
        if (j != row && dm.min_endpoint_km(panel[row].origin, panel[row].destination, panel[j].origin,
                                           panel[j].destination) >= d)
          ++count;
      CHECK(count <= prev);
      prev = count;
      const auto v = hausman_instrument(ones, dm, "hhi_max_city", row, d);
      CHECK(v.has_value() == (count > 0));
    }
  }
}
