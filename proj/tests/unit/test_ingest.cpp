#include <sstream>

#include "doctest.h"
#include "helpers.hpp"

using namespace airdelay;

namespace {

CityRegistry registry() {
  std::istringstream cities("city_id,lat,lon\nSAO,-23.55,-46.63\nRIO,-22.91,-43.17\nBSB,-15.79,-47.88\n");
  std::istringstream airports("airport_code,city_id\nGRU,SAO\nCGH,SAO\nGIG,RIO\nSDU,RIO\nBSB,BSB\n");
  return parse_cities(cities, airports);
}

const char* kHeader =
    "carrier,carrier_class,origin_airport,dest_airport,flight_no,sched_dep,actual_dep,sched_arr,actual_arr,"
    "cancelled,cause_code\n";

}  // namespace

TEST_CASE("timestamps and months") {
  const auto t = parse_timestamp("2012-02-29T23:59");
  CHECK(format_timestamp(t) == "2012-02-29T23:59");
  CHECK(t.hour() == 23);
  CHECK(t.year_month() == YearMonth{2012, 2});
  CHECK(YearMonth{2012, 2}.days() == 29);
  CHECK(YearMonth{2013, 2}.days() == 28);
  CHECK(YearMonth::from_index(YearMonth{2012, 12}.index() + 1) == YearMonth{2013, 1});
  CHECK_THROWS(parse_timestamp("2012-02-30T10:00"));
  CHECK_THROWS(parse_timestamp("2012-02-10 10:00"));
  CHECK_THROWS(parse_year_month("2012-13"));
}

TEST_CASE("airports of a multi-airport city resolve to the city") {
  const auto reg = registry();
  CHECK(reg.city_of("GRU") == "SAO");
  CHECK(reg.city_of("CGH") == "SAO");
  CHECK_FALSE(reg.find_city_of("XXX").has_value());

  std::istringstream in(std::string(kHeader) +
                        "AA,FSC,GRU,BSB,1,2012-01-05T08:00,2012-01-05T08:05,2012-01-05T09:40,2012-01-05T09:50,0,NONE\n");
  const auto res = parse_flights(in, reg);
  REQUIRE(res.accepted.size() == 1);
  CHECK(res.accepted[0].origin == "SAO");
  CHECK(res.accepted[0].destination == "BSB");
}

TEST_CASE("rejected rows carry their line numbers") {
  std::istringstream in(std::string(kHeader) +
                        "AA,FSC,GRU,GIG,1,2012-01-05T08:00,2012-01-05T08:05,2012-01-05T09:00,2012-01-05T09:10,0,NONE\n"
                        "AA,FSC,GRU,GIG,2,2012-01-05T25:00,2012-01-05T08:05,2012-01-05T09:00,2012-01-05T09:10,0,NONE\n"
                        "BB,FSC,GIG,BSB,3,2012-01-06T08:00,,2012-01-06T09:40,,1,NONE\n");
  const auto res = parse_flights(in, registry());
  CHECK(res.accepted.size() == 2);
  REQUIRE(res.rejected.size() == 1);
  CHECK(res.rejected[0].line == 3);
  CHECK(res.rejected[0].reason.find("sched_dep") != std::string::npos);
}

TEST_CASE("cancelled flights need no actual times and may not carry them") {
  std::istringstream ok(std::string(kHeader) + "BB,FSC,GIG,BSB,3,2012-01-06T08:00,NA,2012-01-06T09:40,NA,1,NONE\n");
  const auto a = parse_flights(ok, registry());
  REQUIRE(a.accepted.size() == 1);
  CHECK(a.accepted[0].cancelled);
  CHECK_THROWS_AS(classify_delay(a.accepted[0]), Error);

  std::istringstream bad(std::string(kHeader) +
                         "BB,FSC,GIG,BSB,3,2012-01-06T08:00,2012-01-06T08:00,2012-01-06T09:40,,1,NONE\n"
                         "BB,FSC,GIG,BSB,4,2012-01-06T08:00,,2012-01-06T09:40,,0,NONE\n");
  const auto b = parse_flights(bad, registry());
  CHECK(b.accepted.empty());
  CHECK(b.rejected.size() == 2);
}

TEST_CASE("other malformed rows") {
  std::istringstream in(std::string(kHeader) +
                        "AA,FSC,GRU,CGH,1,2012-01-05T08:00,2012-01-05T08:00,2012-01-05T09:00,2012-01-05T09:00,0,NONE\n"
                        "AA,XYZ,GRU,GIG,2,2012-01-05T08:00,2012-01-05T08:00,2012-01-05T09:00,2012-01-05T09:00,0,NONE\n"
                        "AA,FSC,GRU,GIG,3,2012-01-05T08:00,2012-01-05T08:00,2012-01-05T07:00,2012-01-05T09:00,0,NONE\n"
                        "AA,FSC,GRU,GIG,4,2012-01-05T08:00,2012-01-05T08:00,2012-01-05T09:00,2012-01-05T09:00,0,FOG\n"
                        "AA,FSC,GRU,GIG,5\n"
                        "AA,FSC,GRU,GIG,6,2012-01-05T08:00,2012-01-05T08:00,2012-01-05T09:00,2012-01-05T09:00,0,NONE\n");
  const auto res = parse_flights(in, registry());
  CHECK(res.accepted.size() == 1);
  CHECK(res.rejected.size() == 5);
}

TEST_CASE("duplicate flights are rejected") {
  const std::string row =
      "AA,FSC,GRU,GIG,1,2012-01-05T08:00,2012-01-05T08:05,2012-01-05T09:00,2012-01-05T09:10,0,NONE\n";
  std::istringstream in(std::string(kHeader) + row + row);
  const auto res = parse_flights(in, registry());
  CHECK(res.accepted.size() == 1);
  REQUIRE(res.rejected.size() == 1);
  CHECK(res.rejected[0].line == 3);
}

TEST_CASE("empty and wrongly headed inputs throw") {
  std::istringstream empty(kHeader);
  CHECK_THROWS_AS(parse_flights(empty, registry()), Error);
  std::istringstream bad_header("carrier,foo\nAA,1\n");
  CHECK_THROWS_AS(parse_flights(bad_header, registry()), Error);
}

TEST_CASE("classify_delay uses a strict threshold") {
  auto f = testutil::flight("AA", "SAO", "RIO", "2012-01-05T08:00", "2012-01-05T09:00", 0, 16);
  CHECK(classify_delay(f).arrival_delayed);
  CHECK(classify_delay(f).arrival_delay_minutes == 16);
  f.actual_arrival = Timestamp{f.scheduled_arrival.minutes + 15};
  CHECK_FALSE(classify_delay(f).arrival_delayed);
  f.actual_arrival = Timestamp{f.scheduled_arrival.minutes - 10};
  CHECK(classify_delay(f).arrival_delay_minutes == -10);
  CHECK_FALSE(classify_delay(f).arrival_delayed);
  CHECK_THROWS(classify_delay(f, 0));

  SUBCASE("monotone in the actual arrival time") {
    bool was = false;
    for (int d = -30; d <= 60; ++d) {
      f.actual_arrival = Timestamp{f.scheduled_arrival.minutes + d};
      const bool now = classify_delay(f).arrival_delayed;
      CHECK(now >= was);
      was = now;
    }
  }
}

TEST_CASE("flights round-trip through the CSV writer") {
  std::vector<FlightRecord> flights = {
      testutil::flight("AA", "SAO", "RIO", "2012-01-05T08:00", "2012-01-05T09:00", 3, -4),
      testutil::cancelled(testutil::flight("BB", "RIO", "BSB", "2012-01-06T10:00", "2012-01-06T11:40", 0, 0)),
  };
  flights[0].cause = CauseCode::WEATHER;
  const std::map<CityId, std::string> airport_of = {{"SAO", "GRU"}, {"RIO", "GIG"}, {"BSB", "BSB"}};
  std::ostringstream out;
  write_flights(out, flights, &airport_of);
  std::istringstream in(out.str());
  const auto back = parse_flights(in, registry());
  CHECK(back.rejected.empty());
  CHECK(back.accepted == flights);
}

TEST_CASE("traffic parsing") {
  std::istringstream in(
      "carrier,carrier_class,origin_city,dest_city,month,revenue_pax\n"
      "AA,FSC,SAO,RIO,2012-01,100\n"
      "AA,FSC,SAO,RIO,2012-01,50\n"
      "LC,LCC,SAO,XXX,2012-01,10\n"
      "LC,LCC,SAO,BSB,2012-01,-1\n"
      "LC,LCC,SAO,BSB,2012-01,7\n");
  const auto res = parse_traffic(in, registry());
  CHECK(res.accepted.size() == 2);
  CHECK(res.rejected.size() == 3);
  std::ostringstream out;
  write_traffic(out, res.accepted);
  std::istringstream again(out.str());
  CHECK(parse_traffic(again, registry()).accepted == res.accepted);
}

TEST_CASE("registries reject inconsistent definitions") {
  CityRegistry reg;
  reg.add_city("SAO", {-23.5, -46.6});
  CHECK_THROWS(reg.add_city("SAO", {0, 0}));
  CHECK_THROWS(reg.add_city("BAD", {95, 0}));
  CHECK_THROWS(reg.add_airport("GIG", "RIO"));
  CapacityRegistry cap;
  cap.set("SAO", 10);
  CHECK_THROWS(cap.set("SAO", 12));
  CHECK_THROWS(cap.set("RIO", 0));
  CHECK_THROWS(cap.hourly_capacity("RIO"));
  std::istringstream cs("origin_city,dest_city,start_month,end_month\nSAO,RIO,2012-05,2012-03\n");
  CHECK_THROWS(parse_codeshare(cs, reg));
}
