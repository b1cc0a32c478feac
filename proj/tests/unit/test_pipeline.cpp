#include <sstream>

#include "doctest.h"
#include "helpers.hpp"

#include "airdelay/pipeline.hpp"

using namespace airdelay;
using testutil::kSource;
using testutil::slurp;

namespace {

RunConfig parse_text(const std::string& text, const std::filesystem::path& base = ".") {
  std::istringstream in(text);
  return parse_run_config(in, base);
}

std::string error_of(const std::string& text) {
  try {
    parse_text(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

const std::string kSynthetic = "[input]\nsource = synthetic\nmonths = 12\n";

std::string line_with(const std::string& table, const std::string& label) {
  std::istringstream in(table);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(label, 0) == 0) return line;
  return "";
}

}  // namespace

TEST_CASE("configuration errors name the field") {
  CHECK(error_of(kSynthetic + "[model]\nfoo = 1\n").rfind("config.model.foo", 0) == 0);
  CHECK(error_of(kSynthetic + "[column.1]\nregressand = NOPE\n").rfind("config.column.1.regressand", 0) == 0);
  CHECK(error_of(kSynthetic + "[model]\nestimator = gmm\n").rfind("config.model.estimator", 0) == 0);
  CHECK(error_of(kSynthetic + "[model]\nregressors = hhi_pair, nonsense\n").rfind("config.model.regressors", 0) == 0);
  CHECK(error_of(kSynthetic + "[model]\nendogenous = lcc_pair\n").rfind("config.model.endogenous", 0) == 0);
  CHECK(error_of(kSynthetic + "[model]\ninstruments = hhi_pair:300/150\n").rfind("config.model.instruments", 0) ==
        0);
  CHECK(error_of(kSynthetic + "[panel]\nthreshold = -5\n").rfind("config.panel.threshold", 0) == 0);
  CHECK(error_of(kSynthetic + "[extra]\nx = 1\n").rfind("config.extra", 0) == 0);
  CHECK(error_of("[input]\nsource = files\nflights = f.csv\n").rfind("config.input", 0) == 0);
  CHECK(error_of(kSynthetic + "[output]\nformats = pdf\n").rfind("config.output.formats", 0) == 0);
  CHECK(error_of(kSynthetic + "[model]\nestimator = gmm2s\ninstruments = hhi_pair:300\n"
                              "endogenous = hhi_pair, hhi_max_city\n")
            .rfind("config.model.instruments", 0) == 0);
}

TEST_CASE("configuration defaults and overrides") {
  const auto cfg = parse_text(kSynthetic +
                              "[model]\nautocorrelation_lags = 1..3, 6\nheteroscedasticity = pagan_hall:levels\n"
                              "[column.1]\nregressand = MINS_GT\ndrop_regressors = codeshare\n"
                              "[column.2]\nestimator = ols\nfixed_effects = unit\n");
  REQUIRE(cfg.columns.size() == 2);
  CHECK(cfg.columns[0].title == "MINS > 15");
  CHECK(cfg.columns[0].regressors.size() == baseline_regressors().size() - 1);
  CHECK(cfg.columns[0].diagnostics.autocorrelation_lags == std::vector<int>{1, 2, 3, 6});
  CHECK(cfg.columns[1].endogenous.empty());
  CHECK_FALSE(cfg.columns[1].fe.time_effects);
  CHECK(cfg.input.synthetic);
  CHECK(cfg.input.scenario.months == 12);

  const auto files = parse_text("[input]\nsource = files\nflights = a/f.csv\ntraffic = t.csv\ncities = c.csv\n"
                                "airports = p.csv\ncapacity = k.csv\n",
                                "/data");
  CHECK(files.input.flights == std::filesystem::path("/data/a/f.csv"));
  CHECK(files.input.codeshare.empty());
}

TEST_CASE("an empty column set is refused") {
  auto cfg = parse_text(kSynthetic);
  cfg.columns.clear();
  CHECK_THROWS_AS(run_suite(cfg), Error);
}

TEST_CASE("golden fixture reproduces the saved reports") {
  const auto dir = kSource / "tests/data/golden";
  const auto cfg = load_run_config(dir / "golden.ini");
  const auto out = run_suite(cfg, 1);
  CHECK(out.all_columns_ok);
  CHECK(out.table == slurp(dir / "expected_table.txt"));
  CHECK(out.descriptives_text == slurp(dir / "expected_descriptives.txt"));
  CHECK(line_with(out.table, "Nr Observations").find("3           4") != std::string::npos);
  CHECK(render_regression_table(Json::parse(out.results.dump())) == out.table);
}

TEST_CASE("exactly identified columns report J = 0 with p = 1") {
  const auto cfg = parse_text(kSynthetic +
                              "[model]\nestimator = gmm2s\nendogenous = hhi_pair\ninstruments = hhi_pair:300\n");
  const auto out = run_suite(cfg, 1);
  REQUIRE(out.all_columns_ok);
  CHECK(line_with(out.table, "J Statistic").find("0.0000") != std::string::npos);
  CHECK(line_with(out.table, "J P-Value").find("1.0000") != std::string::npos);
  CHECK(out.results[0]["result"]["diagnostics"]["hansen_j"]["df"] == 0);
}

TEST_CASE("default configuration: six columns") {
  const auto cfg = load_run_config(kSource / "configs/default.ini");
  REQUIRE(cfg.columns.size() == 6);
  const auto out = run_suite(cfg, 2);
  CHECK(out.all_columns_ok);
  REQUIRE(out.results.size() == 6);
  const char* titles[] = {"ODDS", "ODDS", "MINS", "MINS", "MINS > 15", "MINS > 15"};
  for (std::size_t i = 0; i < 6; ++i) {
    const auto& col = out.results[i];
    CHECK(col["title"] == titles[i]);
    CHECK(col["result"]["estimator"] == "2SGMM");
    CHECK(col["result"]["l"].get<int>() - col["result"]["k"].get<int>() == 4);
    CHECK(col["result"]["fixed_effects"]["unit"] == true);
  }
  CHECK(out.results[0]["result"]["n"] <= out.results[2]["result"]["n"]);
  CHECK(out.results[2]["result"]["n"] == out.results[4]["result"]["n"]);
  for (const char* row : {"HHI city-pair", "HHI max endpoint cities", "KP Statistic", "J P-Value",
                          "Weak CD Statistic", "Weak KP Statistic", "Nr Observations"})
    CHECK_FALSE(line_with(out.table, row).empty());
  CHECK(line_with(out.table, "").find("(6) MINS > 15") != std::string::npos);
  CHECK(render_regression_table(Json::parse(out.results.dump(2))) == out.table);
}

TEST_CASE("failed columns are reported in the table") {
  const auto cfg = parse_text(kSynthetic + "[model]\nestimator = ols\nregressors = hhi_pair\n"
                                           "[column.1]\nregressand = MINS\n"
                                           "[column.2]\nregressand = MINS\nregressors = hhi_pair, lcc_pair\n"
                                           "fixed_effects = none\n");
  auto data = load_data(cfg);
  for (auto& o : data.panel.observations) o.lcc_pair = 1;  // collinear with the constant
  const auto out = run_suite(cfg, data, 1);
  CHECK_FALSE(out.all_columns_ok);
  CHECK(out.table.find("(2) not estimated:") != std::string::npos);
  CHECK(out.table.find("lcc_pair") != std::string::npos);
}

TEST_CASE("report formatting") {
  CHECK(fixed4(-0.00001) == "0.0000");
  CHECK(fixed4(1.23456) == "1.2346");
  CHECK(variable_label("hhi_pair") == "HHI city-pair");
  CHECK(variable_label("something_else") == "something_else");
  const auto t = to_json(make_test("x", 2.0, Distribution::F, 2, 10));
  CHECK(t["df2"] == 10);
  CHECK(t["distribution"] == "F");
  TestResult nan_p{"w", 3.0, Distribution::F, 1, 10, std::nan("")};
  CHECK(to_json(nan_p)["p_value"].is_null());
}
