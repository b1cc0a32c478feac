#include "airdelay/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace airdelay {

namespace pt = boost::property_tree;

std::string to_string(Regressand r) {
  switch (r) {
    case Regressand::ODDS: return "ODDS";
    case Regressand::MINS: return "MINS";
    case Regressand::MINS_GT: return "MINS_GT";
    case Regressand::ODDSD: return "ODDSD";
    case Regressand::MINSD: return "MINSD";
    case Regressand::MINSD_GT: return "MINSD_GT";
  }
  return "?";
}

Regressand parse_regressand(const std::string& s, const std::string& where) {
  for (auto r : {Regressand::ODDS, Regressand::MINS, Regressand::MINS_GT, Regressand::ODDSD, Regressand::MINSD,
                 Regressand::MINSD_GT})
    if (s == to_string(r)) return r;
  throw Error(where, "unknown regressand '" + s + "' (expected ODDS, MINS, MINS_GT, ODDSD, MINSD or MINSD_GT)");
}

std::string panel_column(Regressand r) {
  switch (r) {
    case Regressand::ODDS: return "odds";
    case Regressand::MINS: return "mins";
    case Regressand::MINS_GT: return "mins_gt_threshold";
    case Regressand::ODDSD: return "odds_dep";
    case Regressand::MINSD: return "mins_dep";
    case Regressand::MINSD_GT: return "mins_dep_gt_threshold";
  }
  return "";
}

std::string regressand_title(Regressand r, int threshold) {
  switch (r) {
    case Regressand::MINS_GT: return "MINS > " + std::to_string(threshold);
    case Regressand::MINSD_GT: return "MINSD > " + std::to_string(threshold);
    default: return to_string(r);
  }
}

const std::vector<std::string>& baseline_regressors() {
  static const std::vector<std::string> names = {
      "n_congested", "n_uncongested", "prop_weather", "prop_incident", "prop_connection",
      "max_city_delay_prop", "codeshare", "hhi_pair", "hhi_max_city"};
  return names;
}

void ModelSpec::validate(const std::string& where) const {
  if (regressors.empty()) throw Error(where + ".regressors", "no regressors");
  std::set<std::string> seen;
  for (const auto& r : regressors) {
    if (!is_panel_column(r)) throw Error(where + ".regressors", "unknown panel column '" + r + "'");
    if (r == panel_column(regressand)) throw Error(where + ".regressors", "'" + r + "' is the regressand");
    if (!seen.insert(r).second) throw Error(where + ".regressors", "'" + r + "' listed twice");
  }
  for (const auto& e : endogenous)
    if (!seen.count(e)) throw Error(where + ".endogenous", "'" + e + "' is not among the included regressors");
  if (estimator != Estimator::OLS) {
    if (endogenous.empty()) throw Error(where + ".endogenous", "IV estimators need at least one endogenous regressor");
    std::size_t count = 0;
    for (const auto& s : instruments) {
      if (!is_panel_column(s.target)) throw Error(where + ".instruments", "unknown panel column '" + s.target + "'");
      try {
        s.validate();
      } catch (const Error& e) {
        throw Error(where + ".instruments", e.what());
      }
      count += s.cutoffs_km.size();
    }
    if (count < endogenous.size())
      throw Error(where + ".instruments", "fewer excluded instruments than endogenous regressors");
  }
  if (bandwidth && *bandwidth < 0) throw Error(where + ".bandwidth", "must be >= 0");
}

std::vector<std::string> ModelSpec::instrument_labels() const {
  std::vector<std::string> out;
  for (const auto& s : instruments)
    for (double c : s.cutoffs_km) out.push_back(instrument_label(s.target, c));
  return out;
}

namespace {

std::vector<std::string> name_list(const std::string& value) {
  std::vector<std::string> out;
  for (const auto& part : split(value, ',')) {
    const auto item = trim(part);
    if (!item.empty()) out.emplace_back(item);
  }
  return out;
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw Error(where, "expected true or false, got '" + v + "'");
}

Estimator parse_estimator(const std::string& v, const std::string& where) {
  if (v == "ols") return Estimator::OLS;
  if (v == "gmm2s") return Estimator::GMM2S;
  if (v == "liml") return Estimator::LIML;
  throw Error(where, "expected ols, gmm2s or liml, got '" + v + "'");
}

/// "hhi_pair:150/300/500, hhi_max_city:500"; a bare target takes the default cutoffs.
std::vector<InstrumentSpec> parse_instruments(const std::string& v, const std::string& where) {
  std::vector<InstrumentSpec> out;
  for (const auto& item : name_list(v)) {
    InstrumentSpec s;
    const auto colon = item.find(':');
    s.target = std::string(trim(item.substr(0, colon)));
    if (colon != std::string::npos) {
      s.cutoffs_km.clear();
      for (const auto& c : split(item.substr(colon + 1), '/')) s.cutoffs_km.push_back(parse_double(trim(c), where));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<int> parse_lags(const std::string& v, const std::string& where) {
  std::vector<int> out;
  for (const auto& item : name_list(v)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(static_cast<int>(parse_int(item, where)));
      continue;
    }
    const auto lo = parse_int(item.substr(0, dots), where);
    const auto hi = parse_int(item.substr(dots + 2), where);
    if (lo < 1 || hi < lo) throw Error(where, "bad lag range '" + item + "'");
    for (auto l = lo; l <= hi; ++l) out.push_back(static_cast<int>(l));
  }
  for (int l : out)
    if (l < 1) throw Error(where, "lags must be >= 1");
  return out;
}

std::vector<std::pair<HetVariant, AuxiliarySet>> parse_het(const std::string& v, const std::string& where) {
  std::vector<std::pair<HetVariant, AuxiliarySet>> out;
  for (const auto& item : name_list(v)) {
    const auto colon = item.find(':');
    const std::string variant = item.substr(0, colon);
    const std::string aux = colon == std::string::npos ? "levels" : item.substr(colon + 1);
    std::optional<HetVariant> hv;
    for (auto c : {HetVariant::pagan_hall, HetVariant::white_koenker, HetVariant::breusch_pagan})
      if (variant == to_string(c)) hv = c;
    std::optional<AuxiliarySet> as;
    for (auto c : {AuxiliarySet::levels, AuxiliarySet::levels_squares_cross, AuxiliarySet::fitted})
      if (aux == to_string(c)) as = c;
    if (!hv || !as) throw Error(where, "unknown heteroscedasticity test '" + item + "'");
    out.emplace_back(*hv, *as);
  }
  return out;
}

/// Applies one `key = value` to a model spec. Returns false for keys it does not know.
bool apply_model_key(ModelSpec& m, const std::string& key, const std::string& value, const std::string& where) {
  if (key == "title") m.title = value;
  else if (key == "regressand") m.regressand = parse_regressand(value, where);
  else if (key == "estimator") m.estimator = parse_estimator(value, where);
  else if (key == "regressors") m.regressors = name_list(value);
  else if (key == "add_regressors") {
    for (const auto& r : name_list(value))
      if (std::find(m.regressors.begin(), m.regressors.end(), r) == m.regressors.end()) m.regressors.push_back(r);
  } else if (key == "drop_regressors") {
    for (const auto& r : name_list(value)) {
      const auto it = std::find(m.regressors.begin(), m.regressors.end(), r);
      if (it == m.regressors.end()) throw Error(where, "'" + r + "' is not among the regressors");
      m.regressors.erase(it);
      std::erase(m.endogenous, r);
      std::erase_if(m.instruments, [&](const InstrumentSpec& s) { return s.target == r; });
    }
  } else if (key == "endogenous") m.endogenous = name_list(value);
  else if (key == "instruments") m.instruments = parse_instruments(value, where);
  else if (key == "fixed_effects") {
    const auto impl = m.fe.implementation;
    if (value == "none") m.fe = {};
    else if (value == "unit") m.fe = {true, false, impl};
    else if (value == "time") m.fe = {false, true, impl};
    else if (value == "two_way") m.fe = {true, true, impl};
    else throw Error(where, "expected none, unit, time or two_way, got '" + value + "'");
    m.fe.implementation = impl;
  } else if (key == "fe_implementation") {
    if (value == "within") m.fe.implementation = FeImplementation::within_plus_time_dummies;
    else if (value == "full_dummies") m.fe.implementation = FeImplementation::full_dummies;
    else throw Error(where, "expected within or full_dummies, got '" + value + "'");
  } else if (key == "bandwidth") {
    if (value == "auto") m.bandwidth.reset();
    else m.bandwidth = static_cast<int>(parse_int(value, where));
  } else if (key == "covariance") {
    if (value == "hac") m.covariance = CovarianceKind::hac;
    else if (value == "homoscedastic") m.covariance = CovarianceKind::homoscedastic;
    else throw Error(where, "expected hac or homoscedastic, got '" + value + "'");
  } else if (key == "small_sample") m.small_sample = parse_bool(value, where);
  else if (key == "autocorrelation_lags") m.diagnostics.autocorrelation_lags = parse_lags(value, where);
  else if (key == "heteroscedasticity") m.diagnostics.heteroscedasticity = parse_het(value, where);
  else return false;
  return true;
}

void apply_scenario_key(MarketScenario& s, const std::string& key, const std::string& value, const std::string& where) {
  if (key == "seed") s.seed = static_cast<std::uint64_t>(parse_int(value, where));
  else if (key == "months") s.months = static_cast<int>(parse_int(value, where));
  else if (key == "start") s.start = parse_year_month(value);
  else if (key == "base_delay_rate") s.base_delay_rate = parse_double(value, where);
  else if (key == "congestion_sensitivity") s.congestion_sensitivity = parse_double(value, where);
  else if (key == "cancel_rate") s.cancel_rate = parse_double(value, where);
  else if (key == "weather_share") s.weather_share = parse_double(value, where);
  else if (key == "incident_share") s.incident_share = parse_double(value, where);
  else if (key == "connection_share") s.connection_share = parse_double(value, where);
  else if (key == "seats_per_flight") s.seats_per_flight = static_cast<int>(parse_int(value, where));
  else if (key == "load_factor") s.load_factor = parse_double(value, where);
  else if (key.rfind("capacity.", 0) == 0) {
    const auto city = key.substr(9);
    auto it = std::find_if(s.cities.begin(), s.cities.end(), [&](const ScenarioCity& c) { return c.id == city; });
    if (it == s.cities.end()) throw Error(where, "unknown scenario city '" + city + "'");
    it->hourly_capacity = parse_int(value, where);
  } else {
    throw Error(where, "unknown key");
  }
}

ModelSpec default_model() {
  ModelSpec m;
  m.regressors = baseline_regressors();
  m.endogenous = {"hhi_pair", "hhi_max_city"};
  m.instruments = {{"hhi_pair", {150.0, 300.0, 500.0}}, {"hhi_max_city", {150.0, 300.0, 500.0}}};
  return m;
}

}  // namespace

void set_formats(OutputSpec& out, const std::string& formats, const std::string& where) {
  out.text = out.json = out.csv = false;
  for (const auto& f : name_list(formats)) {
    if (f == "all") out.text = out.json = out.csv = true;
    else if (f == "text") out.text = true;
    else if (f == "json") out.json = true;
    else if (f == "csv") out.csv = true;
    else throw Error(where, "unknown format '" + f + "' (expected text, json, csv or all)");
  }
  if (!out.text && !out.json && !out.csv) throw Error(where, "no output format selected");
}

RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error("config", e.message() + " at line " + std::to_string(e.line()));
  }

  RunConfig cfg;
  cfg.input.scenario = default_market_scenario();
  cfg.descriptive_columns = default_descriptive_columns();
  ModelSpec base = default_model();
  std::vector<std::pair<std::string, const pt::ptree*>> column_sections;

  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };

  for (const auto& [section, node] : tree) {
    if (node.empty() && !node.data().empty()) throw Error("config." + section, "keys must live inside a section");
    if (section == "input") {
      std::string source = "files";
      for (const auto& [key, v] : node)
        if (key == "source") source = v.data();
      if (source != "files" && source != "synthetic")
        throw Error("config.input.source", "expected files or synthetic, got '" + source + "'");
      cfg.input.synthetic = source == "synthetic";
      for (const auto& [key, v] : node) {
        const std::string where = "config.input." + key;
        const std::string value = v.data();
        if (key == "source") continue;
        if (cfg.input.synthetic) {
          apply_scenario_key(cfg.input.scenario, key, value, where);
          continue;
        }
        if (key == "flights") cfg.input.flights = resolve(value);
        else if (key == "traffic") cfg.input.traffic = resolve(value);
        else if (key == "cities") cfg.input.cities = resolve(value);
        else if (key == "airports") cfg.input.airports = resolve(value);
        else if (key == "capacity") cfg.input.capacity = resolve(value);
        else if (key == "codeshare") cfg.input.codeshare = resolve(value);
        else throw Error(where, "unknown key");
      }
    } else if (section == "panel") {
      for (const auto& [key, v] : node) {
        const std::string where = "config.panel." + key;
        if (key == "threshold") {
          cfg.panel.threshold_minutes = static_cast<int>(parse_int(v.data(), where));
          if (cfg.panel.threshold_minutes <= 0) throw Error(where, "must be positive");
        } else if (key == "odds_continuity_correction") {
          cfg.panel.odds_continuity_correction = parse_bool(v.data(), where);
        } else {
          throw Error(where, "unknown key");
        }
      }
    } else if (section == "model") {
      for (const auto& [key, v] : node)
        if (!apply_model_key(base, key, v.data(), "config.model." + key)) throw Error("config.model." + key, "unknown key");
    } else if (section.rfind("column.", 0) == 0) {
      column_sections.emplace_back(section, &node);
    } else if (section == "output") {
      for (const auto& [key, v] : node) {
        const std::string where = "config.output." + key;
        if (key == "dir") cfg.output.dir = resolve(v.data());
        else if (key == "formats") set_formats(cfg.output, v.data(), where);
        else if (key == "descriptive_columns") {
          cfg.descriptive_columns = name_list(v.data());
          for (const auto& c : cfg.descriptive_columns)
            if (!is_panel_column(c)) throw Error(where, "unknown panel column '" + c + "'");
        } else {
          throw Error(where, "unknown key");
        }
      }
    } else {
      throw Error("config." + section, "unknown section");
    }
  }

  if (!cfg.input.synthetic) {
    const std::pair<const char*, const std::filesystem::path*> required[] = {
        {"flights", &cfg.input.flights}, {"traffic", &cfg.input.traffic}, {"cities", &cfg.input.cities},
        {"airports", &cfg.input.airports}, {"capacity", &cfg.input.capacity}};
    for (const auto& [name, path] : required)
      if (path->empty()) throw Error(std::string("config.input.") + name, "missing input path");
  } else {
    try {
      cfg.input.scenario.validate();
    } catch (const Error& e) {
      throw Error("config.input", e.what());
    }
  }

  if (column_sections.empty()) {
    cfg.columns.push_back(base);
  } else {
    for (const auto& [section, node] : column_sections) {
      ModelSpec m = base;
      for (const auto& [key, v] : *node) {
        const std::string where = "config." + section + "." + key;
        if (!apply_model_key(m, key, v.data(), where)) throw Error(where, "unknown key");
      }
      cfg.columns.push_back(std::move(m));
    }
  }
  for (std::size_t i = 0; i < cfg.columns.size(); ++i) {
    auto& m = cfg.columns[i];
    const std::string where = column_sections.empty() ? "config.model" : "config." + column_sections[i].first;
    if (m.estimator == Estimator::OLS) m.endogenous.clear();
    m.validate(where);
    if (m.title.empty()) m.title = regressand_title(m.regressand, cfg.panel.threshold_minutes);
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config", "cannot open " + path.string());
  return parse_run_config(in, path.parent_path());
}

namespace {

std::ifstream open_input(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("ingest", "cannot open " + p.string());
  return in;
}

}  // namespace

PipelineData load_data(const RunConfig& config) {
  std::string flights_text, traffic_text, cities_text, airports_text, capacity_text, codeshare_text;
  auto slurp = [](const std::filesystem::path& p) {
    auto in = open_input(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  if (config.input.synthetic) {
    auto files = generate_market(config.input.scenario);
    flights_text = std::move(files.flights);
    traffic_text = std::move(files.traffic);
    cities_text = std::move(files.cities);
    airports_text = std::move(files.airports);
    capacity_text = std::move(files.capacity);
    codeshare_text = std::move(files.codeshare);
  } else {
    flights_text = slurp(config.input.flights);
    traffic_text = slurp(config.input.traffic);
    cities_text = slurp(config.input.cities);
    airports_text = slurp(config.input.airports);
    capacity_text = slurp(config.input.capacity);
    if (!config.input.codeshare.empty()) codeshare_text = slurp(config.input.codeshare);
  }

  PipelineData data;
  {
    std::istringstream c(cities_text), a(airports_text);
    data.cities = parse_cities(c, a);
  }
  std::istringstream cap_in(capacity_text);
  const auto capacity = parse_capacity(cap_in, data.cities);
  std::istringstream fl_in(flights_text);
  auto flights = parse_flights(fl_in, data.cities);
  std::istringstream tr_in(traffic_text);
  auto traffic = parse_traffic(tr_in, data.cities);
  std::vector<CodeshareRow> codeshare;
  if (!codeshare_text.empty()) {
    std::istringstream cs_in(codeshare_text);
    codeshare = parse_codeshare(cs_in, data.cities);
  }
  data.flights_accepted = flights.accepted.size();
  data.flight_rejects = std::move(flights.rejected);
  data.traffic_rejects = std::move(traffic.rejected);

  PanelInputs inputs;
  inputs.flights = flights.accepted;
  inputs.traffic = traffic.accepted;
  inputs.cities = &data.cities;
  inputs.capacities = &capacity;
  inputs.codeshare = codeshare;
  data.panel = build_panel(inputs, config.panel);
  if (data.panel.observations.empty()) throw Error("panel", "no route-month cells survived construction");
  return data;
}

ProblemBuild build_problem(std::span<const PanelObservation> panel, const InstrumentMatrix& instruments,
                           const ModelSpec& spec) {
  const std::string y_col = panel_column(spec.regressand);
  const bool iv = spec.estimator != Estimator::OLS;
  std::vector<Eigen::Index> iv_cols;
  if (iv) {
    for (const auto& label : spec.instrument_labels()) {
      const auto it = std::find(instruments.labels.begin(), instruments.labels.end(), label);
      if (it == instruments.labels.end()) throw Error("build_problem", "instrument " + label + " was not constructed");
      iv_cols.push_back(it - instruments.labels.begin());
    }
  }

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    bool ok = std::isfinite(panel_value(panel[i], y_col));
    for (const auto& r : spec.regressors) ok = ok && std::isfinite(panel_value(panel[i], r));
    for (auto c : iv_cols) ok = ok && std::isfinite(instruments.values(static_cast<Eigen::Index>(i), c));
    if (ok) keep.push_back(i);
  }

  ProblemBuild out;
  out.dropped = panel.size() - keep.size();
  auto& p = out.problem;
  const auto n = static_cast<Eigen::Index>(keep.size());
  if (n == 0) throw Error("build_problem", "no complete rows for regressand " + to_string(spec.regressand));

  std::vector<std::string> x_names = spec.regressors;
  const bool constant = !spec.fe.any();
  if (constant) x_names.push_back("const");
  const auto k = static_cast<Eigen::Index>(x_names.size());

  std::map<std::string, long long> unit_ids;
  for (auto i : keep) unit_ids.emplace(panel[i].pair_id, 0);
  long long next = 0;
  for (auto& [id, idx] : unit_ids) idx = next++;

  p.y_name = y_col;
  p.y.resize(n);
  p.X.resize(n, k);
  p.excluded.resize(n, static_cast<Eigen::Index>(iv_cols.size()));
  p.unit.resize(static_cast<std::size_t>(n));
  p.time.resize(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& o = panel[keep[static_cast<std::size_t>(r)]];
    p.y(r) = panel_value(o, y_col);
    for (std::size_t j = 0; j < spec.regressors.size(); ++j)
      p.X(r, static_cast<Eigen::Index>(j)) = panel_value(o, spec.regressors[j]);
    if (constant) p.X(r, k - 1) = 1.0;
    for (std::size_t j = 0; j < iv_cols.size(); ++j)
      p.excluded(r, static_cast<Eigen::Index>(j)) =
          instruments.values(static_cast<Eigen::Index>(keep[static_cast<std::size_t>(r)]), iv_cols[j]);
    p.unit[static_cast<std::size_t>(r)] = unit_ids.at(o.pair_id);
    p.time[static_cast<std::size_t>(r)] = o.month.index();
  }
  p.x_names = std::move(x_names);
  if (iv) {
    for (const auto& e : spec.endogenous) {
      const auto it = std::find(p.x_names.begin(), p.x_names.end(), e);
      p.endogenous.push_back(static_cast<int>(it - p.x_names.begin()));
    }
    p.excluded_names = spec.instrument_labels();
  }
  p.fe = spec.fe;
  p.hac_bandwidth = spec.bandwidth;
  p.small_sample = spec.small_sample;
  p.covariance = spec.covariance;
  p.validate();
  return out;
}

RunOutputs run_suite(const RunConfig& config, int threads) {
  const auto data = load_data(config);
  return run_suite(config, data, threads);
}

RunOutputs run_suite(const RunConfig& config, const PipelineData& data, int threads) {
  if (config.columns.empty()) throw Error("run_suite", "empty column set");
  RunOutputs out;
  const auto& panel = data.panel.observations;
  out.log.push_back("flights accepted: " + std::to_string(data.flights_accepted) +
                    ", rejected: " + std::to_string(data.flight_rejects.size()));
  for (const auto& r : data.flight_rejects)
    out.log.push_back("flights.csv line " + std::to_string(r.line) + ": " + r.reason);
  for (const auto& r : data.traffic_rejects)
    out.log.push_back("traffic.csv line " + std::to_string(r.line) + ": " + r.reason);
  out.log.push_back("panel cells: " + std::to_string(panel.size()) +
                    ", dropped cells: " + std::to_string(data.panel.dropped.size()));

  // One instrument matrix covering every column's specs.
  std::vector<InstrumentSpec> all_specs;
  for (const auto& m : config.columns) {
    if (m.estimator == Estimator::OLS) continue;
    for (const auto& s : m.instruments) {
      auto it = std::find_if(all_specs.begin(), all_specs.end(), [&](const auto& a) { return a.target == s.target; });
      if (it == all_specs.end()) {
        all_specs.push_back(s);
        continue;
      }
      for (double c : s.cutoffs_km)
        if (std::find(it->cutoffs_km.begin(), it->cutoffs_km.end(), c) == it->cutoffs_km.end())
          it->cutoffs_km.push_back(c);
      std::sort(it->cutoffs_km.begin(), it->cutoffs_km.end());
    }
  }
  const DistanceMatrix distances(data.cities);
  const auto instruments = build_instrument_matrix(panel, distances, all_specs);

  std::vector<TableColumn> columns(config.columns.size());
  std::vector<std::vector<std::string>> column_log(config.columns.size());
  detail::parallel_for(static_cast<int>(config.columns.size()), threads, [&](int c) {
    const auto& spec = config.columns[static_cast<std::size_t>(c)];
    auto& col = columns[static_cast<std::size_t>(c)];
    col.title = spec.title;
    try {
      const auto built = build_problem(panel, instruments, spec);
      if (built.dropped > 0)
        column_log[static_cast<std::size_t>(c)].push_back("column " + std::to_string(c + 1) + ": dropped " +
                                                          std::to_string(built.dropped) + " incomplete rows");
      const auto prepared = apply_fixed_effects(built.problem);
      auto result = estimate(spec.estimator, prepared);
      run_diagnostics(result, prepared, spec.diagnostics);
      for (const auto& w : result.warnings)
        column_log[static_cast<std::size_t>(c)].push_back("column " + std::to_string(c + 1) + ": " + w);
      col.result = to_json(result);
    } catch (const std::exception& e) {
      col.error = e.what();
    }
  });
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out.log.insert(out.log.end(), column_log[c].begin(), column_log[c].end());
    if (!columns[c].result) {
      out.all_columns_ok = false;
      out.log.push_back("column " + std::to_string(c + 1) + " failed: " + columns[c].error);
    }
  }

  out.results = to_json(columns);
  out.table = render_regression_table(out.results);

  std::ostringstream panel_csv, iv_csv, desc_csv;
  write_panel_csv(panel_csv, panel);
  write_instruments_csv(iv_csv, panel, instruments);
  out.panel_csv = panel_csv.str();
  out.instruments_csv = iv_csv.str();
  const auto desc = describe(panel, config.descriptive_columns);
  out.descriptives_text = render_descriptives(desc);
  out.descriptives_json = to_json(desc);
  write_descriptives_csv(desc_csv, desc);
  out.descriptives_csv = desc_csv.str();
  return out;
}

void write_outputs(const RunOutputs& o, const OutputSpec& spec) {
  std::filesystem::create_directories(spec.dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream f(spec.dir / name, std::ios::binary);
    if (!f) throw Error("output", "cannot open " + (spec.dir / name).string());
    f << text;
    if (!f) throw Error("output", "write failed for " + (spec.dir / name).string());
  };
  if (spec.text) {
    write("table.txt", o.table);
    write("descriptives.txt", o.descriptives_text);
  }
  if (spec.json) {
    write("results.json", o.results.dump(2) + "\n");
    write("descriptives.json", o.descriptives_json.dump(2) + "\n");
  }
  if (spec.csv) {
    write("panel.csv", o.panel_csv);
    write("instruments.csv", o.instruments_csv);
    write("descriptives.csv", o.descriptives_csv);
  }
}

}  // namespace airdelay
