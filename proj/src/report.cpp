#include "airdelay/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

namespace airdelay {

std::string variable_label(const std::string& name) {
  static const std::map<std::string, std::string> labels = {
      {"n_congested", "nr flights in congested hours"},
      {"n_uncongested", "nr flights in uncongested hours"},
      {"prop_weather", "prop flights with bad weather"},
      {"prop_incident", "prop flights with incidents"},
      {"prop_connection", "prop flights held for late connections"},
      {"max_city_delay_prop", "max prop city delayed flights"},
      {"codeshare", "codeshare agreement"},
      {"hhi_pair", "HHI city-pair"},
      {"hhi_max_city", "HHI max endpoint cities"},
      {"lcc_pair", "LCC presence city-pair"},
      {"lcc_max_city", "LCC presence max endpoint cities"},
      {"odds", "ODDS"},
      {"mins", "MINS"},
      {"mins_gt_threshold", "MINS > threshold"},
      {"odds_dep", "ODDSD"},
      {"mins_dep", "MINSD"},
      {"mins_dep_gt_threshold", "MINSD > threshold"},
      {"n_flights_total", "nr flights"},
      {"const", "constant"},
  };
  const auto it = labels.find(name);
  return it == labels.end() ? name : it->second;
}

namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vector_json(const VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

Json matrix_json(const MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector_json(m.row(i).transpose()));
  return a;
}

std::optional<double> get_number(const Json& j, const char* key) {
  if (!j.is_object()) return std::nullopt;
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) return std::nullopt;
  return it->get<double>();
}

}  // namespace

Json to_json(const TestResult& t) {
  Json j;
  j["name"] = t.name;
  j["statistic"] = number(t.statistic);
  j["distribution"] = t.distribution == Distribution::chi2 ? "chi2" : "F";
  j["df"] = number(t.df);
  if (t.distribution == Distribution::F) j["df2"] = number(t.df2);
  j["p_value"] = number(t.p_value);
  return j;
}

Json to_json(const EstimationResult& r) {
  Json j;
  j["estimator"] = to_string(r.estimator);
  j["regressand"] = r.y_name;
  j["n"] = r.n;
  j["k"] = r.k;
  j["l"] = r.l;
  j["overid_df"] = r.overid_df;
  j["absorbed"] = r.absorbed;
  j["bandwidth"] = r.bandwidth;
  j["covariance"] = r.covariance == CovarianceKind::hac ? "hac" : "homoscedastic";
  j["fixed_effects"] = {{"unit", r.fe.unit_effects},
                        {"time", r.fe.time_effects},
                        {"implementation", r.fe.implementation == FeImplementation::full_dummies ? "full_dummies"
                                                                                                  : "within"}};
  if (r.estimator == Estimator::LIML) j["kappa"] = number(r.kappa);

  Json coefs = Json::array();
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    Json c;
    c["name"] = r.names[i];
    c["coef"] = number(r.coef(k));
    c["se"] = number(r.se(k));
    c["t"] = number(r.t_ratio(k));
    c["p"] = number(r.p_value(k));
    c["fixed_effect"] = i < r.fe_column.size() && r.fe_column[i];
    coefs.push_back(std::move(c));
  }
  j["coefficients"] = std::move(coefs);

  j["fit"] = {{"r2", number(r.fit.r2)},         {"adj_r2", number(r.fit.adj_r2)}, {"rmse", number(r.fit.rmse)},
              {"rss", number(r.fit.rss)},       {"tss", number(r.fit.tss)},       {"f_stat", number(r.fit.f_stat)},
              {"f_df1", r.fit.f_df1},           {"f_df2", number(r.fit.f_df2)},   {"f_p", number(r.fit.f_p)}};

  Json d = Json::object();
  const auto& diag = r.diagnostics;
  if (diag.kp_lm) d["kp_lm"] = to_json(*diag.kp_lm);
  if (diag.hansen_j) d["hansen_j"] = to_json(*diag.hansen_j);
  if (diag.weak_cd) d["weak_cd"] = to_json(*diag.weak_cd);
  if (diag.weak_kp) d["weak_kp"] = to_json(*diag.weak_kp);
  Json extra = Json::array();
  for (const auto& t : diag.extra) extra.push_back(to_json(t));
  d["extra"] = std::move(extra);
  j["diagnostics"] = std::move(d);

  j["warnings"] = r.warnings;
  j["covariance_matrix"] = matrix_json(r.cov);
  if (r.step1_coef.size() > 0) j["step1_coef"] = vector_json(r.step1_coef);
  j["residuals"] = vector_json(r.residuals);
  return j;
}

Json to_json(const std::vector<TableColumn>& columns) {
  Json a = Json::array();
  for (const auto& c : columns) {
    Json j;
    j["title"] = c.title;
    if (c.result) j["result"] = *c.result;
    else j["error"] = c.error;
    a.push_back(std::move(j));
  }
  return a;
}

std::vector<TableColumn> columns_from_json(const Json& j) {
  if (!j.is_array()) throw Error("report", "results JSON must be an array of columns");
  std::vector<TableColumn> out;
  for (const auto& c : j) {
    TableColumn col;
    col.title = c.value("title", "");
    if (c.contains("result")) col.result = c.at("result");
    else col.error = c.value("error", "no result");
    out.push_back(std::move(col));
  }
  return out;
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s = buf;
  if (s == "-0.0000") s = "0.0000";
  return s;
}

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string stars(std::optional<double> p) {
  if (!p) return "";
  if (*p < 0.01) return "***";
  if (*p < 0.05) return "**";
  if (*p < 0.10) return "*";
  return "";
}

std::string opt4(std::optional<double> v) { return v ? fixed4(*v) : ""; }

void emit_row(std::ostringstream& out, const std::string& label, std::size_t label_width,
              const std::vector<std::string>& cells, const std::vector<std::size_t>& widths) {
  std::string line = label;
  line.resize(label_width, ' ');
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::string cell = cells[c];
    if (c + 1 < cells.size()) cell.resize(widths[c], ' ');
    line += cell;
  }
  while (!line.empty() && line.back() == ' ') line.pop_back();
  out << line << '\n';
}

}  // namespace

std::string render_regression_table(const Json& columns_json) {
  const auto columns = columns_from_json(columns_json);
  if (columns.empty()) throw Error("report", "no columns to render");

  // Coefficient rows in order of first appearance, skipping generated fixed-effect dummies.
  std::vector<std::string> names;
  for (const auto& c : columns) {
    if (!c.result) continue;
    for (const auto& coef : c.result->at("coefficients")) {
      if (coef.value("fixed_effect", false)) continue;
      const auto name = coef.at("name").get<std::string>();
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
  }

  struct Row {
    std::string label;
    std::vector<std::string> cells;
  };
  std::vector<Row> rows;
  const std::size_t nc = columns.size();

  std::vector<std::string> header(nc);
  for (std::size_t c = 0; c < nc; ++c) header[c] = "(" + std::to_string(c + 1) + ") " + columns[c].title;

  for (const auto& name : names) {
    Row est{variable_label(name), std::vector<std::string>(nc)};
    Row se{"", std::vector<std::string>(nc)};
    for (std::size_t c = 0; c < nc; ++c) {
      if (!columns[c].result) continue;
      for (const auto& coef : columns[c].result->at("coefficients")) {
        if (coef.at("name") != name || coef.value("fixed_effect", false)) continue;
        const auto b = get_number(coef, "coef");
        const auto s = get_number(coef, "se");
        est.cells[c] = b ? fixed4(*b) + stars(get_number(coef, "p")) : "NA";
        se.cells[c] = s ? "[" + fixed4(*s) + "]" : "[NA]";
      }
    }
    rows.push_back(std::move(est));
    rows.push_back(std::move(se));
  }

  auto column_row = [&](const std::string& label, auto&& cell) {
    Row r{label, std::vector<std::string>(nc)};
    for (std::size_t c = 0; c < nc; ++c)
      if (columns[c].result) r.cells[c] = cell(*columns[c].result);
    rows.push_back(std::move(r));
  };
  auto yes_no = [](bool b) { return std::string(b ? "yes" : "no"); };
  auto diag = [](const Json& r, const char* key, const char* field) -> std::optional<double> {
    const auto& d = r.at("diagnostics");
    if (!d.contains(key)) return std::nullopt;
    return get_number(d.at(key), field);
  };

  column_row("city-pair fixed effects", [&](const Json& r) { return yes_no(r.at("fixed_effects").at("unit")); });
  column_row("time fixed effects", [&](const Json& r) { return yes_no(r.at("fixed_effects").at("time")); });
  column_row("Adj. R-Squared", [&](const Json& r) { return opt4(get_number(r.at("fit"), "adj_r2")); });
  column_row("RMSE Statistic", [&](const Json& r) { return opt4(get_number(r.at("fit"), "rmse")); });
  column_row("F Statistic", [&](const Json& r) { return opt4(get_number(r.at("fit"), "f_stat")); });
  column_row("KP Statistic", [&](const Json& r) { return opt4(diag(r, "kp_lm", "statistic")); });
  column_row("KP P-Value", [&](const Json& r) { return opt4(diag(r, "kp_lm", "p_value")); });
  column_row("J Statistic", [&](const Json& r) { return opt4(diag(r, "hansen_j", "statistic")); });
  column_row("J P-Value", [&](const Json& r) { return opt4(diag(r, "hansen_j", "p_value")); });
  column_row("Weak CD Statistic", [&](const Json& r) { return opt4(diag(r, "weak_cd", "statistic")); });
  column_row("Weak KP Statistic", [&](const Json& r) { return opt4(diag(r, "weak_kp", "statistic")); });
  column_row("Nr Observations", [&](const Json& r) { return std::to_string(r.at("n").get<long long>()); });

  std::size_t label_width = 0;
  for (const auto& r : rows) label_width = std::max(label_width, r.label.size());
  label_width += 2;
  std::vector<std::size_t> widths(nc, 12);
  for (std::size_t c = 0; c < nc; ++c) {
    widths[c] = std::max(widths[c], header[c].size() + 2);
    for (const auto& r : rows) widths[c] = std::max(widths[c], r.cells[c].size() + 2);
  }

  std::ostringstream out;
  emit_row(out, "", label_width, header, widths);
  std::vector<std::string> regressands(nc);
  for (std::size_t c = 0; c < nc; ++c)
    regressands[c] = columns[c].result ? columns[c].result->at("estimator").get<std::string>() : "failed";
  emit_row(out, "", label_width, regressands, widths);
  for (const auto& r : rows) emit_row(out, r.label, label_width, r.cells, widths);
  out << "Standard errors in brackets. *** p<0.01, ** p<0.05, * p<0.10\n";
  for (std::size_t c = 0; c < nc; ++c)
    if (!columns[c].result) out << "(" << c + 1 << ") not estimated: " << columns[c].error << '\n';
  return out.str();
}

const std::vector<std::string>& default_descriptive_columns() {
  static const std::vector<std::string> cols = {
      "n_congested",  "n_uncongested", "prop_weather", "prop_incident", "prop_connection",
      "max_city_delay_prop", "codeshare", "hhi_pair", "hhi_max_city", "lcc_pair",
      "lcc_max_city", "odds", "mins"};
  return cols;
}

Json to_json(const DescriptiveStats& d) {
  Json j;
  Json vars = Json::array();
  for (std::size_t i = 0; i < d.columns.size(); ++i) {
    vars.push_back({{"name", d.columns[i]},
                    {"label", variable_label(d.columns[i])},
                    {"count", d.count[i]},
                    {"mean", number(d.mean[i])},
                    {"sd", number(d.sd[i])},
                    {"min", number(d.min[i])},
                    {"max", number(d.max[i])}});
  }
  j["variables"] = std::move(vars);
  Json corr = Json::array();
  for (const auto& row : d.correlation) {
    Json r = Json::array();
    for (double v : row) r.push_back(number(v));
    corr.push_back(std::move(r));
  }
  j["correlation"] = std::move(corr);
  return j;
}

std::string render_descriptives(const DescriptiveStats& d) {
  const std::size_t m = d.columns.size();
  std::size_t label_width = std::string("Standard Deviation").size();
  for (const auto& c : d.columns) label_width = std::max(label_width, variable_label(c).size());
  const std::size_t tag_width = std::to_string(m).size() + 4;
  const std::size_t lead = label_width + 2 + tag_width;
  std::vector<std::size_t> widths(m, 9);

  auto cell = [](double v) { return std::isfinite(v) ? fixed2(v) : std::string("NA"); };

  std::ostringstream out;
  std::vector<std::string> header(m);
  for (std::size_t i = 0; i < m; ++i) header[i] = "(" + std::to_string(i + 1) + ")";
  emit_row(out, "Variable", lead, header, widths);
  out << "Pearson Correlation\n";
  for (std::size_t i = 0; i < m; ++i) {
    std::string label = variable_label(d.columns[i]);
    label.resize(label_width + 2, ' ');
    label += "(" + std::to_string(i + 1) + ")";
    std::vector<std::string> cells;
    for (std::size_t j = 0; j <= i; ++j) cells.push_back(cell(d.correlation[i][j]));
    emit_row(out, label, lead, cells, widths);
  }
  out << "Univariate statistics\n";
  auto stat_row = [&](const std::string& label, const std::vector<double>& v) {
    std::vector<std::string> cells;
    for (double x : v) cells.push_back(cell(x));
    emit_row(out, label, lead, cells, widths);
  };
  stat_row("Mean", d.mean);
  stat_row("Standard Deviation", d.sd);
  stat_row("Minimum", d.min);
  stat_row("Maximum", d.max);
  std::vector<std::string> counts;
  for (auto c : d.count) counts.push_back(std::to_string(c));
  emit_row(out, "Observations", lead, counts, widths);
  return out.str();
}

void write_descriptives_csv(std::ostream& out, const DescriptiveStats& d) {
  out << "variable,count,mean,sd,min,max";
  for (const auto& c : d.columns) out << ",corr_" << c;
  out << '\n';
  for (std::size_t i = 0; i < d.columns.size(); ++i) {
    out << d.columns[i] << ',' << d.count[i] << ',' << format_double(d.mean[i]) << ',' << format_double(d.sd[i])
        << ',' << format_double(d.min[i]) << ',' << format_double(d.max[i]);
    for (double v : d.correlation[i]) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace airdelay
