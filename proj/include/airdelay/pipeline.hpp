#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "airdelay/diagnostics.hpp"
#include "airdelay/estimators.hpp"
#include "airdelay/instruments.hpp"
#include "airdelay/panel.hpp"
#include "airdelay/report.hpp"
#include "airdelay/synthlab.hpp"

namespace airdelay {

enum class Regressand { ODDS, MINS, MINS_GT, ODDSD, MINSD, MINSD_GT };

std::string to_string(Regressand r);
Regressand parse_regressand(const std::string& s, const std::string& where);
/// Panel column holding the regressand.
std::string panel_column(Regressand r);
/// Column title as printed in tables, e.g. "MINS > 15".
std::string regressand_title(Regressand r, int threshold_minutes);

/// One regression column.
struct ModelSpec {
  std::string title;  // empty: derived from the regressand
  Regressand regressand = Regressand::ODDS;
  Estimator estimator = Estimator::GMM2S;
  std::vector<std::string> regressors;
  std::vector<std::string> endogenous;
  std::vector<InstrumentSpec> instruments;
  FixedEffectsSpec fe = FixedEffectsSpec::two_way();
  std::optional<int> bandwidth;
  CovarianceKind covariance = CovarianceKind::hac;
  bool small_sample = true;
  DiagnosticsOptions diagnostics;

  /// Throws with the field path prefix `where` on invalid combinations.
  void validate(const std::string& where) const;
  std::vector<std::string> instrument_labels() const;
};

/// The nine regressors of the baseline specification.
const std::vector<std::string>& baseline_regressors();

struct InputSpec {
  bool synthetic = false;
  std::filesystem::path flights, traffic, cities, airports, capacity, codeshare;  // codeshare optional
  MarketScenario scenario;
};

struct OutputSpec {
  std::filesystem::path dir = "out";
  bool text = true;
  bool json = true;
  bool csv = true;
};

struct RunConfig {
  InputSpec input;
  PanelConfig panel;
  std::vector<ModelSpec> columns;
  OutputSpec output;
  std::vector<std::string> descriptive_columns;
};

/// Parses the INI run configuration. Relative input paths resolve against `base_dir`.
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);
/// Sets the output formats from "text", "json", "csv", "all" or a comma list of them.
void set_formats(OutputSpec& out, const std::string& formats, const std::string& where);

struct PipelineData {
  CityRegistry cities;
  Panel panel;
  std::size_t flights_accepted = 0;
  std::vector<RejectedRow> flight_rejects;
  std::vector<RejectedRow> traffic_rejects;
};

PipelineData load_data(const RunConfig& config);

/// Rows of the panel with the regressand, every regressor and every instrument present.
struct ProblemBuild {
  EstimationProblem problem;
  std::size_t dropped = 0;
};

ProblemBuild build_problem(std::span<const PanelObservation> panel, const InstrumentMatrix& instruments,
                           const ModelSpec& spec);

struct RunOutputs {
  Json results;  // array of table columns
  std::string table;
  std::string panel_csv;
  std::string instruments_csv;
  std::string descriptives_text;
  Json descriptives_json;
  std::string descriptives_csv;
  std::vector<std::string> log;
  bool all_columns_ok = true;
};

/// Estimates every column (up to `threads` at a time) and renders the reports. Column failures are
/// recorded in the table rather than thrown; configuration and input errors throw.
RunOutputs run_suite(const RunConfig& config, const PipelineData& data, int threads = 1);
RunOutputs run_suite(const RunConfig& config, int threads = 1);

void write_outputs(const RunOutputs& outputs, const OutputSpec& spec);

}  // namespace airdelay
