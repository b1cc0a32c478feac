#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "airdelay/estimators.hpp"
#include "airdelay/panel.hpp"

namespace airdelay {

using Json = nlohmann::ordered_json;

/// Human label of a panel column as printed in regression tables ("hhi_pair" -> "HHI city-pair").
/// Unknown names are returned unchanged.
std::string variable_label(const std::string& name);

Json to_json(const TestResult& t);
/// Every field of the result, including residuals and the coefficient covariance.
Json to_json(const EstimationResult& r);

/// One column of a regression table. Either `result` (the JSON of an EstimationResult) or `error`.
struct TableColumn {
  std::string title;
  std::optional<Json> result;
  std::string error;
};

Json to_json(const std::vector<TableColumn>& columns);
std::vector<TableColumn> columns_from_json(const Json& j);

/// Fixed-width regression table: coefficients with stars (*** p<0.01, ** p<0.05, * p<0.10) and
/// bracketed standard errors on the next line, then the fixed-effect, fit and diagnostics rows.
/// Reads nothing but the JSON, so a saved results file re-renders to the same text.
std::string render_regression_table(const Json& columns);

/// Fixed 4-decimal text, with negative zero printed as zero.
std::string fixed4(double v);

/// The columns described in the descriptive-statistics report, in table order.
const std::vector<std::string>& default_descriptive_columns();

Json to_json(const DescriptiveStats& d);
/// Lower-triangle Pearson correlations followed by mean, standard deviation, minimum and maximum.
std::string render_descriptives(const DescriptiveStats& d);
void write_descriptives_csv(std::ostream& out, const DescriptiveStats& d);

}  // namespace airdelay
