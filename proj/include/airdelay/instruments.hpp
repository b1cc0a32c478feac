#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "airdelay/ingest.hpp"
#include "airdelay/panel.hpp"

namespace airdelay {

inline constexpr double kEarthRadiusKm = 6371.0088;

/// Haversine distance. Throws on out-of-range coordinates.
double great_circle_km(GeoPoint a, GeoPoint b);

/// Symmetric city-to-city great-circle distances.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(const CityRegistry& cities);

  double km(const CityId& a, const CityId& b) const;
  /// Closest approach between any endpoint of one pair and any endpoint of the other.
  double min_endpoint_km(const CityId& o1, const CityId& d1, const CityId& o2, const CityId& d2) const;

  const Eigen::MatrixXd& matrix() const { return km_; }
  const std::vector<CityId>& cities() const { return ids_; }

 private:
  std::size_t index(const CityId& c) const;

  std::vector<CityId> ids_;
  std::map<CityId, std::size_t> index_;
  Eigen::MatrixXd km_;
};

/// Averages of `target` over distant routes, one per cutoff.
struct InstrumentSpec {
  std::string target;
  std::vector<double> cutoffs_km{150.0, 300.0, 500.0};

  /// Throws unless cutoffs are non-empty, non-negative and strictly increasing.
  void validate() const;
};

/// Column label "<target>__ge<D>km".
std::string instrument_label(const std::string& target, double cutoff_km);

/// Mean of `target` in month t over the other pairs whose endpoints all lie at least `cutoff_km`
/// from both endpoints of row `row`'s pair. nullopt when no pair qualifies.
std::optional<double> hausman_instrument(std::span<const PanelObservation> panel, const DistanceMatrix& distances,
                                         const std::string& target, std::size_t row, double cutoff_km);

struct InstrumentMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd values;          // rows aligned with the panel; NaN marks a missing instrument
  std::vector<std::string> notes;  // one line per row with a missing instrument

  bool row_complete(Eigen::Index i) const { return !values.row(i).hasNaN(); }
};

InstrumentMatrix build_instrument_matrix(std::span<const PanelObservation> panel, const DistanceMatrix& distances,
                                         std::span<const InstrumentSpec> specs);

void write_instruments_csv(std::ostream& out, std::span<const PanelObservation> panel, const InstrumentMatrix& iv);

}  // namespace airdelay
