#include "airdelay/instruments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace airdelay {

double great_circle_km(GeoPoint a, GeoPoint b) {
  for (const auto& p : {a, b})
    if (!(p.lat >= -90.0 && p.lat <= 90.0) || !(p.lon >= -180.0 && p.lon <= 180.0))
      throw Error("great_circle_km", "coordinates out of range");
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * rad;
  const double dlon = (b.lon - a.lon) * rad;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat * rad) * std::cos(b.lat * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

DistanceMatrix::DistanceMatrix(const CityRegistry& cities) {
  for (const auto& [id, loc] : cities.cities()) {
    index_[id] = ids_.size();
    ids_.push_back(id);
  }
  const auto n = static_cast<Eigen::Index>(ids_.size());
  km_ = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      km_(i, j) = km_(j, i) = great_circle_km(cities.location(ids_[i]), cities.location(ids_[j]));
}

std::size_t DistanceMatrix::index(const CityId& c) const {
  auto it = index_.find(c);
  if (it == index_.end()) throw Error("distance_matrix", "unknown city " + c);
  return it->second;
}

double DistanceMatrix::km(const CityId& a, const CityId& b) const {
  return km_(static_cast<Eigen::Index>(index(a)), static_cast<Eigen::Index>(index(b)));
}

double DistanceMatrix::min_endpoint_km(const CityId& o1, const CityId& d1, const CityId& o2, const CityId& d2) const {
  return std::min({km(o1, o2), km(o1, d2), km(d1, o2), km(d1, d2)});
}

void InstrumentSpec::validate() const {
  if (target.empty()) throw Error("instruments", "instrument spec without a target column");
  if (cutoffs_km.empty()) throw Error("instruments", "no cutoffs for " + target);
  for (std::size_t i = 0; i < cutoffs_km.size(); ++i) {
    if (!(cutoffs_km[i] >= 0.0)) throw Error("instruments", "negative cutoff for " + target);
    if (i > 0 && !(cutoffs_km[i] > cutoffs_km[i - 1]))
      throw Error("instruments", "cutoffs for " + target + " must be strictly increasing");
  }
}

std::string instrument_label(const std::string& target, double cutoff_km) {
  const std::string d = cutoff_km == std::floor(cutoff_km) ? std::to_string(static_cast<long long>(cutoff_km))
                                                           : format_double(cutoff_km);
  return target + "__ge" + d + "km";
}

std::optional<double> hausman_instrument(std::span<const PanelObservation> panel, const DistanceMatrix& distances,
                                         const std::string& target, std::size_t row, double cutoff_km) {
  const auto& self = panel[row];
  double sum = 0.0;
  long long n = 0;
  for (std::size_t j = 0; j < panel.size(); ++j) {
    const auto& other = panel[j];
    if (j == row || other.month != self.month || other.pair_id == self.pair_id) continue;
    if (distances.min_endpoint_km(self.origin, self.destination, other.origin, other.destination) < cutoff_km)
      continue;
    const double v = panel_value(other, target);
    if (std::isnan(v)) continue;
    sum += v;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

InstrumentMatrix build_instrument_matrix(std::span<const PanelObservation> panel, const DistanceMatrix& distances,
                                         std::span<const InstrumentSpec> specs) {
  InstrumentMatrix iv;
  for (const auto& s : specs) {
    s.validate();
    if (!is_panel_column(s.target)) throw Error("instruments", "unknown target column '" + s.target + "'");
    for (double d : s.cutoffs_km) iv.labels.push_back(instrument_label(s.target, d));
  }
  const auto rows = static_cast<Eigen::Index>(panel.size());
  iv.values.setConstant(rows, static_cast<Eigen::Index>(iv.labels.size()), std::numeric_limits<double>::quiet_NaN());

  // Rows of one month only ever look at each other.
  std::map<YearMonth, std::vector<std::size_t>> by_month;
  for (std::size_t i = 0; i < panel.size(); ++i) by_month[panel[i].month].push_back(i);

  std::vector<PanelObservation> month_rows;
  for (const auto& [month, idx] : by_month) {
    month_rows.clear();
    for (auto i : idx) month_rows.push_back(panel[i]);
    for (std::size_t local = 0; local < idx.size(); ++local) {
      Eigen::Index col = 0;
      std::vector<std::string> missing;
      for (const auto& s : specs) {
        for (double d : s.cutoffs_km) {
          auto v = hausman_instrument(month_rows, distances, s.target, local, d);
          if (v) iv.values(static_cast<Eigen::Index>(idx[local]), col) = *v;
          else missing.push_back(iv.labels[static_cast<std::size_t>(col)]);
          ++col;
        }
      }
      if (!missing.empty()) {
        std::string note = panel[idx[local]].pair_id + " " + format_year_month(month) + ": no qualifying routes for";
        for (const auto& m : missing) note += " " + m;
        iv.notes.push_back(std::move(note));
      }
    }
  }
  std::sort(iv.notes.begin(), iv.notes.end());
  return iv;
}

void write_instruments_csv(std::ostream& out, std::span<const PanelObservation> panel, const InstrumentMatrix& iv) {
  out << "pair_id,month";
  for (const auto& l : iv.labels) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < panel.size(); ++i) {
    out << panel[i].pair_id << ',' << format_year_month(panel[i].month);
    for (Eigen::Index c = 0; c < iv.values.cols(); ++c)
      out << ',' << format_double(iv.values(static_cast<Eigen::Index>(i), c));
    out << '\n';
  }
}

}  // namespace airdelay
