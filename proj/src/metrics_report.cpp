#include <algorithm>
#include <cmath>
#include <limits>

#include "qftk/metrics.hpp"

namespace qftk {

MetricsReport compute_report(const std::string& station, const std::string& model, const Eigen::VectorXd& predicted,
                             const Eigen::VectorXd& observed) {
  MetricsReport r;
  r.station_code = station;
  r.model = model;
  r.n_points = static_cast<long>(observed.size());
  r.nrmse_pct = nrmse(predicted, observed);
  r.nmbe_pct = nmbe(predicted, observed);
  try {
    r.r2_pearson = qftk::r2_pearson(predicted, observed);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ZeroVariance) throw;
    r.r2_pearson = std::numeric_limits<double>::quiet_NaN();
  }
  r.r2_score = qftk::r2_score(predicted, observed);
  r.mae = qftk::mae(predicted, observed);
  r.ermax_pct = ermax(predicted, observed);
  return r;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"nrmse_pct", "nmbe_pct", "r2_pearson", "r2_score", "mae", "ermax_pct"};
  return names;
}

double metric_value(const MetricsReport& r, const std::string& metric) {
  if (metric == "nrmse_pct") return r.nrmse_pct;
  if (metric == "nmbe_pct") return r.nmbe_pct;
  if (metric == "r2_pearson") return r.r2_pearson;
  if (metric == "r2_score") return r.r2_score;
  if (metric == "mae") return r.mae;
  if (metric == "ermax_pct") return r.ermax_pct;
  throw Error(ErrorCode::ConfigError, "unknown metric '" + metric + "'");
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::LengthMismatch, "quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

FiveNumberSummary five_number_summary(const std::vector<double>& values) {
  FiveNumberSummary s;
  s.count = static_cast<long>(values.size());
  s.median = quantile(values, 0.5);
  s.q1 = quantile(values, 0.25);
  s.q3 = quantile(values, 0.75);
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  return s;
}

ClassAggregate aggregate_by_class(const std::vector<MetricsReport>& reports, const std::map<std::string, std::string>& station_class) {
  ClassAggregate out;
  std::map<std::string, std::map<std::string, std::map<std::string, std::vector<double>>>> values;
  for (const auto& r : reports) {
    const auto it = station_class.find(r.station_code);
    if (it == station_class.end()) {
      out.notes.push_back("station " + r.station_code + " has no climate class; skipped");
      continue;
    }
    for (const auto& metric : metric_names()) {
      const double v = metric_value(r, metric);
      if (std::isfinite(v)) values[it->second][r.model][metric].push_back(v);
    }
  }
  for (const auto& [cls, models] : values)
    for (const auto& [model, metrics] : models)
      for (const auto& [metric, v] : metrics) out.summaries[cls][model][metric] = five_number_summary(v);
  std::sort(out.notes.begin(), out.notes.end());
  out.notes.erase(std::unique(out.notes.begin(), out.notes.end()), out.notes.end());
  return out;
}

}  // namespace qftk
