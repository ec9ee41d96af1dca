#pragma once

// Forecast error metrics. x holds predictions, y observations, both in
// physical units. Percent metrics are normalised by mean(y).

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qftk/errors.hpp"

namespace qftk {

namespace detail {

template <typename DX, typename DY>
void check_pair(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  if (x.size() != y.size() || y.size() == 0) throw Error(ErrorCode::LengthMismatch, "prediction/observation lengths differ or are empty");
}

template <typename DY>
double checked_mean(const Eigen::MatrixBase<DY>& y) {
  const double m = y.mean();
  if (!(std::abs(m) > 1e-9)) throw Error(ErrorCode::ZeroMeanObservations, "mean observation is zero");
  return m;
}

}  // namespace detail

template <typename DX, typename DY>
double nrmse(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  detail::check_pair(x, y);
  const double mean = detail::checked_mean(y);
  return 100.0 * std::sqrt((x - y).squaredNorm() / static_cast<double>(y.size())) / mean;
}

template <typename DX, typename DY>
double nmbe(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  detail::check_pair(x, y);
  const double mean = detail::checked_mean(y);
  return 100.0 * (x - y).mean() / mean;
}

// Squared Pearson correlation.
template <typename DX, typename DY>
double r2_pearson(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  detail::check_pair(x, y);
  const Eigen::ArrayXd dx = x.array() - x.mean();
  const Eigen::ArrayXd dy = y.array() - y.mean();
  const double sxx = dx.square().sum();
  const double syy = dy.square().sum();
  if (!(sxx > 0.0) || !(syy > 0.0)) throw Error(ErrorCode::ZeroVariance, "r2_pearson needs non-constant inputs");
  const double sxy = (dx * dy).sum();
  return std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
}

// 1 - SS_res / SS_tot
template <typename DX, typename DY>
double r2_score(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  detail::check_pair(x, y);
  const double syy = (y.array() - y.mean()).square().sum();
  if (!(syy > 0.0)) throw Error(ErrorCode::ZeroVariance, "r2_score needs non-constant observations");
  return 1.0 - (x - y).squaredNorm() / syy;
}

template <typename DX, typename DY>
double mae(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  detail::check_pair(x, y);
  return (x - y).cwiseAbs().mean();
}

// 100 * max|x - y| / mean(y)
template <typename DX, typename DY>
double ermax(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  detail::check_pair(x, y);
  const double mean = detail::checked_mean(y);
  return 100.0 * (x - y).cwiseAbs().maxCoeff() / mean;
}

inline constexpr const char* kErmaxDefinition = "maxabs_over_meanobs";

struct MetricsReport {
  std::string station_code;
  std::string model;
  long n_points = 0;
  double nrmse_pct = 0.0;
  double nmbe_pct = 0.0;
  double r2_pearson = 0.0;  // NaN when predictions are constant
  double r2_score = 0.0;
  double mae = 0.0;
  double ermax_pct = 0.0;
  std::map<std::string, double> flags;
};

MetricsReport compute_report(const std::string& station, const std::string& model, const Eigen::VectorXd& predicted,
                             const Eigen::VectorXd& observed);

const std::vector<std::string>& metric_names();
double metric_value(const MetricsReport& report, const std::string& metric);

struct FiveNumberSummary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
  long count = 0;
};

// Linear interpolation between order statistics at position q * (n - 1).
double quantile(std::vector<double> values, double q);
FiveNumberSummary five_number_summary(const std::vector<double>& values);

struct ClassAggregate {
  // class -> model -> metric -> summary
  std::map<std::string, std::map<std::string, std::map<std::string, FiveNumberSummary>>> summaries;
  std::vector<std::string> notes;
};

ClassAggregate aggregate_by_class(const std::vector<MetricsReport>& reports, const std::map<std::string, std::string>& station_class);

}  // namespace qftk
