#include "qftk/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "qftk/errors.hpp"

namespace qftk {

Eigen::MatrixXd latin_hypercube(int n, int k, Rng& rng) {
  Eigen::MatrixXd out(n, k);
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int d = 0; d < k; ++d) {
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[static_cast<std::size_t>(i)], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    for (int i = 0; i < n; ++i) out(i, d) = (perm[static_cast<std::size_t>(i)] + rng.uniform()) / n;
  }
  return out;
}

namespace gp {

double matern52(double r, double length_scale) {
  const double s = std::sqrt(5.0) * r / length_scale;
  return (1.0 + s + s * s / 3.0) * std::exp(-s);
}

namespace {

Eigen::MatrixXd cross_cov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double ell) {
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) k(i, j) = matern52((a.row(i) - b.row(j)).norm(), ell);
  return k;
}

constexpr double kLengthScales[] = {0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.5};

}  // namespace

Regressor::Regressor(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double noise) : x_(x) {
  const auto n = static_cast<double>(y.size());
  y_mean_ = y.mean();
  const double var = (y.array() - y_mean_).square().sum() / n;
  y_scale_ = var > 0.0 ? std::sqrt(var) : 1.0;
  const Eigen::VectorXd z = (y.array() - y_mean_) / y_scale_;

  log_ml_ = -std::numeric_limits<double>::infinity();
  for (double ell : kLengthScales) {
    Eigen::MatrixXd k = cross_cov(x, x, ell);
    k.diagonal().array() += noise;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) continue;
    const Eigen::VectorXd w = llt.solve(z);
    const Eigen::MatrixXd l = llt.matrixL();
    const double lml = -0.5 * z.dot(w) - l.diagonal().array().log().sum() - 0.5 * n * std::log(2 * std::numbers::pi);
    if (lml > log_ml_) {
      log_ml_ = lml;
      length_scale_ = ell;
      chol_ = std::move(llt);
      weights_ = w;
    }
  }
  if (length_scale_ == 0.0) throw Error(ErrorCode::FactorizationFailed, "GP covariance is not positive definite");
}

Posterior Regressor::predict(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd ks = cross_cov(x, x_, length_scale_);
  Posterior p;
  p.mean = (ks * weights_).array() * y_scale_ + y_mean_;
  const Eigen::MatrixXd v = chol_.matrixL().solve(ks.transpose());
  p.stddev = ((1.0 - v.colwise().squaredNorm().array()).max(0.0).sqrt() * y_scale_).matrix().transpose();
  return p;
}

double expected_improvement(double mu, double sigma, double best, double xi) {
  const double imp = best - mu - xi;
  if (sigma <= 1e-12) return std::max(imp, 0.0);
  const double z = imp / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi);
  return imp * cdf + sigma * pdf;
}

}  // namespace gp

SequentialMinimizer::SequentialMinimizer(Eigen::VectorXd lower, Eigen::VectorXd upper, int budget,
                                         std::uint64_t seed, ProposalStrategy strategy)
    : lower_(std::move(lower)), upper_(std::move(upper)), budget_(budget), strategy_(strategy), rng_(seed) {
  if (lower_.size() != upper_.size() || lower_.size() == 0)
    throw Error(ErrorCode::DimensionMismatch, "box bounds must have equal nonzero length");
  if ((upper_.array() <= lower_.array()).any()) throw Error(ErrorCode::ConfigError, "empty box");
  if (budget_ < 1) throw Error(ErrorCode::ConfigError, "budget must be at least 1");
  const int n0 = std::min(kInitialDesign, budget_);
  const Eigen::MatrixXd lhs = latin_hypercube(n0, dimension(), rng_);
  for (int i = n0 - 1; i >= 0; --i) design_.push_back(lhs.row(i).transpose());
}

Eigen::VectorXd SequentialMinimizer::to_unit(const Eigen::VectorXd& x) const {
  return ((x - lower_).array() / (upper_ - lower_).array()).matrix();
}

Eigen::VectorXd SequentialMinimizer::from_unit(const Eigen::VectorXd& u) const {
  return (lower_.array() + u.array() * (upper_ - lower_).array()).matrix();
}

int SequentialMinimizer::incumbent() const {
  int best = -1;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (std::isfinite(values_[i]) && (best < 0 || values_[i] < values_[static_cast<std::size_t>(best)]))
      best = static_cast<int>(i);
  return best;
}

Eigen::VectorXd SequentialMinimizer::ask() {
  if (!design_.empty()) {
    Eigen::VectorXd u = design_.back();
    design_.pop_back();
    return from_unit(u);
  }
  if (strategy_ == ProposalStrategy::RandomSearch || incumbent() < 0) {
    Eigen::VectorXd u(dimension());
    for (Eigen::Index d = 0; d < u.size(); ++d) u(d) = rng_.uniform();
    return from_unit(u);
  }
  return propose_gp();
}

void SequentialMinimizer::tell(const Eigen::VectorXd& x, double value) {
  if (x.size() != lower_.size()) throw Error(ErrorCode::DimensionMismatch, "observation has wrong dimension");
  points_.push_back(x);
  values_.push_back(value);
}

Eigen::VectorXd SequentialMinimizer::propose_gp() {
  const int k = dimension();
  const auto n = static_cast<Eigen::Index>(values_.size());
  double worst = -std::numeric_limits<double>::infinity();
  for (double v : values_)
    if (std::isfinite(v)) worst = std::max(worst, v);

  Eigen::MatrixXd xs(n, k);
  Eigen::VectorXd ys(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    xs.row(i) = to_unit(points_[static_cast<std::size_t>(i)]).transpose();
    const double v = values_[static_cast<std::size_t>(i)];
    ys(i) = std::isfinite(v) ? v : worst;
  }
  const gp::Regressor model(xs, ys);

  const Eigen::VectorXd best_u = to_unit(points_[static_cast<std::size_t>(incumbent())]);
  const double best = values_[static_cast<std::size_t>(incumbent())];
  Eigen::MatrixXd cand(kRandomCandidates + kLocalCandidates, k);
  for (int i = 0; i < kRandomCandidates; ++i)
    for (int d = 0; d < k; ++d) cand(i, d) = rng_.uniform();
  for (int i = 0; i < kLocalCandidates; ++i)
    for (int d = 0; d < k; ++d)
      cand(kRandomCandidates + i, d) = std::clamp(best_u(d) + 0.1 * rng_.normal(), 0.0, 1.0);

  const gp::Posterior post = model.predict(cand);
  Eigen::Index arg = 0;
  double top = -1.0;
  for (Eigen::Index i = 0; i < cand.rows(); ++i) {
    const double ei = gp::expected_improvement(post.mean(i), post.stddev(i), best);
    if (ei > top) {
      top = ei;
      arg = i;
    }
  }
  return from_unit(cand.row(arg).transpose());
}

}  // namespace qftk
