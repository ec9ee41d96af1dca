#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "qftk/rng.hpp"

namespace qftk {

enum class ProposalStrategy { GpExpectedImprovement, RandomSearch };

// Ask/tell minimiser over a box. The first min(8, budget) proposals are a
// Latin hypercube; after that, GpExpectedImprovement fits a Matern-5/2
// Gaussian process to the observations (inputs scaled to [0,1]^k, outputs
// standardised) and returns the best expected-improvement candidate.
// Non-finite observations count as the worst finite value seen so far.
class SequentialMinimizer {
 public:
  SequentialMinimizer(Eigen::VectorXd lower, Eigen::VectorXd upper, int budget, std::uint64_t seed,
                      ProposalStrategy strategy = ProposalStrategy::GpExpectedImprovement);

  Eigen::VectorXd ask();
  void tell(const Eigen::VectorXd& x, double value);

  int dimension() const { return static_cast<int>(lower_.size()); }
  int observed() const { return static_cast<int>(values_.size()); }
  // Index of the best finite observation, or -1.
  int incumbent() const;
  const std::vector<Eigen::VectorXd>& points() const { return points_; }
  const std::vector<double>& values() const { return values_; }

  static constexpr int kInitialDesign = 8;
  static constexpr int kRandomCandidates = 1024;
  static constexpr int kLocalCandidates = 256;

 private:
  Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const;
  Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const;
  Eigen::VectorXd propose_gp();

  Eigen::VectorXd lower_, upper_;
  int budget_;
  ProposalStrategy strategy_;
  Rng rng_;
  std::vector<Eigen::VectorXd> design_;  // unit-cube points still to hand out
  std::vector<Eigen::VectorXd> points_;
  std::vector<double> values_;
};

// n points in [0,1]^k, one per stratum along every axis.
Eigen::MatrixXd latin_hypercube(int n, int k, Rng& rng);

namespace gp {

double matern52(double r, double length_scale);

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

// Zero-mean GP on standardised targets. Chooses the length scale from a small
// grid by log marginal likelihood.
class Regressor {
 public:
  Regressor(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double noise = 1e-6);
  Posterior predict(const Eigen::MatrixXd& x) const;
  double length_scale() const { return length_scale_; }
  double log_marginal_likelihood() const { return log_ml_; }

 private:
  Eigen::MatrixXd x_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd weights_;
  double length_scale_ = 0.0;
  double log_ml_ = 0.0;
  double y_mean_ = 0.0, y_scale_ = 1.0;
};

// EI for minimisation at mean mu and stddev sigma below the incumbent best.
double expected_improvement(double mu, double sigma, double best, double xi = 0.0);

}  // namespace gp

}  // namespace qftk
