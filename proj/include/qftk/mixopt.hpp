#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qftk/bayesopt.hpp"
#include "qftk/gram.hpp"

namespace qftk {

// Classical: softmax of latent values in [-4,4]^k, jitter on the mixed train
// matrix. Quantum: raw values in [0,1]^k renormalised, no jitter.
enum class Branch { Classical, Quantum };

const char* to_string(Branch b);

struct MixtureWeights {
  Eigen::VectorXd weights;
  Branch branch = Branch::Classical;
  bool degenerate = false;  // all-zero raw proposal replaced by uniform
};

constexpr double kLatentBound = 4.0;

MixtureWeights softmax_weights(const Eigen::VectorXd& latent);
MixtureWeights renormalize_weights(const Eigen::VectorXd& raw);

KernelMatrix mix_kernels(const std::vector<KernelMatrix>& mats, const MixtureWeights& w);

// 1e-6 * trace(K)/n
double jitter_epsilon(const Eigen::MatrixXd& k);
KernelMatrix add_jitter(const KernelMatrix& k);

// 100 log-spaced values on [1e-6, 1e3].
std::vector<double> default_alpha_grid();
std::vector<double> log_grid(double lo, double hi, int count);

struct AlphaSearchResult {
  double lambda = 0.0;
  double val_r2 = 0.0;
  int failed_points = 0;
};

// Scans the grid for the ridge value with the best validation R^2 score.
// Ties go to the larger lambda; points whose solve fails score -inf.
AlphaSearchResult inner_alpha_search(const KernelMatrix& k_train, const KernelMatrix& k_val,
                                     const Eigen::VectorXd& y_train, const Eigen::VectorXd& y_val,
                                     const std::vector<double>& grid);

struct OptimizationBudget {
  int outer_calls = 20;
  std::vector<double> alpha_grid = default_alpha_grid();
  std::uint64_t seed = 0;
  ProposalStrategy strategy = ProposalStrategy::GpExpectedImprovement;

  void validate() const;
};

struct TraceEntry {
  int call_index = 0;
  Eigen::VectorXd weights;
  double lambda = 0.0;
  double val_r2 = 0.0;  // -inf when every grid point failed
  double elapsed_ms = 0.0;
};

struct MixtureResult {
  MixtureWeights weights;
  double lambda = 0.0;
  double val_r2 = 0.0;
  std::vector<TraceEntry> trace;
};

// Mixes, jitters on the classical branch, then runs the alpha scan.
AlphaSearchResult evaluate_weights(const std::vector<KernelMatrix>& train, const std::vector<KernelMatrix>& val,
                                   const Eigen::VectorXd& y_train, const Eigen::VectorXd& y_val,
                                   const MixtureWeights& w, const std::vector<double>& grid);

MixtureResult optimize_mixture(const std::vector<KernelMatrix>& train, const std::vector<KernelMatrix>& val,
                               const Eigen::VectorXd& y_train, const Eigen::VectorXd& y_val, Branch branch,
                               const OptimizationBudget& budget);

// One JSON object per line. Timing is left out when include_timing is false.
std::string trace_to_jsonl(const std::vector<TraceEntry>& trace, bool include_timing = true);

}  // namespace qftk
