#include "qftk/mixopt.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "qftk/errors.hpp"
#include "qftk/krr.hpp"
#include "qftk/metrics.hpp"

namespace qftk {

const char* to_string(Branch b) { return b == Branch::Classical ? "classical" : "quantum"; }

MixtureWeights softmax_weights(const Eigen::VectorXd& latent) {
  if (latent.size() == 0) throw Error(ErrorCode::DimensionMismatch, "no latent values");
  if ((latent.array().abs() > kLatentBound).any() || !latent.allFinite())
    throw Error(ErrorCode::OutOfBox, "latent weights must lie in [-4, 4]");
  const Eigen::ArrayXd e = (latent.array() - latent.maxCoeff()).exp();
  return {(e / e.sum()).matrix(), Branch::Classical, false};
}

MixtureWeights renormalize_weights(const Eigen::VectorXd& raw) {
  if (raw.size() == 0) throw Error(ErrorCode::DimensionMismatch, "no raw weights");
  if ((raw.array() < 0.0).any() || (raw.array() > 1.0).any() || !raw.allFinite())
    throw Error(ErrorCode::OutOfBox, "raw weights must lie in [0, 1]");
  const double s = raw.sum();
  if (s <= 0.0)
    return {Eigen::VectorXd::Constant(raw.size(), 1.0 / static_cast<double>(raw.size())), Branch::Quantum, true};
  return {raw / s, Branch::Quantum, false};
}

KernelMatrix mix_kernels(const std::vector<KernelMatrix>& mats, const MixtureWeights& w) {
  if (mats.empty() || static_cast<Eigen::Index>(mats.size()) != w.weights.size())
    throw Error(ErrorCode::ShapeMismatch, "need one weight per kernel matrix");
  const auto& first = mats.front();
  for (const auto& m : mats) {
    if (m.kind != first.kind) throw Error(ErrorCode::KindMismatch, "mixing train and eval matrices");
    if (m.rows() != first.rows() || m.cols() != first.cols())
      throw Error(ErrorCode::ShapeMismatch, "kernel matrices differ in shape");
  }
  KernelMatrix out{Eigen::MatrixXd::Zero(first.rows(), first.cols()), first.kind, "mix"};
  for (std::size_t f = 0; f < mats.size(); ++f) out.values += w.weights(static_cast<Eigen::Index>(f)) * mats[f].values;
  return out;
}

double jitter_epsilon(const Eigen::MatrixXd& k) {
  if (k.rows() == 0) return 0.0;
  return 1e-6 * k.trace() / static_cast<double>(k.rows());
}

KernelMatrix add_jitter(const KernelMatrix& k) {
  if (k.rows() != k.cols()) throw Error(ErrorCode::ShapeMismatch, "jitter needs a square matrix");
  KernelMatrix out = k;
  out.values.diagonal().array() += jitter_epsilon(k.values);
  return out;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 1) throw Error(ErrorCode::ConfigError, "invalid log grid");
  std::vector<double> g(static_cast<std::size_t>(count));
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
  return g;
}

std::vector<double> default_alpha_grid() { return log_grid(1e-6, 1e3, 100); }

void OptimizationBudget::validate() const {
  if (outer_calls < 1) throw Error(ErrorCode::ConfigError, "outer_calls must be at least 1");
  if (alpha_grid.empty()) throw Error(ErrorCode::ConfigError, "alpha grid is empty");
  for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
    if (!(alpha_grid[i] > 0.0)) throw Error(ErrorCode::ConfigError, "alpha grid must be positive");
    if (i > 0 && !(alpha_grid[i] > alpha_grid[i - 1]))
      throw Error(ErrorCode::ConfigError, "alpha grid must be strictly increasing");
  }
}

AlphaSearchResult inner_alpha_search(const KernelMatrix& k_train, const KernelMatrix& k_val,
                                     const Eigen::VectorXd& y_train, const Eigen::VectorXd& y_val,
                                     const std::vector<double>& grid) {
  if (k_train.kind != MatrixKind::TrainTrain || k_val.kind != MatrixKind::EvalTrain)
    throw Error(ErrorCode::KindMismatch, "alpha search needs train_train and eval_train matrices");
  if (k_train.rows() != k_train.cols() || k_train.rows() != y_train.size() || k_val.cols() != k_train.cols() ||
      k_val.rows() != y_val.size())
    throw Error(ErrorCode::DimensionMismatch, "alpha search shapes are inconsistent");

  AlphaSearchResult best{0.0, -std::numeric_limits<double>::infinity(), 0};
  bool any = false;
  if (!k_train.values.allFinite() || !k_val.values.allFinite())
    throw Error(ErrorCode::AllFitsFailed, "kernel matrix has non-finite entries");
  const RidgePath path(k_train.values, y_train);
  const Eigen::MatrixXd projected = path.project(k_val.values);
  for (double lambda : grid) {
    double score = -std::numeric_limits<double>::infinity();
    if (path.solvable(lambda)) {
      const Eigen::VectorXd pred = path.predict_projected(projected, lambda);
      if (pred.allFinite()) score = r2_score(pred, y_val);
    }
    if (!std::isfinite(score)) {
      ++best.failed_points;
      continue;
    }
    if (!any || score >= best.val_r2) {
      best.lambda = lambda;
      best.val_r2 = score;
      any = true;
    }
  }
  if (!any) throw Error(ErrorCode::AllFitsFailed, "no ridge value produced a usable fit");
  return best;
}

AlphaSearchResult evaluate_weights(const std::vector<KernelMatrix>& train, const std::vector<KernelMatrix>& val,
                                   const Eigen::VectorXd& y_train, const Eigen::VectorXd& y_val,
                                   const MixtureWeights& w, const std::vector<double>& grid) {
  KernelMatrix kt = mix_kernels(train, w);
  if (w.branch == Branch::Classical) kt = add_jitter(kt);
  return inner_alpha_search(kt, mix_kernels(val, w), y_train, y_val, grid);
}

MixtureResult optimize_mixture(const std::vector<KernelMatrix>& train, const std::vector<KernelMatrix>& val,
                               const Eigen::VectorXd& y_train, const Eigen::VectorXd& y_val, Branch branch,
                               const OptimizationBudget& budget) {
  budget.validate();
  if (train.empty() || train.size() != val.size())
    throw Error(ErrorCode::ShapeMismatch, "need matching non-empty train and val kernel lists");
  const auto k = static_cast<Eigen::Index>(train.size());
  using Clock = std::chrono::steady_clock;

  MixtureResult result;
  result.val_r2 = -std::numeric_limits<double>::infinity();
  bool found = false;

  auto evaluate = [&](int call, const MixtureWeights& w) {
    const auto t0 = Clock::now();
    TraceEntry entry{call, w.weights, 0.0, -std::numeric_limits<double>::infinity(), 0.0};
    try {
      const auto r = evaluate_weights(train, val, y_train, y_val, w, budget.alpha_grid);
      entry.lambda = r.lambda;
      entry.val_r2 = r.val_r2;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AllFitsFailed) throw;
    }
    entry.elapsed_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    if (std::isfinite(entry.val_r2) && (!found || entry.val_r2 > result.val_r2)) {
      found = true;
      result.weights = w;
      result.lambda = entry.lambda;
      result.val_r2 = entry.val_r2;
    }
    result.trace.push_back(entry);
    return entry.val_r2;
  };

  if (k == 1) {
    MixtureWeights w{Eigen::VectorXd::Ones(1), branch, false};
    evaluate(0, w);
  } else {
    const double lo = branch == Branch::Classical ? -kLatentBound : 0.0;
    const double hi = branch == Branch::Classical ? kLatentBound : 1.0;
    SequentialMinimizer opt(Eigen::VectorXd::Constant(k, lo), Eigen::VectorXd::Constant(k, hi), budget.outer_calls,
                            budget.seed, budget.strategy);
    for (int call = 0; call < budget.outer_calls; ++call) {
      const Eigen::VectorXd x = opt.ask();
      const MixtureWeights w = branch == Branch::Classical ? softmax_weights(x) : renormalize_weights(x);
      const double r2 = evaluate(call, w);
      opt.tell(x, std::isfinite(r2) ? -r2 : std::numeric_limits<double>::infinity());
    }
  }
  if (!found) throw Error(ErrorCode::AllFitsFailed, "every mixture proposal failed");
  return result;
}

std::string trace_to_jsonl(const std::vector<TraceEntry>& trace, bool include_timing) {
  std::string out;
  for (const auto& e : trace) {
    nlohmann::ordered_json j;
    j["call_index"] = e.call_index;
    j["weights"] = std::vector<double>(e.weights.data(), e.weights.data() + e.weights.size());
    j["lambda"] = e.lambda;
    j["val_r2"] = std::isfinite(e.val_r2) ? nlohmann::ordered_json(e.val_r2) : nlohmann::ordered_json(nullptr);
    if (include_timing) j["elapsed_ms"] = e.elapsed_ms;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace qftk
