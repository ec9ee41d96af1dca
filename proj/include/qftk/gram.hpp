#pragma once

// Gram-matrix assembly. Rows are split across worker threads; every entry
// is computed independently with a fixed summation order, so the result
// does not depend on the worker count.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "qftk/ckernel.hpp"
#include "qftk/qkernel.hpp"

namespace qftk {

enum class MatrixKind : std::uint8_t { TrainTrain = 0, EvalTrain = 1 };

struct KernelMatrix {
  Eigen::MatrixXd values;
  MatrixKind kind = MatrixKind::TrainTrain;
  std::string source;  // "<kernel>:<feature>"

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

// Runs body(row) for every row in [0, rows) on `jobs` threads.
template <typename Body>
void parallel_rows(Eigen::Index rows, int jobs, Body&& body) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || rows < 2) {
    for (Eigen::Index i = 0; i < rows; ++i) body(i);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(static_cast<std::size_t>(jobs));
  for (int t = 0; t < jobs; ++t) {
    workers.emplace_back([&, t] {
      for (Eigen::Index i = t; i < rows; i += jobs) body(i);
    });
  }
}

// Row i holds V(x_i) QFT A(x_i)|0> for window row i of `windows`.
inline Eigen::MatrixXcd embed_windows(const Eigen::MatrixXd& windows, const ProtectiveLayout& layout, int jobs = 1) {
  Eigen::MatrixXcd states(windows.rows(), layout.dim());
  parallel_rows(windows.rows(), jobs, [&](Eigen::Index i) {
    const Eigen::VectorXd w = windows.row(i).transpose();
    states.row(i) = embedding_state<double>(w, layout).amplitudes().transpose();
  });
  return states;
}

// K_ij = |<phi(eval_i)|phi(train_j)>|^2 from precomputed embedding states.
inline Eigen::MatrixXd fidelity_gram(const Eigen::MatrixXcd& eval_states, const Eigen::MatrixXcd& train_states, bool symmetric, int jobs = 1) {
  const Eigen::Index rows = eval_states.rows();
  const Eigen::Index cols = train_states.rows();
  const Eigen::Index dim = eval_states.cols();
  Eigen::MatrixXd k(rows, cols);
  parallel_rows(rows, jobs, [&](Eigen::Index i) {
    const Eigen::Index j0 = symmetric ? i : 0;
    for (Eigen::Index j = j0; j < cols; ++j) {
      std::complex<double> acc(0.0);
      for (Eigen::Index d = 0; d < dim; ++d) acc += std::conj(eval_states(i, d)) * train_states(j, d);
      k(i, j) = std::clamp(std::norm(acc), 0.0, 1.0);
    }
  });
  if (symmetric) k.triangularView<Eigen::StrictlyLower>() = k.transpose().triangularView<Eigen::StrictlyLower>();
  return k;
}

inline Eigen::MatrixXd classical_gram(const Eigen::MatrixXd& eval_windows, const Eigen::MatrixXd& train_windows,
                                      const ClassicalKernelParams<double>& params, bool symmetric, int jobs = 1) {
  Eigen::MatrixXd k(eval_windows.rows(), train_windows.rows());
  parallel_rows(eval_windows.rows(), jobs, [&](Eigen::Index i) {
    const Eigen::Index j0 = symmetric ? i : 0;
    for (Eigen::Index j = j0; j < train_windows.rows(); ++j) k(i, j) = classical_kernel(eval_windows.row(i), train_windows.row(j), params);
  });
  if (symmetric) k.triangularView<Eigen::StrictlyLower>() = k.transpose().triangularView<Eigen::StrictlyLower>();
  return k;
}

}  // namespace qftk
