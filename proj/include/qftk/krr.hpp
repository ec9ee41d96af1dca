#pragma once

#include <filesystem>

#include <Eigen/Dense>

#include "qftk/gram.hpp"

namespace qftk {

struct KrrModel {
  Eigen::VectorXd dual_coefficients;
  double ridge_lambda = 0.0;
  Eigen::VectorXd training_targets;
  double applied_jitter = 0.0;  // extra diagonal added after a failed factorisation
  double residual_norm = 0.0;   // ||(K + lambda I) alpha - y||
};

// Solves (K + lambda I) alpha = y with a symmetric LDL^T factorisation. If
// the factorisation is not positive definite the diagonal is escalated by
// 1e-12, 1e-10, 1e-8 times trace(K)/n before giving up.
KrrModel krr_fit(const KernelMatrix& k, const Eigen::VectorXd& y, double lambda);

// K_hat * alpha
Eigen::VectorXd krr_predict(const KrrModel& model, const KernelMatrix& k_hat);

// Eigendecomposition of a train Gram matrix, reused across many ridge values:
// alpha(lambda) = Q (D + shift + lambda)^-1 Q^T y.
class RidgePath {
 public:
  RidgePath(const Eigen::MatrixXd& k_train, const Eigen::VectorXd& y, double diagonal_shift = 0.0);

  bool solvable(double lambda) const;
  Eigen::VectorXd dual_coefficients(double lambda) const;
  // Maps an eval-train Gram matrix into the eigenbasis once.
  Eigen::MatrixXd project(const Eigen::MatrixXd& k_eval) const { return k_eval * eigenvectors_; }
  Eigen::VectorXd predict_projected(const Eigen::MatrixXd& projected, double lambda) const;

  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }

 private:
  Eigen::MatrixXd eigenvectors_;
  Eigen::VectorXd eigenvalues_;  // includes the diagonal shift
  Eigen::VectorXd projected_targets_;
};

// Kernel-matrix cache file: "QKRN", u32 version = 1, u8 kind, u64 rows,
// u64 cols, then row-major little-endian f64 values.
void write_kernel_cache(const std::filesystem::path& path, const KernelMatrix& k);
KernelMatrix read_kernel_cache(const std::filesystem::path& path);

}  // namespace qftk
