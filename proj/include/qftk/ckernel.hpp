#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "qftk/errors.hpp"

namespace qftk {

enum class ClassicalKind { RBF, Poly };

template <typename Scalar = double>
struct ClassicalKernelParams {
  ClassicalKind kind = ClassicalKind::RBF;
  Scalar gamma = Scalar(1);
  Scalar offset_r = Scalar(1);
  int degree_d = 3;

  // gamma = 1/W, r = 1, d = 3
  static ClassicalKernelParams defaults(ClassicalKind kind, Eigen::Index window_length) {
    ClassicalKernelParams p;
    p.kind = kind;
    p.gamma = Scalar(1) / static_cast<Scalar>(window_length);
    return p;
  }

  void validate() const {
    if (!(gamma > Scalar(0))) throw Error(ErrorCode::ConfigError, "kernel gamma must be positive");
    if (degree_d < 1) throw Error(ErrorCode::ConfigError, "polynomial degree must be >= 1");
  }
};

// exp(-gamma ||x - y||^2)
template <typename DerivedX, typename DerivedY, typename Scalar = typename DerivedX::Scalar>
Scalar rbf_kernel(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y, const ClassicalKernelParams<Scalar>& params) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "rbf inputs differ in length");
  return std::exp(-params.gamma * (x - y).squaredNorm());
}

// (gamma <x, y> + r)^d
template <typename DerivedX, typename DerivedY, typename Scalar = typename DerivedX::Scalar>
Scalar poly_kernel(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y, const ClassicalKernelParams<Scalar>& params) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "poly inputs differ in length");
  return std::pow(params.gamma * x.dot(y) + params.offset_r, params.degree_d);
}

template <typename DerivedX, typename DerivedY, typename Scalar = typename DerivedX::Scalar>
Scalar classical_kernel(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y, const ClassicalKernelParams<Scalar>& params) {
  return params.kind == ClassicalKind::RBF ? rbf_kernel(x, y, params) : poly_kernel(x, y, params);
}

}  // namespace qftk
