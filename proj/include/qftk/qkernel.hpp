#pragma once

// QFT-based fidelity kernel:
//   k(x, y) = |<0| A^dag(x) QFT^dag V^dag(x) V(y) QFT A(y) |0>|^2
// where A is amplitude encoding and V is a data-dependent layer of
// alternating RX/RY rotations that stops QFT and QFT^dag from cancelling.
//
// Besides the circuit simulation this header carries two closed forms that
// never touch the simulator: the sigma/R trace contraction and its
// Omega-matrix expansion. They exist to cross-check the circuit path.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qftk/errors.hpp"
#include "qftk/qsim.hpp"

namespace qftk {

struct ProtectiveLayout {
  int n_qubits = 0;
  int a = 0;  // gates per qubit on wires 0..n-2
  int b = 0;  // extra gates on the last wire
  std::vector<std::vector<GateKind>> per_qubit_gates;
  // Half-open, 0-based index range of window entries feeding each wire.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> param_slices;

  Eigen::Index dim() const { return Eigen::Index{1} << n_qubits; }
};

// 2^n = a*n + b with 0 <= b < n. Wires 0..n-2 carry a gates, the last wire
// a+b; every sequence alternates RX, RY, RX, ... and consumes consecutive
// window entries top wire first.
inline ProtectiveLayout build_protective_layout(int n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    throw Error(ErrorCode::LengthMismatch, "qubit count out of range: " + std::to_string(n_qubits));
  }
  ProtectiveLayout layout;
  layout.n_qubits = n_qubits;
  const long long total = 1LL << n_qubits;
  layout.a = static_cast<int>(total / n_qubits);
  layout.b = static_cast<int>(total % n_qubits);
  Eigen::Index cursor = 0;
  for (int q = 0; q < n_qubits; ++q) {
    const int count = q + 1 < n_qubits ? layout.a : layout.a + layout.b;
    std::vector<GateKind> seq(static_cast<std::size_t>(count));
    for (int r = 0; r < count; ++r) seq[static_cast<std::size_t>(r)] = r % 2 == 0 ? GateKind::RX : GateKind::RY;
    layout.per_qubit_gates.push_back(std::move(seq));
    layout.param_slices.emplace_back(cursor, cursor + count);
    cursor += count;
  }
  return layout;
}

// Ablation helper: a layout with no gates, i.e. V = I.
inline ProtectiveLayout identity_layout(int n_qubits) {
  ProtectiveLayout layout;
  layout.n_qubits = n_qubits;
  layout.per_qubit_gates.assign(static_cast<std::size_t>(n_qubits), {});
  layout.param_slices.assign(static_cast<std::size_t>(n_qubits), {0, 0});
  return layout;
}

template <typename Scalar = double>
struct WindowVector {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::string feature_id;
  Vector values;
  long start_index = 0;
};

template <typename Scalar>
WindowVector<Scalar> make_window_vector(std::string feature_id, typename WindowVector<Scalar>::Vector values, long start_index) {
  const auto n = values.size();
  if (n < 2 || (n & (n - 1)) != 0) throw Error(ErrorCode::LengthMismatch, "window length must be a power of two");
  if (std::abs(values.norm() - Scalar(1)) > Scalar(1e-8)) throw Error(ErrorCode::NotNormalized, "window is not unit norm");
  return {std::move(feature_id), std::move(values), start_index};
}

namespace detail {

template <typename Derived>
void check_layout_input(const ProtectiveLayout& layout, int n_qubits, const Eigen::MatrixBase<Derived>& w) {
  if (layout.n_qubits != n_qubits) {
    throw Error(ErrorCode::LengthMismatch, "layout is for " + std::to_string(layout.n_qubits) + " qubits, state has " +
                                               std::to_string(n_qubits));
  }
  if (w.size() != layout.dim()) {
    throw Error(ErrorCode::LengthMismatch, "protective layer needs " + std::to_string(layout.dim()) + " angles, got " +
                                               std::to_string(w.size()));
  }
}

// Ordered product G_last ... G_first of the rotations on one wire.
template <typename Scalar, typename Rotations, typename Derived>
Matrix2c<Scalar> wire_product(const ProtectiveLayout& layout, int wire, const Eigen::MatrixBase<Derived>& w) {
  Matrix2c<Scalar> p = Matrix2c<Scalar>::Identity();
  const auto& seq = layout.per_qubit_gates[static_cast<std::size_t>(wire)];
  const Eigen::Index first = layout.param_slices[static_cast<std::size_t>(wire)].first;
  for (std::size_t r = 0; r < seq.size(); ++r) {
    p = Rotations::matrix(seq[r], static_cast<Scalar>(w(first + static_cast<Eigen::Index>(r)))) * p;
  }
  return p;
}

}  // namespace detail

// V(w), or V^dag(w) when `adjoint` is set (reversed order, negated angles).
template <typename Scalar, typename Rotations = StandardRotations<Scalar>, typename Derived>
Statevector<Scalar> apply_protective_layer(Statevector<Scalar> state, const ProtectiveLayout& layout, const Eigen::MatrixBase<Derived>& w,
                                           bool adjoint) {
  detail::check_layout_input(layout, state.n_qubits(), w);
  const int n = layout.n_qubits;
  if (!adjoint) {
    for (int q = 0; q < n; ++q) {
      const auto& seq = layout.per_qubit_gates[static_cast<std::size_t>(q)];
      const Eigen::Index first = layout.param_slices[static_cast<std::size_t>(q)].first;
      for (std::size_t r = 0; r < seq.size(); ++r) {
        apply_matrix_inplace(state, Rotations::matrix(seq[r], static_cast<Scalar>(w(first + static_cast<Eigen::Index>(r)))), q);
      }
    }
  } else {
    for (int q = n - 1; q >= 0; --q) {
      const auto& seq = layout.per_qubit_gates[static_cast<std::size_t>(q)];
      const Eigen::Index first = layout.param_slices[static_cast<std::size_t>(q)].first;
      for (std::size_t r = seq.size(); r-- > 0;) {
        apply_matrix_inplace(state, Rotations::matrix(seq[r], -static_cast<Scalar>(w(first + static_cast<Eigen::Index>(r)))), q);
      }
    }
  }
  return state;
}

// A^dag(x) for the real amplitude-encoding unitary A(x) realised as a
// Householder reflection with A|0> = |x>. A is real symmetric, so A^dag = A.
template <typename Scalar, typename Derived>
Statevector<Scalar> apply_amplitude_adjoint(Statevector<Scalar> state, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != state.dim()) throw Error(ErrorCode::LengthMismatch, "encoding vector does not match register size");
  using Complex = std::complex<Scalar>;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> u = x.template cast<Scalar>();
  const bool flip = u(0) > Scalar(0);
  u(0) += flip ? Scalar(1) : Scalar(-1);
  const Scalar uu = u.squaredNorm();
  auto& amps = state.amplitudes();
  if (uu > Scalar(0)) {
    const Complex proj = (u.template cast<Complex>().transpose() * amps)(0) * (Scalar(2) / uu);
    amps -= proj * u.template cast<Complex>();
  }
  if (flip) amps = -amps;
  return state;
}

// V(x) QFT A(x) |0>: the embedded state whose overlaps define the kernel.
template <typename Scalar, typename Rotations = StandardRotations<Scalar>, typename Derived>
Statevector<Scalar> embedding_state(const Eigen::MatrixBase<Derived>& x, const ProtectiveLayout& layout) {
  auto state = amplitude_encode<Scalar>(x, layout.n_qubits);
  state = apply_qft(std::move(state));
  return apply_protective_layer<Scalar, Rotations>(std::move(state), layout, x, false);
}

// Simulates U(y) forward, then U^dag(x), and reads the all-zeros probability.
template <typename Scalar, typename Rotations = StandardRotations<Scalar>, typename DerivedX, typename DerivedY>
Scalar qft_kernel_value(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y, const ProtectiveLayout& layout) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "windows differ in length");
  auto state = embedding_state<Scalar, Rotations>(y, layout);
  state = apply_protective_layer<Scalar, Rotations>(std::move(state), layout, x, true);
  state = apply_inverse_qft(std::move(state));
  state = apply_amplitude_adjoint(std::move(state), x);
  return std::clamp(fidelity_with_zero(state), Scalar(0), Scalar(1));
}

// ---------------------------------------------------------------------------
// Closed-form route.

// Direct O(N^2) sum: c_k = 1/sqrt(N) sum_v w_v exp(sign * 2 pi i v k / N).
template <typename Scalar, typename Derived>
VectorXc<Scalar> fourier_coefficients(const Eigen::MatrixBase<Derived>& w, int sign) {
  const Eigen::Index n = w.size();
  VectorXc<Scalar> out(n);
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    std::complex<Scalar> acc(0);
    for (Eigen::Index v = 0; v < n; ++v) {
      const Scalar angle = Scalar(sign) * Scalar(2) * std::numbers::pi_v<Scalar> * static_cast<Scalar>((v * k) % n) / static_cast<Scalar>(n);
      acc += static_cast<Scalar>(w(v)) * std::polar(Scalar(1), angle);
    }
    out(k) = scale * acc;
  }
  return out;
}

// sigma_pk = ytilde_p(x) * y_k(y) with ytilde using the negative exponent.
template <typename Scalar, typename DerivedX, typename DerivedY>
MatrixXc<Scalar> sigma_matrix(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  const VectorXc<Scalar> yt = fourier_coefficients<Scalar>(x, -1);
  const VectorXc<Scalar> yk = fourier_coefficients<Scalar>(y, +1);
  return yt * yk.transpose();
}

// R = V^dag(x) V(y) as the Kronecker product over wires of (P_x)^dag P_y,
// P being the ordered rotation product on that wire.
template <typename Scalar, typename Rotations = StandardRotations<Scalar>, typename DerivedX, typename DerivedY>
MatrixXc<Scalar> rotation_product(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y, const ProtectiveLayout& layout) {
  detail::check_layout_input(layout, layout.n_qubits, x);
  detail::check_layout_input(layout, layout.n_qubits, y);
  MatrixXc<Scalar> r = MatrixXc<Scalar>::Identity(1, 1);
  for (int q = 0; q < layout.n_qubits; ++q) {
    const Matrix2c<Scalar> px = detail::wire_product<Scalar, Rotations>(layout, q, x);
    const Matrix2c<Scalar> py = detail::wire_product<Scalar, Rotations>(layout, q, y);
    r = reference::kron<Scalar>(r, MatrixXc<Scalar>(px.adjoint() * py));
  }
  return r;
}

// |sum_pk sigma_pk R_pk|^2, the elementwise contraction <p|R|k> weighted by sigma_pk.
template <typename Scalar>
Scalar contract_sigma_rotation(const MatrixXc<Scalar>& sigma, const MatrixXc<Scalar>& r) {
  return std::norm(sigma.cwiseProduct(r).sum());
}

template <typename Scalar, typename Rotations = StandardRotations<Scalar>, typename DerivedX, typename DerivedY>
Scalar trace_formula_kernel(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y, const ProtectiveLayout& layout) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "windows differ in length");
  const auto sigma = sigma_matrix<Scalar>(x, y);
  const auto r = rotation_product<Scalar, Rotations>(x, y, layout);
  return std::clamp(contract_sigma_rotation(sigma, r), Scalar(0), Scalar(1));
}

// Omega^{(l,v)}_{pk} = w^{vk - lp}, w = exp(2 pi i / N).
template <typename Scalar = double>
MatrixXc<Scalar> omega_matrix(Eigen::Index l, Eigen::Index v, Eigen::Index dim) {
  if (dim < 1 || l < 0 || v < 0 || l >= dim || v >= dim) {
    throw Error(ErrorCode::IndexOutOfRange, "omega index (" + std::to_string(l) + "," + std::to_string(v) + ") outside dimension " +
                                                std::to_string(dim));
  }
  MatrixXc<Scalar> m(dim, dim);
  for (Eigen::Index p = 0; p < dim; ++p)
    for (Eigen::Index k = 0; k < dim; ++k) {
      const Eigen::Index e = (((v * k - l * p) % dim) + dim) % dim;
      m(p, k) = std::polar(Scalar(1), Scalar(2) * std::numbers::pi_v<Scalar> * static_cast<Scalar>(e) / static_cast<Scalar>(dim));
    }
  return m;
}

// sigma = 1/N sum_{l,v} x_l y_v Omega^{(l,v)}
template <typename Scalar, typename DerivedX, typename DerivedY>
MatrixXc<Scalar> sigma_from_omega(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  const Eigen::Index n = x.size();
  MatrixXc<Scalar> sigma = MatrixXc<Scalar>::Zero(n, n);
  for (Eigen::Index l = 0; l < n; ++l)
    for (Eigen::Index v = 0; v < n; ++v) {
      const Scalar beta = static_cast<Scalar>(x(l)) * static_cast<Scalar>(y(v));
      if (beta != Scalar(0)) sigma += beta * omega_matrix<Scalar>(l, v, n);
    }
  return sigma / static_cast<Scalar>(n);
}

// |1/N sum_{l,v} beta_lv <Omega^{(l,v)}, R>|^2 with beta_lv = x_l y_v.
template <typename Scalar, typename Rotations = StandardRotations<Scalar>, typename DerivedX, typename DerivedY>
Scalar omega_expansion_kernel(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y, const ProtectiveLayout& layout) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "windows differ in length");
  const Eigen::Index n = x.size();
  const auto r = rotation_product<Scalar, Rotations>(x, y, layout);
  std::complex<Scalar> acc(0);
  for (Eigen::Index l = 0; l < n; ++l)
    for (Eigen::Index v = 0; v < n; ++v) {
      acc += static_cast<Scalar>(x(l)) * static_cast<Scalar>(y(v)) * omega_matrix<Scalar>(l, v, n).cwiseProduct(r).sum();
    }
  return std::clamp(std::norm(acc / static_cast<Scalar>(n)), Scalar(0), Scalar(1));
}

}  // namespace qftk
