#pragma once

// Noiseless statevector simulation for small registers: amplitude encoding,
// the quantum Fourier transform and single-qubit RX/RY rotations.
//
// Basis label i of amplitude i is read with qubit 0 as the most significant
// bit, so qubit 0 is the top wire of a circuit diagram.

#include <algorithm>
#include <cmath>
#include <limits>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "qftk/errors.hpp"
#include "qftk/fft.hpp"

namespace qftk {

inline constexpr int kMaxQubits = 24;

template <typename Scalar = double>
class Statevector {
 public:
  using Complex = std::complex<Scalar>;
  using Vector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;

  // |0...0> on n qubits.
  explicit Statevector(int n_qubits) : n_qubits_(checked_qubits(n_qubits)), amplitudes_(Vector::Zero(Eigen::Index{1} << n_qubits)) {
    amplitudes_(0) = Complex(1);
  }

  Statevector(int n_qubits, Vector amplitudes) : n_qubits_(checked_qubits(n_qubits)), amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() != (Eigen::Index{1} << n_qubits_)) {
      throw Error(ErrorCode::LengthMismatch, "statevector needs 2^" + std::to_string(n_qubits_) + " amplitudes, got " +
                                                 std::to_string(amplitudes_.size()));
    }
  }

  int n_qubits() const noexcept { return n_qubits_; }
  Eigen::Index dim() const noexcept { return amplitudes_.size(); }
  const Vector& amplitudes() const noexcept { return amplitudes_; }
  Vector& amplitudes() noexcept { return amplitudes_; }
  const Complex& operator[](Eigen::Index i) const { return amplitudes_(i); }

  Scalar norm() const { return amplitudes_.norm(); }

 private:
  static int checked_qubits(int n) {
    if (n < 1 || n > kMaxQubits) throw Error(ErrorCode::LengthMismatch, "qubit count out of range: " + std::to_string(n));
    return n;
  }

  int n_qubits_;
  Vector amplitudes_;
};

enum class GateKind : std::uint8_t { RX, RY };

inline std::string_view to_string(GateKind kind) { return kind == GateKind::RX ? "RX" : "RY"; }

template <typename Scalar = double>
using Matrix2c = Eigen::Matrix<std::complex<Scalar>, 2, 2>;
template <typename Scalar = double>
using VectorXc = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar = double>
using MatrixXc = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

// Half-angle convention:
//   RX(t) = [[cos t/2, -i sin t/2], [-i sin t/2, cos t/2]]
//   RY(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]]
template <typename Scalar>
struct StandardRotations {
  static Matrix2c<Scalar> matrix(GateKind kind, Scalar angle) {
    using C = std::complex<Scalar>;
    const Scalar c = std::cos(angle / 2);
    const Scalar s = std::sin(angle / 2);
    Matrix2c<Scalar> m;
    if (kind == GateKind::RX) {
      m << C(c, 0), C(0, -s), C(0, -s), C(c, 0);
    } else {
      m << C(c, 0), C(-s, 0), C(s, 0), C(c, 0);
    }
    return m;
  }
};

template <typename Scalar = double>
struct SingleQubitGate {
  GateKind kind;
  Scalar angle;
  int target;

  Matrix2c<Scalar> matrix() const { return StandardRotations<Scalar>::matrix(kind, angle); }
};

template <typename Scalar, typename Derived>
Statevector<Scalar> amplitude_encode(const Eigen::MatrixBase<Derived>& x, int n_qubits,
                                     Scalar norm_tolerance = std::max(Scalar(1e-8), Scalar(64) * std::numeric_limits<Scalar>::epsilon())) {
  const Eigen::Index expected = Eigen::Index{1} << n_qubits;
  if (x.size() != expected) {
    throw Error(ErrorCode::LengthMismatch, "amplitude encoding on " + std::to_string(n_qubits) + " qubits needs " +
                                               std::to_string(expected) + " values, got " + std::to_string(x.size()));
  }
  const Scalar norm = static_cast<Scalar>(x.norm());
  if (!(std::abs(norm - Scalar(1)) <= norm_tolerance)) {
    throw Error(ErrorCode::NotNormalized, "input norm " + std::to_string(norm) + " is not 1");
  }
  typename Statevector<Scalar>::Vector amps = x.template cast<Scalar>().template cast<std::complex<Scalar>>();
  return Statevector<Scalar>(n_qubits, std::move(amps));
}

// y_k = 1/sqrt(N) sum_j x_j exp(+2 pi i j k / N)
template <typename Scalar>
Statevector<Scalar> apply_qft(Statevector<Scalar> state) {
  fft_radix2_inplace<Scalar>(state.amplitudes(), FftSign::Positive, Scalar(1) / std::sqrt(static_cast<Scalar>(state.dim())));
  return state;
}

template <typename Scalar>
Statevector<Scalar> apply_inverse_qft(Statevector<Scalar> state) {
  fft_radix2_inplace<Scalar>(state.amplitudes(), FftSign::Negative, Scalar(1) / std::sqrt(static_cast<Scalar>(state.dim())));
  return state;
}

// Applies a 2x2 matrix to one wire of the register in place.
template <typename Scalar>
void apply_matrix_inplace(Statevector<Scalar>& state, const Matrix2c<Scalar>& m, int target) {
  if (target < 0 || target >= state.n_qubits()) {
    throw Error(ErrorCode::TargetOutOfRange,
                "target " + std::to_string(target) + " on a " + std::to_string(state.n_qubits()) + "-qubit register");
  }
  auto& amps = state.amplitudes();
  const Eigen::Index stride = Eigen::Index{1} << (state.n_qubits() - 1 - target);
  const Eigen::Index dim = state.dim();
  for (Eigen::Index base = 0; base < dim; base += 2 * stride) {
    for (Eigen::Index i = base; i < base + stride; ++i) {
      const auto a0 = amps(i);
      const auto a1 = amps(i + stride);
      amps(i) = m(0, 0) * a0 + m(0, 1) * a1;
      amps(i + stride) = m(1, 0) * a0 + m(1, 1) * a1;
    }
  }
}

template <typename Scalar>
Statevector<Scalar> apply_gate(Statevector<Scalar> state, const SingleQubitGate<Scalar>& gate) {
  apply_matrix_inplace(state, gate.matrix(), gate.target);
  return state;
}

template <typename Scalar>
Scalar fidelity_with_zero(const Statevector<Scalar>& state) {
  return std::norm(state[0]);
}

// Dense operators used as independent references in tests and `verify`.
namespace reference {

template <typename Scalar>
MatrixXc<Scalar> kron(const MatrixXc<Scalar>& a, const MatrixXc<Scalar>& b) {
  MatrixXc<Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// F[k][j] = w^{jk} / sqrt(N), w = exp(2 pi i / N)
template <typename Scalar = double>
MatrixXc<Scalar> qft_matrix(Eigen::Index dim) {
  MatrixXc<Scalar> f(dim, dim);
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dim));
  for (Eigen::Index k = 0; k < dim; ++k)
    for (Eigen::Index j = 0; j < dim; ++j) {
      const Scalar angle = Scalar(2) * std::numbers::pi_v<Scalar> * static_cast<Scalar>((j * k) % dim) / static_cast<Scalar>(dim);
      f(k, j) = std::polar(scale, angle);
    }
  return f;
}

// I (x) ... (x) m (x) ... (x) I with m on wire `target`; wire 0 is the leftmost factor.
template <typename Scalar>
MatrixXc<Scalar> embed_single_qubit(const Matrix2c<Scalar>& m, int target, int n_qubits) {
  MatrixXc<Scalar> out = MatrixXc<Scalar>::Identity(1, 1);
  for (int q = 0; q < n_qubits; ++q) {
    const MatrixXc<Scalar> factor = q == target ? MatrixXc<Scalar>(m) : MatrixXc<Scalar>::Identity(2, 2);
    out = kron<Scalar>(out, factor);
  }
  return out;
}

}  // namespace reference

}  // namespace qftk
