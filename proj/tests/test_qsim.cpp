#include <cmath>
#include <complex>
#include <numbers>

#include <doctest.h>

#include "qftk/qsim.hpp"
#include "qftk/rng.hpp"

using namespace qftk;
using C = std::complex<double>;

namespace {

Statevector<double> basis(int n, Eigen::Index j) {
  Statevector<double>::Vector v = Statevector<double>::Vector::Zero(Eigen::Index{1} << n);
  v(j) = 1.0;
  return {n, v};
}

Statevector<double> random_state(Rng& rng, int n) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  Statevector<double>::Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = C(rng.normal(), rng.normal());
  return {n, v / v.norm()};
}

double max_abs_diff(const Statevector<double>::Vector& a, const Statevector<double>::Vector& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_SUITE("qsim") {

TEST_CASE("amplitude_encode copies amplitudes") {
  Eigen::Vector4d x(1, 0, 0, 0);
  auto s = amplitude_encode<double>(x, 2);
  CHECK(s[0] == C(1, 0));
  CHECK(std::abs(s.norm() - 1.0) < 1e-15);

  auto u = amplitude_encode<double>(Eigen::Vector4d(0.5, 0.5, 0.5, 0.5), 2);
  CHECK(std::abs(u.norm() - 1.0) < 1e-15);

  auto v = amplitude_encode<double>(Eigen::Vector4d(0.6, 0.8, 0, 0), 2);
  CHECK(v[0] == C(0.6, 0));
  CHECK(v[1] == C(0.8, 0));
  CHECK(v[2] == C(0, 0));
}

TEST_CASE("amplitude_encode rejects bad inputs") {
  try {
    amplitude_encode<double>(Eigen::Vector3d(1, 0, 0), 2);
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
  try {
    amplitude_encode<double>(Eigen::Vector4d(1, 1, 0, 0), 2);
    FAIL("expected NotNormalized");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotNormalized);
  }
}

TEST_CASE("qft on basis states") {
  auto e0 = apply_qft(basis(2, 0));
  for (Eigen::Index k = 0; k < 4; ++k) CHECK(std::abs(e0[k] - C(0.5, 0)) < 1e-15);

  auto e1 = apply_qft(basis(2, 1));
  const C expected[] = {C(0.5, 0), C(0, 0.5), C(-0.5, 0), C(0, -0.5)};
  for (Eigen::Index k = 0; k < 4; ++k) CHECK(std::abs(e1[k] - expected[k]) < 1e-15);

  for (int n = 1; n <= 5; ++n) {
    const Eigen::Index dim = Eigen::Index{1} << n;
    Statevector<double>::Vector u = Statevector<double>::Vector::Constant(dim, C(1.0 / std::sqrt(double(dim)), 0));
    auto out = apply_qft(Statevector<double>(n, u));
    CHECK(std::abs(out[0] - C(1, 0)) < 1e-12);
    for (Eigen::Index k = 1; k < dim; ++k) CHECK(std::abs(out[k]) < 1e-12);
  }
}

TEST_CASE("inverse qft examples") {
  Statevector<double>::Vector half = Statevector<double>::Vector::Constant(4, C(0.5, 0));
  auto back = apply_inverse_qft(Statevector<double>(2, half));
  CHECK(std::abs(back[0] - C(1, 0)) < 1e-15);
  auto fwd = apply_inverse_qft(basis(2, 0));
  for (Eigen::Index k = 0; k < 4; ++k) CHECK(std::abs(fwd[k] - C(0.5, 0)) < 1e-15);
}

TEST_CASE("qft columns match the dense DFT matrix") {
  for (int n = 1; n <= 5; ++n) {
    const Eigen::Index dim = Eigen::Index{1} << n;
    const auto f = reference::qft_matrix<double>(dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
      const auto col = apply_qft(basis(n, j)).amplitudes();
      CHECK(max_abs_diff(col, f.col(j)) < 1e-12);
    }
  }
}

TEST_CASE("qft round trip on random states") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 5;
    auto s = random_state(rng, n);
    auto back = apply_inverse_qft(apply_qft(s));
    CHECK(max_abs_diff(back.amplitudes(), s.amplitudes()) < 1e-10);
  }
}

TEST_CASE("rotation gate examples") {
  Rng rng(3);
  auto s = random_state(rng, 3);
  auto same = apply_gate(s, SingleQubitGate<double>{GateKind::RX, 0.0, 1});
  CHECK(max_abs_diff(same.amplitudes(), s.amplitudes()) < 1e-15);

  auto flipped = apply_gate(Statevector<double>(1), SingleQubitGate<double>{GateKind::RY, std::numbers::pi, 0});
  CHECK(std::abs(flipped[0]) < 1e-15);
  CHECK(std::abs(flipped[1] - C(1, 0)) < 1e-15);

  auto rx = apply_gate(Statevector<double>(1), SingleQubitGate<double>{GateKind::RX, std::numbers::pi / 2, 0});
  const double h = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(rx[0] - C(h, 0)) < 1e-15);
  CHECK(std::abs(rx[1] - C(0, -h)) < 1e-15);
}

TEST_CASE("gate target validation") {
  try {
    apply_gate(Statevector<double>(2), SingleQubitGate<double>{GateKind::RX, 0.1, 2});
    FAIL("expected TargetOutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TargetOutOfRange);
  }
}

TEST_CASE("rotation matrices are unitary") {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    for (GateKind kind : {GateKind::RX, GateKind::RY}) {
      const auto m = SingleQubitGate<double>{kind, rng.uniform(-10, 10), 0}.matrix();
      CHECK((m.adjoint() * m - Matrix2c<double>::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("fidelity with zero") {
  CHECK(fidelity_with_zero(basis(2, 0)) == 1.0);
  CHECK(fidelity_with_zero(basis(2, 1)) == 0.0);
  Statevector<double>::Vector half = Statevector<double>::Vector::Constant(4, C(0.5, 0));
  CHECK(std::abs(fidelity_with_zero(Statevector<double>(2, half)) - 0.25) < 1e-15);
}

TEST_CASE("unitarity property over random states and operations") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(5));
    auto s = random_state(rng, n);
    const int target = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const GateKind kind = rng.uniform() < 0.5 ? GateKind::RX : GateKind::RY;
    const double angle = rng.uniform(-2 * std::numbers::pi, 2 * std::numbers::pi);
    CHECK(std::abs(apply_qft(s).norm() - 1.0) < 1e-10);
    CHECK(std::abs(apply_inverse_qft(s).norm() - 1.0) < 1e-10);
    CHECK(std::abs(apply_gate(s, SingleQubitGate<double>{kind, angle, target}).norm() - 1.0) < 1e-10);
  }
}

TEST_CASE("gate application agrees with the dense Kronecker operator") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 5;
    auto s = random_state(rng, n);
    const int target = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const SingleQubitGate<double> gate{trial % 2 == 0 ? GateKind::RX : GateKind::RY, rng.uniform(-4, 4), target};
    const auto dense = reference::embed_single_qubit<double>(gate.matrix(), target, n);
    const Statevector<double>::Vector expected = dense * s.amplitudes();
    CHECK(max_abs_diff(apply_gate(s, gate).amplitudes(), expected) < 1e-12);
  }
}

TEST_CASE_TEMPLATE("single precision register behaves", T, float, double) {
  Statevector<T> s(3);
  auto out = apply_inverse_qft(apply_qft(s));
  CHECK(std::abs(out[0] - std::complex<T>(1)) < T(1e-5));
}

}  // TEST_SUITE
