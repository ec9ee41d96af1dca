#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qftk/qsim.hpp"

namespace qftk {

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;      // largest observed deviation (or failing count)
  double tolerance = 0.0;
  std::size_t cases = 0;
  double seconds = 0.0;
  std::string detail;
};

// Rotation convention with the RY angle negated. Used to check that the
// oracle suite notices a wrong gate convention.
template <typename Scalar>
struct FlippedRyRotations {
  static Matrix2c<Scalar> matrix(GateKind kind, Scalar angle) {
    return StandardRotations<Scalar>::matrix(kind, kind == GateKind::RY ? -angle : angle);
  }
};

struct VerifyOptions {
  int max_qubits = 5;
  int pairs = 200;
  std::uint64_t seed = 20240607;
  bool corrupt_gate_convention = false;  // circuit path only
};

// |circuit - trace formula| over random unit window pairs.
CheckResult check_circuit_vs_trace(int n_qubits, int pairs, std::uint64_t seed, bool corrupt = false);
// sigma rebuilt from the omega basis vs the direct outer product, plus the
// resulting kernel against the trace formula.
CheckResult check_omega_identity(int n_qubits, int pairs, std::uint64_t seed);
// Without the protective layer the kernel is the squared overlap.
CheckResult check_cancellation(int n_qubits, int pairs, std::uint64_t seed);
// Norm preservation of QFT, its inverse and the protective layer.
CheckResult check_unitarity(int max_qubits, int trials, std::uint64_t seed);
// k(x,x) = 1, symmetry, and min eigenvalue of a seeded Gram.
CheckResult check_kernel_validity(int n_qubits, int size, std::uint64_t seed);
// Windowing is leak free and every adversarial boundary shift is flagged.
CheckResult check_leakage(int trials, std::uint64_t seed);

std::vector<CheckResult> run_verification(const VerifyOptions& options);
std::string format_results(const std::vector<CheckResult>& results);

}  // namespace qftk
