#include "qftk/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "qftk/gram.hpp"
#include "qftk/pipeline.hpp"
#include "qftk/qkernel.hpp"
#include "qftk/rng.hpp"

namespace qftk {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

CheckResult finish(CheckResult r, Clock::time_point t0) {
  r.seconds = seconds_since(t0);
  r.passed = r.worst < r.tolerance;
  return r;
}

CheckResult start(std::string name, double tolerance, std::size_t cases) {
  CheckResult r;
  r.name = std::move(name);
  r.tolerance = tolerance;
  r.cases = cases;
  return r;
}

std::string with_n(const char* base, int n) { return std::string(base) + " n=" + std::to_string(n); }

}  // namespace

CheckResult check_circuit_vs_trace(int n, int pairs, std::uint64_t seed, bool corrupt) {
  const auto t0 = Clock::now();
  CheckResult r = start(with_n("circuit vs trace", n), 1e-9, static_cast<std::size_t>(pairs));
  const auto layout = build_protective_layout(n);
  Rng rng(seed + static_cast<std::uint64_t>(n));
  for (int p = 0; p < pairs; ++p) {
    const Eigen::VectorXd x = rng.unit_vector(layout.dim());
    const Eigen::VectorXd y = rng.unit_vector(layout.dim());
    const double circuit = corrupt ? qft_kernel_value<double, FlippedRyRotations<double>>(x, y, layout)
                                   : qft_kernel_value<double>(x, y, layout);
    r.worst = std::max(r.worst, std::abs(circuit - trace_formula_kernel<double>(x, y, layout)));
  }
  return finish(r, t0);
}

CheckResult check_omega_identity(int n, int pairs, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r = start(with_n("omega expansion", n), 1e-10, static_cast<std::size_t>(pairs));
  const auto layout = build_protective_layout(n);
  Rng rng(seed + 100 + static_cast<std::uint64_t>(n));
  for (int p = 0; p < pairs; ++p) {
    const Eigen::VectorXd x = rng.unit_vector(layout.dim());
    const Eigen::VectorXd y = rng.unit_vector(layout.dim());
    const MatrixXc<double> direct = sigma_matrix<double>(x, y);
    const MatrixXc<double> rebuilt = sigma_from_omega<double>(x, y);
    r.worst = std::max(r.worst, (direct - rebuilt).cwiseAbs().maxCoeff());
    r.worst = std::max(r.worst, std::abs(omega_expansion_kernel<double>(x, y, layout) - trace_formula_kernel<double>(x, y, layout)));
  }
  return finish(r, t0);
}

CheckResult check_cancellation(int n, int pairs, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r = start(with_n("cancellation without V", n), 1e-10, static_cast<std::size_t>(pairs));
  const auto layout = identity_layout(n);
  Rng rng(seed + 200 + static_cast<std::uint64_t>(n));
  for (int p = 0; p < pairs; ++p) {
    const Eigen::VectorXd x = rng.unit_vector(layout.dim());
    const Eigen::VectorXd y = rng.unit_vector(layout.dim());
    const double overlap = x.dot(y);
    r.worst = std::max(r.worst, std::abs(qft_kernel_value<double>(x, y, layout) - overlap * overlap));
  }
  return finish(r, t0);
}

CheckResult check_unitarity(int max_qubits, int trials, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r = start("unitarity", 1e-12, 0);
  Rng rng(seed + 300);
  for (int n = 1; n <= max_qubits; ++n) {
    const auto layout = build_protective_layout(n);
    for (int t = 0; t < trials; ++t) {
      VectorXc<double> amps(layout.dim());
      for (Eigen::Index i = 0; i < amps.size(); ++i) amps(i) = {rng.normal(), rng.normal()};
      amps /= amps.norm();
      const Statevector<double> s(n, amps);
      const Eigen::VectorXd w = rng.unit_vector(layout.dim());
      const auto q = apply_qft(s);
      const auto back = apply_inverse_qft(q);
      const auto v = apply_protective_layer(q, layout, w, false);
      r.worst = std::max({r.worst, std::abs(q.norm() - 1.0), std::abs(v.norm() - 1.0),
                          (back.amplitudes() - amps).cwiseAbs().maxCoeff()});
      ++r.cases;
    }
  }
  return finish(r, t0);
}

CheckResult check_kernel_validity(int n, int size, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r = start(with_n("kernel validity", n), 1.0, static_cast<std::size_t>(size));
  const auto layout = build_protective_layout(n);
  Rng rng(seed + 400 + static_cast<std::uint64_t>(n));
  Eigen::MatrixXd windows(size, layout.dim());
  for (int i = 0; i < size; ++i) windows.row(i) = rng.unit_vector(layout.dim()).transpose();

  double self = 0.0, asym = 0.0;
  for (int i = 0; i < size; ++i) {
    const Eigen::VectorXd x = windows.row(i).transpose();
    self = std::max(self, std::abs(qft_kernel_value<double>(x, x, layout) - 1.0));
    const Eigen::VectorXd y = windows.row((i + 1) % size).transpose();
    asym = std::max(asym, std::abs(qft_kernel_value<double>(x, y, layout) - qft_kernel_value<double>(y, x, layout)));
  }
  const Eigen::MatrixXcd states = embed_windows(windows, layout);
  const Eigen::MatrixXd k = fidelity_gram(states, states, true);
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();

  char buf[160];
  std::snprintf(buf, sizeof buf, "self %.2e (tol 1e-10), symmetry %.2e (tol 1e-12), min eigenvalue %.3e (>= -1e-8)", self, asym,
                min_eig);
  r.detail = buf;
  r.seconds = seconds_since(t0);
  r.passed = self <= 1e-10 && asym <= 1e-12 && min_eig >= -1e-8;
  r.worst = std::max({self / 1e-10, asym / 1e-12, -min_eig / 1e-8});  // worst ratio to tolerance
  return r;
}

CheckResult check_leakage(int trials, std::uint64_t seed) {
  const auto t0 = Clock::now();
  CheckResult r = start("leakage", 0.5, static_cast<std::size_t>(trials));
  Rng rng(seed + 500);
  int missed = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const int w = 1 << (1 + rng.below(4));
    const int s = 1 + static_cast<int>(rng.below(4));
    const int h = 1 + static_cast<int>(rng.below(3));
    const Eigen::Index len = 10 * (w + h) + static_cast<Eigen::Index>(rng.below(200));
    StationSeries series;
    series.station_code = "LEAK";
    series.feature_names = {"x"};
    series.values.resize(len, 1);
    for (Eigen::Index i = 0; i < len; ++i) {
      series.values(i, 0) = rng.normal();
      series.timestamps.push_back(i);
    }
    SplitSpec spec{0.6, 0.2, 0.2};
    spec.window = w;
    spec.stride = s;
    spec.horizon = h;
    const auto windows = make_windows(series, "x", spec);
    if (!leak_free(windows)) {
      ++missed;
      continue;
    }
    auto tampered = windows;
    if (trial % 2 == 0) {
      const Eigen::Index touched = windows.train.start_indices.back() + w - 1 + h;
      tampered.val.start_indices.front() -=
          windows.val.start_indices.front() - touched + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(w)));
    } else {
      const Eigen::Index touched = windows.val.start_indices.back() + w - 1 + h;
      tampered.test.start_indices.front() -= windows.test.start_indices.front() - touched + static_cast<Eigen::Index>(rng.below(2));
    }
    if (leak_free(tampered)) ++missed;
  }
  r.worst = missed;
  r.detail = std::to_string(trials - missed) + "/" + std::to_string(trials) + " shifted boundaries caught";
  return finish(r, t0);
}

std::vector<CheckResult> run_verification(const VerifyOptions& o) {
  std::vector<CheckResult> out;
  for (int n = 1; n <= o.max_qubits; ++n) out.push_back(check_circuit_vs_trace(n, o.pairs, o.seed, o.corrupt_gate_convention));
  for (int n = 1; n <= std::min(3, o.max_qubits); ++n) out.push_back(check_omega_identity(n, 50, o.seed));
  for (int n = 1; n <= o.max_qubits; ++n) out.push_back(check_cancellation(n, 100, o.seed));
  out.push_back(check_unitarity(o.max_qubits, 200, o.seed));
  out.push_back(check_kernel_validity(std::min(5, o.max_qubits), 100, o.seed));
  out.push_back(check_leakage(1000, o.seed));
  return out;
}

std::string format_results(const std::vector<CheckResult>& results) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-28s %-6s %12s %10s %7s %8s\n", "suite", "status", "worst", "tolerance", "cases", "seconds");
  out += buf;
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%-28s %-6s %12.3e %10.1e %7zu %8.3f", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.worst,
                  r.tolerance, r.cases, r.seconds);
    out += buf;
    if (!r.detail.empty()) out += "  " + r.detail;
    out += '\n';
  }
  return out;
}

}  // namespace qftk
