#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <utility>

#include <Eigen/Dense>

namespace qftk {

enum class FftSign { Positive = +1, Negative = -1 };

// In-place iterative radix-2 transform:
//   out[k] = scale * sum_j in[j] * exp(sign * 2*pi*i*j*k / N)
// N must be a power of two.
template <typename Scalar>
void fft_radix2_inplace(Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>& data, FftSign sign, Scalar scale) {
  using Complex = std::complex<Scalar>;
  const auto n = static_cast<std::size_t>(data.size());
  if (n <= 1) {
    if (n == 1) data(0) *= scale;
    return;
  }
  const int bits = std::countr_zero(n);

  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = 0;
    for (int b = 0; b < bits; ++b) j |= ((i >> b) & 1u) << (bits - 1 - b);
    if (j > i) std::swap(data(static_cast<Eigen::Index>(i)), data(static_cast<Eigen::Index>(j)));
  }

  const Scalar sgn = static_cast<Scalar>(static_cast<int>(sign));
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      // Twiddles are evaluated directly rather than by recurrence to avoid drift.
      const Scalar angle = sgn * Scalar(2) * std::numbers::pi_v<Scalar> * static_cast<Scalar>(k) / static_cast<Scalar>(len);
      const Complex w(std::cos(angle), std::sin(angle));
      for (std::size_t start = 0; start < n; start += len) {
        const auto a = static_cast<Eigen::Index>(start + k);
        const auto b = static_cast<Eigen::Index>(start + k + half);
        const Complex t = w * data(b);
        data(b) = data(a) - t;
        data(a) += t;
      }
    }
  }
  if (scale != Scalar(1)) data *= scale;
}

}  // namespace qftk
