#pragma once

// Counter-based random streams.
//
// Output word c of stream (seed, stream) is
//     mix64(mix64(seed ^ mix64(stream + G)) + (c + 1) * G),    G = 0x9E3779B97F4A7C15,
// with mix64 the SplitMix64 finalizer. Trial t of a run with seed s always
// draws from stream (s, t), so trials never share or shift each other's inputs.
// This algorithm is part of the reproducibility contract of the CSV/JSON outputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "haarlab/linalg.hpp"

namespace haarlab {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  using result_type = std::uint64_t;
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix64(seed ^ mix64(stream + kGamma))), seed_(seed), stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (++counter_) * kGamma); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

  /// Independent child stream; used to give sub-objects their own sequence.
  CounterRng split() { return CounterRng((*this)(), stream_); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection keeps the distribution exact.
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % n;
  }

  int sign() { return ((*this)() >> 63) ? 1 : -1; }

  /// Standard normal via Box-Muller (one value per call).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Standard complex Gaussian (E|z|^2 = 1).
  Complex complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
  }

  /// Uniform on the closed disk of the given radius.
  Complex disk(double radius) {
    const double r = radius * std::sqrt(uniform());
    const double phi = 2.0 * std::numbers::pi * uniform();
    return std::polar(r, phi);
  }

 private:
  std::uint64_t key_;
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

// Random dense objects shared by generators and tests.

inline CVector random_complex_vector(CounterRng& rng, Eigen::Index n) {
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.complex_normal();
  return v;
}

inline CMatrix random_complex_matrix(CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
  CMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.complex_normal();
  return m;
}

/// Haar-distributed unitary (QR of a Gaussian matrix with the phase ambiguity removed).
inline CMatrix random_unitary(CounterRng& rng, Eigen::Index d) {
  const CMatrix g = random_complex_matrix(rng, d, d);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(d, d);
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i) {
    const double mag = std::abs(r(i, i));
    if (mag > 0) q.col(i) *= r(i, i) / mag;
  }
  return q;
}

/// Random HPD matrix Q diag(exp(s * u_i)) Q*, u_i uniform on [-1, 1].
inline HpdMatrix random_hpd(CounterRng& rng, Eigen::Index d, double log_spread = 1.5) {
  const CMatrix q = random_unitary(rng, d);
  RVector values(d);
  for (Eigen::Index i = 0; i < d; ++i) values(i) = std::exp(log_spread * rng.uniform(-1.0, 1.0));
  std::sort(values.data(), values.data() + d);
  return HpdMatrix::from_eigen(q, values);
}

/// Random PSD matrix with spectrum in [0, 1]; with `touch_one` the top eigenvalue is exactly 1.
inline HermMatrix random_contraction_psd(CounterRng& rng, Eigen::Index d, bool touch_one) {
  const CMatrix q = random_unitary(rng, d);
  RVector values(d);
  for (Eigen::Index i = 0; i < d; ++i) values(i) = rng.uniform();
  if (touch_one) values(rng.below(static_cast<std::uint64_t>(d))) = 1.0;
  return HermMatrix::from_hermitian_part(q * values.asDiagonal() * q.adjoint());
}

/// Wishart-style PSD matrix G G* / d with G complex Gaussian of rank `rank`.
inline HermMatrix random_wishart(CounterRng& rng, Eigen::Index d, Eigen::Index rank) {
  const CMatrix g = random_complex_matrix(rng, d, rank);
  return HermMatrix::from_hermitian_part(g * g.adjoint() / static_cast<double>(d));
}

}  // namespace haarlab
