#pragma once

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>

#include "haarlab/error.hpp"
#include "haarlab/linalg.hpp"
#include "haarlab/rng.hpp"

namespace haarlab::test {

inline CMatrix diag(std::initializer_list<double> values) {
  CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) m(i, i) = v, ++i;
  return m;
}

inline CMatrix scalar(double v) { return CMatrix::Constant(1, 1, Complex(v)); }

inline double rel_err(const CMatrix& a, const CMatrix& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

/// Runs `body(rng, trial)` for `trials` independent streams of `seed`.
template <typename F>
void for_trials(std::uint64_t seed, int trials, F&& body) {
  for (int t = 0; t < trials; ++t) {
    CounterRng rng(seed, static_cast<std::uint64_t>(t));
    body(rng, t);
  }
}

}  // namespace haarlab::test

#define CHECK_THROWS_CODE(expr, expected)                                 \
  do {                                                                    \
    bool thrown_ = false;                                                 \
    try {                                                                 \
      (void)(expr);                                                       \
    } catch (const ::haarlab::Error& e_) {                                \
      thrown_ = true;                                                     \
      CHECK_MESSAGE(e_.code() == (expected), std::string(e_.what()));                  \
    }                                                                     \
    CHECK_MESSAGE(thrown_, "expected " #expected " from " #expr);         \
  } while (0)
