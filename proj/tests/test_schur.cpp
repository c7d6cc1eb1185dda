#include "support.hpp"

#include "haarlab/bellman.hpp"
#include "haarlab/schur.hpp"
#include "haarlab/weights.hpp"

using namespace haarlab;
using namespace haarlab::test;

namespace {

// [[1, -1], [-1, 1]]: the rank-one matrix of m = n = (1, -1).
LambdaMatrix two_by_two() {
  CVector m(2);
  m << 1.0, -1.0;
  return LambdaMatrix::rank_one(m, m);
}

std::vector<BellmanPoint> weight_tree(CounterRng& rng, int d, int k) {
  const MatrixWeight w = random_test_weight(rng, d, k);
  const GridFunction f(k, random_complex_matrix(rng, d, leaf_count(k)));
  const GridFunction g(k, random_complex_matrix(rng, d, leaf_count(k)));
  return bellman_tree_from_weight(w, f, g);
}

}  // namespace

TEST_SUITE("schur") {
  TEST_CASE("two-by-two closed forms") {
    const LambdaMatrix l = two_by_two();
    CHECK(l.k() == 1);
    CHECK(l.abs_sum() == 4.0);
    CHECK(std::abs(quadratic_value(l, {0.25, -0.25}) - Complex(0.25)) < 1e-15);
    const AlphaResult r = alpha_search_rank_one(l);
    CHECK(r.value == doctest::Approx(0.25));
    CHECK(r.ratio == doctest::Approx(1.0 / 16.0));
    const AlphaResult e = exhaustive_alpha(l);
    CHECK(e.value == doctest::Approx(0.25));
    const LambdaNorms n = lambda_norms(l);
    CHECK(n.certified);
    CHECK(n.norm2.lo == doctest::Approx(4.0));
    CHECK(n.norm2.hi == doctest::Approx(4.0));
    CHECK(n.norm1.lo == doctest::Approx(0.25));
    CHECK(n.norm1.hi >= 0.25);
    CHECK(n.norm1.hi <= 0.25 / std::cos(std::numbers::pi / 720) + 1e-15);
  }

  TEST_CASE("constructors enforce zero sums") {
    CVector bad(2);
    bad << 1.0, 0.5;
    CHECK_THROWS_CODE(LambdaMatrix::rank_one(bad, bad), ErrorCode::PreconditionViolated);
    CVector three(3);
    three << 1.0, -0.5, -0.5;
    CHECK_THROWS_CODE(LambdaMatrix::rank_one(three, three), ErrorCode::ShapeMismatch);
    CHECK_THROWS_CODE(LambdaMatrix::symmetric(diag({1, 1})), ErrorCode::PreconditionViolated);
    CMatrix asym(2, 2);
    asym << 1.0, -1.0, -1.0, 1.0;
    CHECK(LambdaMatrix::symmetric(asym).kind == LambdaKind::Symmetric);
    asym(0, 1) = Complex(-1.0, 0.5);
    asym(0, 0) = Complex(1.0, -0.5);
    CHECK_THROWS_CODE(LambdaMatrix::symmetric(asym), ErrorCode::PreconditionViolated);
  }

  TEST_CASE("built coefficient matrices are rank one with zero row sums") {
    for_trials(81, 40, [](CounterRng& rng, int) {
      const int d = 1 + static_cast<int>(rng.below(3));
      const int k = 1 + static_cast<int>(rng.below(3));
      const auto tree = weight_tree(rng, d, k);
      for (int i = 0; i < d; ++i) {
        const LambdaMatrix l = build_lambda(tree, k, i);
        CHECK(l.size() == leaf_count(k));
        const double scale = std::max(1e-300, l.values.norm());
        CHECK(l.values.rowwise().sum().norm() <= 1e-12 * scale);
        CHECK(l.values.colwise().sum().norm() <= 1e-12 * scale);
        Eigen::JacobiSVD<CMatrix> svd(l.values);
        if (l.size() > 1) CHECK(svd.singularValues()(1) <= 1e-12 * scale);
        CHECK((l.m * l.n.transpose() - l.values).norm() <= 1e-14 * scale);
      }
      const LambdaMatrix even = build_lambda_even(tree, k);
      CHECK((even.values - even.values.transpose()).norm() <= 1e-12 * std::max(1e-300, even.values.norm()));
      CHECK_THROWS_CODE(build_lambda(tree, k, d), ErrorCode::EigenIndexOutOfRange);
    });
  }

  TEST_CASE("eigen-indexed matrices sum to the full pairing") {
    CounterRng rng(82);
    const int d = 3, k = 2;
    const auto tree = weight_tree(rng, d, k);
    CMatrix sum = CMatrix::Zero(4, 4);
    for (int i = 0; i < d; ++i) sum += build_lambda(tree, k, i).values;
    const CMatrix even = build_lambda_even(tree, k).values;
    CHECK((sum + sum.transpose() - even).norm() <= 1e-12 * even.norm());
  }

  TEST_CASE("rank-one multiplier property") {
    for_trials(83, 120, [](CounterRng& rng, int) {
      const int k = 1 + static_cast<int>(rng.below(4));
      const LambdaMatrix l = random_rank_one_lambda(rng, k);
      const AlphaResult r = alpha_search_rank_one(l);
      double sum = 0.0;
      for (double a : r.alpha) {
        CHECK(std::abs(a) <= 0.25 + 1e-15);
        sum += a;
      }
      CHECK(std::abs(sum) <= 1e-12);
      CHECK(r.ratio >= kRankOneConstant);
      CHECK(std::abs(std::abs(quadratic_value(l, r.alpha)) - r.value) <= 1e-12 * std::max(1.0, r.value));
      if (k <= 4) CHECK(exhaustive_alpha(l).ratio >= kRankOneConstant);
    });
  }

  TEST_CASE("zero matrices pass trivially") {
    const LambdaMatrix z = LambdaMatrix::rank_one(CVector::Zero(4), CVector::Zero(4));
    const AlphaResult r = alpha_search_rank_one(z);
    CHECK(r.method == SearchMethod::Trivial);
    CHECK(r.value == 0.0);
  }

  TEST_CASE("vertices of P") {
    RVector c(4);
    c << 3, 1, 2, 0;
    CHECK(greedy_vertex(c) == std::vector<double>{0.25, -0.25, 0.25, -0.25});
    RVector odd(3);
    odd << 1, 2, 3;
    CHECK(greedy_vertex(odd) == std::vector<double>{-0.25, 0.0, 0.25});
    CHECK(balanced_vertices(2).size() == 2);
    CHECK(balanced_vertices(4).size() == 6);
    CHECK(balanced_vertices(8).size() == 70);
    for (const auto& v : balanced_vertices(6)) {
      double s = 0.0;
      for (double a : v) s += a;
      CHECK(s == 0.0);
    }
  }

  TEST_CASE("max_quadratic_on_p for two entries") {
    // alpha = (s, -s), |s| <= 1/4: sup is max(0, r00 - r01 - r10 + r11) / 16.
    CHECK(max_quadratic_on_p(RMatrix::Identity(2, 2)) == doctest::Approx(1.0 / 8.0));
    CHECK(max_quadratic_on_p(-RMatrix::Identity(2, 2)) == doctest::Approx(0.0));
    RMatrix r(2, 2);
    r << 1, 3, 3, 1;
    CHECK(max_quadratic_on_p(r) == doctest::Approx(0.0));
    r << 2, -1, -1, 0;
    CHECK(max_quadratic_on_p(r) == doctest::Approx(4.0 / 16.0));
  }

  TEST_CASE("norm ordering on symmetric matrices") {
    // 4 alpha lies in the unit box, so ||Lambda||_1 <= ||Lambda||_2 / 16.
    for_trials(84, 40, [](CounterRng& rng, int) {
      const LambdaMatrix l = random_symmetric_lambda(rng, 2, 1 + static_cast<int>(rng.below(3)));
      const LambdaNorms n = lambda_norms(l, 360);
      CHECK(n.certified);
      CHECK(n.norm1.lo <= n.norm1.hi);
      CHECK(n.norm2.lo <= n.norm2.hi * (1 + 1e-15));
      CHECK(16.0 * n.norm1.lo <= n.norm2.hi * (1 + 1e-9));
      CHECK(summability_check(l, kGrothendieckDefault, 360).ok);
      const EvenAlphaResult e = alpha_search_even(l);
      CHECK(e.certificate.ok);
      CHECK(e.certificate.value <= n.norm1.hi * (1 + 1e-9));
    });
  }

  TEST_CASE("Schur multiplication") {
    CMatrix a(2, 2), m(2, 2);
    a << 1, 2, 3, 4;
    m << Complex(0, 1), 1, -1, 0.5;
    CMatrix expect(2, 2);
    expect << Complex(0, 1), 2, -3, 2;
    CHECK(schur_multiply(a, m) == expect);
    CHECK_THROWS_CODE(schur_multiply(a, CMatrix::Zero(2, 3)), ErrorCode::ShapeMismatch);
  }

  TEST_CASE("sign multiplier examples") {
    RMatrix h(2, 2);
    h << 1, 1, 1, -1;
    const SignMultiplierCheck eq = sign_multiplier_check(h, h.cast<Complex>());
    CHECK(eq.ratio == doctest::Approx(std::sqrt(2.0)));
    CHECK(eq.bound == doctest::Approx(std::sqrt(2.0)));
    CHECK(eq.ok);
    const SignMultiplierCheck ones = sign_multiplier_check(h, CMatrix::Ones(2, 2));
    CHECK(ones.ratio == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(sign_multiplier_check(RMatrix::Ones(4, 4), CMatrix::Identity(4, 4)).ratio == doctest::Approx(1.0));
    RMatrix bad = h;
    bad(0, 0) = 0.5;
    CHECK_THROWS_CODE(sign_multiplier_check(bad, CMatrix::Ones(2, 2)), ErrorCode::PreconditionViolated);
    CHECK_THROWS_CODE(sign_multiplier_check(RMatrix::Ones(3, 3), CMatrix::Ones(3, 3)), ErrorCode::PreconditionViolated);
  }

  TEST_CASE("sign multiplier bound on random matrices") {
    for_trials(85, 100, [](CounterRng& rng, int) {
      const int k = static_cast<int>(rng.below(5));
      const RMatrix a = random_sign_matrix(rng, k);
      const auto size = static_cast<Eigen::Index>(a.rows());
      const SignMultiplierCheck c = sign_multiplier_check(a, random_complex_matrix(rng, size, size));
      CHECK(c.ok);
      CHECK(c.bound == doctest::Approx(std::sqrt(std::ldexp(1.0, k))));
    });
  }
}
