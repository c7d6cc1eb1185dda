#include "support.hpp"

#include "haarlab/operators.hpp"
#include "haarlab/weights.hpp"

using namespace haarlab;
using namespace haarlab::test;

namespace {

GridFunction random_function(CounterRng& rng, int d, int depth) {
  return GridFunction(depth, random_complex_matrix(rng, d, leaf_count(depth)));
}

HaarShiftSpec root_shift(Complex c) {
  CMatrix coeffs(1, 1);
  coeffs(0, 0) = c;
  return HaarShiftSpec(0, 0, {ShiftBlock{DyadicInterval::root(), coeffs}});
}

}  // namespace

TEST_SUITE("operators") {
  TEST_CASE("sigma_norm examples") {
    const MatrixWeight id = MatrixWeight::constant(3, HpdMatrix::identity(2));
    CHECK(sigma_norm(MartingaleSymbol::identity(2, 3), id) == doctest::Approx(1.0));
    CHECK(sigma_norm(MartingaleSymbol::zero(2, 3), id) == 0.0);
    CHECK(sigma_norm(MartingaleSymbol::constant(2, 3, diag({3, -2})), id) == doctest::Approx(3.0));
    // Conjugation by <W>^{1/2} = diag(2, 1) turns the off-diagonal 1 into 2.
    CMatrix n = CMatrix::Zero(2, 2);
    n(0, 1) = 1.0;
    const MatrixWeight w = MatrixWeight::constant(1, HpdMatrix(diag({4, 1})));
    CHECK(sigma_norm(MartingaleSymbol::constant(2, 1, n), w) == doctest::Approx(2.0));
    CHECK_THROWS_CODE(sigma_norm(MartingaleSymbol::identity(2, 2), w), ErrorCode::ShapeMismatch);
  }

  TEST_CASE("martingale transform examples") {
    CounterRng rng(41);
    const GridFunction f = random_function(rng, 2, 4);
    const GridFunction tf = apply_martingale_transform(MartingaleSymbol::identity(2, 4), f);
    const CVector mean = average(f, DyadicInterval::root());
    for (std::int64_t t = 0; t < f.leaves(); ++t) CHECK((tf.leaf(t) - (f.leaf(t) - mean)).norm() < 1e-12);
    CHECK(apply_martingale_transform(MartingaleSymbol::zero(2, 4), f).values().norm() == 0.0);

    // sigma_root = 1 on the indicator of the left half gives h_root / 2.
    CMatrix ind(1, 2);
    ind << 1.0, 0.0;
    const GridFunction g = apply_martingale_transform(MartingaleSymbol::identity(1, 1), GridFunction(1, ind));
    CHECK(g.leaf(0)(0) == Complex(0.5));
    CHECK(g.leaf(1)(0) == Complex(-0.5));
  }

  TEST_CASE("martingale transform is diagonal in the Haar basis") {
    for_trials(42, 50, [](CounterRng& rng, int) {
      const int d = 1 + static_cast<int>(rng.below(3));
      const int depth = 1 + static_cast<int>(rng.below(5));
      const GridFunction f = random_function(rng, d, depth);
      MartingaleSymbol s = MartingaleSymbol::zero(d, depth);
      for (CMatrix& m : s.sigma) m = random_complex_matrix(rng, d, d);
      const GridFunction tf = apply_martingale_transform(s, f);
      CHECK(average(tf, DyadicInterval::root()).norm() <= 1e-12 * f.values().norm());
      for (std::size_t h = 0; h < internal_count(depth); ++h) {
        const DyadicInterval i = DyadicInterval::from_heap(h);
        const CVector expect = s.at(i) * haar_coeff(f, i);
        CHECK((haar_coeff(tf, i) - expect).norm() <= 1e-11 * std::max(1.0, expect.norm()));
      }
    });
  }

  TEST_CASE("shift examples and errors") {
    // c = 1 at the root with m = n = 0 is sigma_root = 1.
    CounterRng rng(43);
    const GridFunction f = random_function(rng, 1, 3);
    MartingaleSymbol root_only = MartingaleSymbol::zero(1, 3);
    root_only.sigma[0] = CMatrix::Identity(1, 1);
    CHECK(rel_err(apply_haar_shift(root_shift(1.0), f).values(), apply_martingale_transform(root_only, f).values()) <
          1e-14);

    // m = 0, n = 1: <f, h_root> is spread over the two children with weights 1/sqrt(2).
    CMatrix c(1, 2);
    c << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
    const HaarShiftSpec s(0, 1, {ShiftBlock{DyadicInterval::root(), c}});
    CHECK(s.complexity() == 2);
    CHECK(s.required_depth() == 2);
    const GridFunction out = apply_haar_shift(s, f);
    const Complex a = haar_coeff(f, DyadicInterval::root())(0);
    CHECK(std::abs(haar_coeff(out, {1, 0})(0) - a * c(0, 0)) < 1e-12);
    CHECK(std::abs(haar_coeff(out, {1, 1})(0) - a * c(0, 1)) < 1e-12);
    CHECK(haar_coeff(out, DyadicInterval::root()).norm() < 1e-12);

    CHECK_THROWS_CODE(apply_haar_shift(HaarShiftSpec(0, 1, {ShiftBlock{{2, 0}, c}}), f), ErrorCode::DepthExceeded);
    CHECK_THROWS_CODE(HaarShiftSpec(0, 1, {ShiftBlock{DyadicInterval::root(), 2.0 * c}}),
                      ErrorCode::PreconditionViolated);
    CHECK_THROWS_CODE(HaarShiftSpec(0, 0, {ShiftBlock{{0, 0}, c}}), ErrorCode::ShapeMismatch);
    CHECK_THROWS_CODE(slice(s, 2), ErrorCode::IndexOutOfRange);
  }

  TEST_CASE("slices partition a shift") {
    for_trials(44, 40, [](CounterRng& rng, int) {
      const int m = static_cast<int>(rng.below(3));
      const int n = static_cast<int>(rng.below(3));
      const int depth = std::max(m, n) + 1 + static_cast<int>(rng.below(4));
      const HaarShiftSpec s = random_shift(rng, m, n, depth, 0.7);
      const GridFunction f = random_function(rng, 2, depth);
      GridFunction sum(2, depth);
      std::size_t blocks = 0;
      for (int j = 0; j < s.complexity(); ++j) {
        const HaarShiftSpec sj = slice(s, j);
        for (const ShiftBlock& b : sj.blocks()) CHECK(b.anchor.level % s.complexity() == j);
        blocks += sj.blocks().size();
        sum += apply_haar_shift(sj, f);
      }
      CHECK(blocks == s.blocks().size());
      CHECK(rel_err(sum.values(), apply_haar_shift(s, f).values()) <= 1e-12);
    });
  }

  TEST_CASE("shift duality") {
    for_trials(45, 60, [](CounterRng& rng, int) {
      const int m = static_cast<int>(rng.below(3));
      const int n = static_cast<int>(rng.below(3));
      const int depth = std::max(m, n) + 1 + static_cast<int>(rng.below(3));
      const HaarShiftSpec s = random_shift(rng, m, n, depth);
      const GridFunction f = random_function(rng, 2, depth);
      const GridFunction g = random_function(rng, 2, depth);
      const Complex lhs = pairing(apply_haar_shift(s, f), g);
      const Complex rhs = pairing(f, apply_haar_shift(s.adjoint(), g));
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    });
  }

  TEST_CASE("weighted norm of the two-leaf example") {
    // W = (4, 1), sigma_root = 1: W^{1/2} T W^{-1/2} = [[1/2, -1], [-1/4, 1/2]], norm 5/4.
    const MatrixWeight w(1, {HpdMatrix(scalar(4)), HpdMatrix(scalar(1))});
    const WeightedNorm r = weighted_norm(MartingaleSymbol::identity(1, 1), w);
    CHECK(r.norm == doctest::Approx(1.25).epsilon(1e-13));
    CHECK(r.agree);
    CHECK(weighted_norm(root_shift(1.0), w).norm == doctest::Approx(1.25).epsilon(1e-13));
  }

  TEST_CASE("weighted norm identities") {
    for_trials(46, 30, [](CounterRng& rng, int) {
      const int d = 1 + static_cast<int>(rng.below(3));
      const int depth = 1 + static_cast<int>(rng.below(4));
      const MatrixWeight w = random_test_weight(rng, d, depth);
      const MartingaleSymbol s = random_symbol(rng, w);
      const WeightedNorm base = weighted_norm(s, w);
      CHECK(base.agree);
      const Complex c = rng.complex_normal();
      CHECK(weighted_norm(s.scaled(c), w).norm == doctest::Approx(std::abs(c) * base.norm).epsilon(1e-9));

      // ||T||_{L2(W)} = ||T*||_{L2(W^{-1})}.
      std::vector<HpdMatrix> inv;
      for (std::int64_t t = 0; t < w.leaves(); ++t) inv.emplace_back(w.leaf_inverse(t));
      const MatrixWeight w_inv(depth, std::move(inv));
      CHECK(weighted_norm(s.adjoint(), w_inv).norm == doctest::Approx(base.norm).epsilon(1e-9));

      // Unweighted, a transform with ||sigma_I|| <= 1 is a contraction.
      const MatrixWeight flat = MatrixWeight::constant(depth, HpdMatrix::identity(d));
      CHECK(weighted_norm(random_symbol(rng, flat), flat).norm <= 1.0 + 1e-10);
    });
  }

  TEST_CASE("self-adjoint shifts have self-adjoint dense matrices") {
    CounterRng rng(47);
    const MatrixWeight flat = MatrixWeight::constant(4, HpdMatrix::identity(2));
    const HaarShiftSpec s = random_self_adjoint_shift(rng, 1, 4);
    const LinearMap op = [&](const GridFunction& f) { return apply_haar_shift(s, f); };
    const CMatrix m = weighted_dense_matrix(op, flat);
    CHECK((m - m.adjoint()).norm() <= 1e-12 * m.norm());
  }

  TEST_CASE("weighted_norm refuses oversized problems") {
    const MatrixWeight big = MatrixWeight::constant(12, HpdMatrix::identity(2));
    CHECK_THROWS_CODE(weighted_norm(MartingaleSymbol::identity(2, 12), big), ErrorCode::DimensionTooLarge);
  }

  TEST_CASE("linearization is an equality in dimension one") {
    for_trials(48, 50, [](CounterRng& rng, int) {
      const int depth = 1 + static_cast<int>(rng.below(6));
      const MatrixWeight w = random_test_weight(rng, 1, depth);
      const InequalitySides s = linearization_check(random_function(rng, 1, depth), random_function(rng, 1, depth), w);
      CHECK(std::abs(s.lhs - s.rhs) <= 1e-10 * s.rhs);
    });
  }

  TEST_CASE("linearization inequality") {
    for_trials(49, 80, [](CounterRng& rng, int) {
      const int d = 2 + static_cast<int>(rng.below(3));
      const int depth = 1 + static_cast<int>(rng.below(5));
      const MatrixWeight w = random_test_weight(rng, d, depth);
      const InequalitySides s = linearization_check(random_function(rng, d, depth), random_function(rng, d, depth), w);
      CHECK(s.lhs <= s.rhs * (1 + 1e-9));
    });
  }

  TEST_CASE("slice bound four-term example") {
    CMatrix fv(1, 2), gv(1, 2);
    fv << 3.0, 1.0;
    gv << Complex(0, 2), Complex(1, 0);
    const MatrixWeight w(1, {HpdMatrix(scalar(2)), HpdMatrix(scalar(0.5))});
    const SliceBound b = slice_bound_check(root_shift(1.0), 0, GridFunction(1, fv), GridFunction(1, gv), w);
    const double expect = 2.0 * std::abs(Complex(-1, 2)) / 4.0;
    CHECK(b.lhs == doctest::Approx(expect).epsilon(1e-14));
    CHECK(b.rhs == doctest::Approx(expect).epsilon(1e-14));
    CHECK(b.rhs_anchored == doctest::Approx(expect).epsilon(1e-14));
  }

  TEST_CASE("slice bound holds") {
    for_trials(50, 60, [](CounterRng& rng, int) {
      const int d = 1 + static_cast<int>(rng.below(3));
      const int m = static_cast<int>(rng.below(2));
      const int n = static_cast<int>(rng.below(2));
      const int k = std::max(m, n) + 1;
      const int depth = k + static_cast<int>(rng.below(4));
      const HaarShiftSpec s = random_shift(rng, m, n, depth);
      const MatrixWeight w = random_test_weight(rng, d, depth);
      const GridFunction f = random_function(rng, d, depth);
      const GridFunction g = random_function(rng, d, depth);
      for (int j = 0; j < k; ++j) {
        const SliceBound b = slice_bound_check(slice(s, j), j, f, g, w);
        CHECK(b.lhs <= b.rhs_anchored * (1 + 1e-10) + 1e-14);
        CHECK(b.rhs_anchored <= b.rhs * (1 + 1e-12) + 1e-14);
      }
    });
  }
}
