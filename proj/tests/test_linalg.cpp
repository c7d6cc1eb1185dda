#include "support.hpp"

using namespace haarlab;
using namespace haarlab::test;

TEST_SUITE("linalg") {
  TEST_CASE("herm_sqrt examples") {
    CHECK(rel_err(herm_sqrt(HpdMatrix::identity(2)).matrix(), CMatrix::Identity(2, 2)) < 1e-15);
    CHECK(rel_err(herm_sqrt(HpdMatrix(diag({4, 1}))).matrix(), diag({2, 1})) < 1e-15);
    for_trials(11, 200, [](CounterRng& rng, int) {
      const auto d = static_cast<Eigen::Index>(1 + rng.below(6));
      const HpdMatrix a = random_hpd(rng, d, 2.0);
      const CMatrix s = herm_sqrt(a).matrix();
      CHECK(rel_err(s * s, a.matrix()) <= 1e-10);
    });
  }

  TEST_CASE("positive definiteness is an error, not a clamp") {
    CHECK_THROWS_CODE(HpdMatrix(diag({1, 0})), ErrorCode::NotPositiveDefinite);
    CHECK_THROWS_CODE(HpdMatrix(diag({1, -1})), ErrorCode::NotPositiveDefinite);
    CHECK_THROWS_CODE(HpdMatrix(diag({1, 1e-13})), ErrorCode::NotPositiveDefinite);
    CMatrix m = diag({1, 1});
    m(0, 1) = 0.5;
    CHECK_THROWS_CODE(HermMatrix(m), ErrorCode::NotHermitian);
  }

  TEST_CASE("op_norm examples") {
    CHECK(op_norm(CMatrix::Identity(3, 3)) == doctest::Approx(1.0));
    CHECK(op_norm(diag({3, -1})) == doctest::Approx(3.0));
    CMatrix n = CMatrix::Zero(2, 2);
    n(0, 1) = 2.0;
    CHECK(op_norm(n) == doctest::Approx(2.0));
  }

  TEST_CASE("is_psd examples") {
    CHECK(is_psd(HermMatrix::zero(3), 0.0));
    CHECK_FALSE(is_psd(HermMatrix(diag({1, -1e-6})), 1e-9));
    CHECK(is_psd(HermMatrix(diag({1, -1e-12})), 1e-9));
  }

  TEST_CASE("congruence examples and definition") {
    CHECK(rel_err(congruence(HermMatrix::identity(2), HpdMatrix(diag({4, 1}))).matrix(), diag({4, 1})) < 1e-15);
    CHECK(rel_err(congruence(HermMatrix(diag({2, 3})), HpdMatrix::identity(2)).matrix(), diag({2, 3})) < 1e-15);
    for_trials(12, 200, [](CounterRng& rng, int) {
      const auto d = static_cast<Eigen::Index>(1 + rng.below(5));
      const HermMatrix a = HermMatrix::from_hermitian_part(random_complex_matrix(rng, d, d));
      const HpdMatrix b = random_hpd(rng, d);
      const CMatrix root = herm_sqrt(b).matrix();
      CHECK(rel_err(congruence(a, b).matrix(), root * a.matrix() * root) <= 1e-12);
    });
  }

  TEST_CASE("congruence of the inverse is the identity") {
    for_trials(13, 300, [](CounterRng& rng, int) {
      const auto d = static_cast<Eigen::Index>(1 + rng.below(8));
      const HpdMatrix a = random_hpd(rng, d, 2.5);
      CHECK(rel_err(congruence(inverse(a).herm(), a).matrix(), CMatrix::Identity(d, d)) <= 1e-10);
    });
  }

  TEST_CASE("A2 product symmetry") {
    // ||A^{1/2} B A^{1/2}|| = ||B^{1/2} A B^{1/2}||: both are lambda_max(AB).
    for_trials(14, 300, [](CounterRng& rng, int) {
      const auto d = static_cast<Eigen::Index>(1 + rng.below(6));
      const HpdMatrix a = random_hpd(rng, d);
      const HpdMatrix b = random_hpd(rng, d);
      const double lhs = op_norm(congruence(a.herm(), b).matrix());
      const CMatrix ra = herm_sqrt(a).matrix();
      const double rhs = op_norm(CMatrix(ra * b.matrix() * ra));
      CHECK(std::abs(lhs - rhs) <= 1e-10 * rhs);
    });
  }

  TEST_CASE("congruence preserves the Loewner order") {
    for_trials(15, 300, [](CounterRng& rng, int) {
      const auto d = static_cast<Eigen::Index>(1 + rng.below(5));
      const HermMatrix a = random_wishart(rng, d, d);
      const HermMatrix b = a + random_wishart(rng, d, 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(d))));
      REQUIRE(is_psd(b - a));
      const HpdMatrix c = random_hpd(rng, d);
      CHECK(is_psd(congruence(b, c) - congruence(a, c)));
      CHECK(max_eigenvalue(congruence(a, c)) <= max_eigenvalue(congruence(b, c)) * (1 + 1e-9) + 1e-12);
    });
  }

  TEST_CASE("HPD functional calculus") {
    for_trials(16, 200, [](CounterRng& rng, int) {
      const auto d = static_cast<Eigen::Index>(1 + rng.below(6));
      const HpdMatrix a = random_hpd(rng, d, 2.0);
      const CMatrix id = CMatrix::Identity(d, d);
      CHECK(rel_err(a.inverse_matrix() * a.matrix(), id) <= 1e-10);
      CHECK(rel_err(a.inv_sqrt_matrix() * a.matrix() * a.inv_sqrt_matrix(), id) <= 1e-10);
      const CVector b = random_complex_vector(rng, d);
      CHECK((a.matrix() * a.solve(b) - b).norm() <= 1e-10 * b.norm() * a.max_eigenvalue() / a.min_eigenvalue());
      const RVector ev = a.eigenvalues();
      for (Eigen::Index i = 1; i < d; ++i) CHECK(ev(i - 1) <= ev(i));
    });
  }

  TEST_CASE("counter-based streams are reproducible and independent of order") {
    CounterRng a(42, 7), b(42, 7), c(42, 8);
    for (int i = 0; i < 100; ++i) {
      const auto x = a();
      CHECK(x == b());
      CHECK(x != c());
    }
    // Output word c depends only on (seed, stream, c).
    CounterRng late(42, 7);
    for (int i = 0; i < 99; ++i) late();
    CounterRng ref(42, 7);
    std::uint64_t hundredth = 0;
    for (int i = 0; i < 100; ++i) hundredth = ref();
    CHECK(late() == hundredth);
    CHECK(mix64(0) == 0);
    // First word of stream (0, 0) pinned as a reproducibility anchor.
    CounterRng zero(0, 0);
    const std::uint64_t key = mix64(0 ^ mix64(CounterRng::kGamma));
    CHECK(zero() == mix64(key + CounterRng::kGamma));
  }

  TEST_CASE("uniform draws stay in range") {
    CounterRng rng(5);
    for (int i = 0; i < 10000; ++i) {
      const double u = rng.uniform();
      CHECK((u >= 0.0 && u < 1.0));
      CHECK(rng.below(7) < 7u);
      CHECK(std::abs(rng.disk(0.5)) <= 0.5);
    }
  }
}
