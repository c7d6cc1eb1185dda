#include "support.hpp"

#include "haarlab/carleson.hpp"
#include "haarlab/weights.hpp"

using namespace haarlab;
using namespace haarlab::test;

namespace {

std::vector<HermMatrix> root_only(int d, int depth, const CMatrix& a) {
  std::vector<HermMatrix> out(node_count(depth), HermMatrix::zero(d));
  out[0] = HermMatrix(a);
  return out;
}

}  // namespace

TEST_SUITE("carleson") {
  TEST_CASE("carleson_scale examples") {
    const MatrixWeight flat = MatrixWeight::constant(2, HpdMatrix::identity(1));
    const CarlesonScale one = carleson_scale(flat, root_only(1, 2, scalar(1)));
    CHECK(one.c == doctest::Approx(1.0));
    CHECK(one.argmin == 0);
    CHECK_FALSE(one.unbounded);
    CHECK(carleson_scale(flat, root_only(1, 2, scalar(4))).c == doctest::Approx(0.25));
    CHECK(carleson_scale(flat, std::vector<HermMatrix>(node_count(2), HermMatrix::zero(1))).unbounded);

    // One leaf at level 1 with A = 1: (1/|I|) sum = 1/(1/2) at the leaf, 1/2 at the root.
    std::vector<HermMatrix> leaf(node_count(1), HermMatrix::zero(1));
    leaf[1] = HermMatrix(scalar(1));
    const CarlesonScale s = carleson_scale(MatrixWeight::constant(1, HpdMatrix::identity(1)), leaf);
    CHECK(s.c == doctest::Approx(0.5));
    CHECK(s.argmin == 1);

    // Depth zero is allowed.
    CHECK(carleson_scale(MatrixWeight::constant(0, HpdMatrix(scalar(2))), root_only(1, 0, scalar(1))).c ==
          doctest::Approx(0.5));
  }

  TEST_CASE("depth-one embedding example") {
    const MatrixWeight w = MatrixWeight::constant(1, HpdMatrix::identity(1));
    const CarlesonSequence a(w, root_only(1, 1, scalar(1)));
    CHECK(a.condition_holds());
    CHECK(a.condition_ratio() == doctest::Approx(1.0));
    CMatrix ind(1, 2);
    ind << 1.0, 0.0;
    const GridFunction f(1, ind);
    const EmbeddingSides s = embedding_check(w, a, f, 1.0);
    CHECK(s.lhs == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(s.rhs == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(s.imag_residue == 0.0);
  }

  TEST_CASE("errors") {
    const MatrixWeight w = MatrixWeight::constant(1, HpdMatrix::identity(1));
    CHECK_THROWS_CODE(CarlesonSequence(w, root_only(1, 1, scalar(-1))), ErrorCode::NotPositiveDefinite);
    const CarlesonSequence big(w, root_only(1, 1, scalar(2)));
    CHECK_FALSE(big.condition_holds());
    const GridFunction f = GridFunction::constant(1, CVector::Ones(1));
    CHECK_THROWS_CODE(embedding_check(w, big, f, 1.0), ErrorCode::ConditionViolated);
    const CarlesonSequence ok(w, root_only(1, 1, scalar(1)));
    CHECK_THROWS_CODE(embedding_check(w, ok, f, 0.0), ErrorCode::ConfigInvalid);
    CHECK_THROWS_CODE(embedding_check(w, ok, f, 1.5), ErrorCode::ConfigInvalid);
  }

  TEST_CASE("node sums and the M-tilde recursion") {
    for_trials(71, 30, [](CounterRng& rng, int) {
      const int d = 1 + static_cast<int>(rng.below(3));
      const int depth = 1 + static_cast<int>(rng.below(5));
      const CarlesonInstance inst = random_carleson_instance(rng, d, depth);
      const CarlesonSequence a(inst.weight, inst.a);
      CHECK(a.condition_ratio() <= 1.0 + 1e-9);
      for (std::size_t h = 0; h < node_count(depth); ++h) {
        const DyadicInterval i = DyadicInterval::from_heap(h);
        const CMatrix wa = inst.weight.avg_at(h).matrix();
        CMatrix direct = CMatrix::Zero(d, d);
        for (int g = 0; g <= depth - i.level; ++g)
          for (const DyadicInterval& j : i.descendants(g)) {
            const CMatrix wj = inst.weight.avg(j).matrix();
            direct += wj * inst.a[j.heap_index()].matrix() * wj;
          }
        const double scale = std::max(1e-300, direct.norm());
        CHECK((a.node_sum(h) - direct).norm() <= 1e-10 * std::max(1.0, scale));
        CHECK((a.carleson_average(h) - direct / i.length()).norm() <= 1e-10 * std::max(1.0, scale / i.length()));
        const CMatrix strict = direct - wa * inst.a[h].matrix() * wa;
        CHECK((a.m_tilde(h) - strict / i.length()).norm() <= 1e-10 * std::max(1.0, scale / i.length()));
      }
    });
  }

  TEST_CASE("rescaling puts the sequence on the boundary") {
    for_trials(72, 30, [](CounterRng& rng, int) {
      const int d = 1 + static_cast<int>(rng.below(3));
      const int depth = static_cast<int>(rng.below(5));
      const MatrixWeight w = random_test_weight(rng, d, depth);
      std::vector<HermMatrix> raw;
      for (std::size_t h = 0; h < node_count(depth); ++h)
        raw.push_back(random_wishart(rng, d, 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(d)))));
      const CarlesonScale s = carleson_scale(w, raw);
      REQUIRE_FALSE(s.unbounded);
      std::vector<HermMatrix> scaled;
      for (const HermMatrix& a : raw) scaled.push_back(HermMatrix::from_hermitian_part(s.c * a.matrix()));
      const CarlesonSequence seq(w, scaled);
      CHECK(seq.condition_ratio() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(seq.condition_witness() == s.argmin);
    });
  }

  TEST_CASE("embedding bound on random instances") {
    for_trials(73, 60, [](CounterRng& rng, int) {
      const int d = 1 + static_cast<int>(rng.below(3));
      const int depth = 1 + static_cast<int>(rng.below(5));
      const CarlesonInstance inst = random_carleson_instance(rng, d, depth);
      const EmbeddingSides s = embedding_check(inst.weight, CarlesonSequence(inst.weight, inst.a), inst.f, inst.t);
      CHECK(s.lhs >= 0.0);
      CHECK(s.lhs <= s.rhs * (1 + 1e-9));
      CHECK(s.rhs == doctest::Approx(8.0 * inst.f.energy()));
    });
  }

  TEST_CASE("embedding fuzz bookkeeping") {
    const EmbeddingFuzzReport none = embedding_fuzz(5, 0, 2, 3);
    CHECK(none.trials == 0);
    CHECK(none.violations == 0);
    CHECK(none.argmax_trial == -1);
    CHECK(none.ratios.empty());

    const EmbeddingFuzzReport a = embedding_fuzz(5, 25, 2, 3);
    const EmbeddingFuzzReport b = embedding_fuzz(5, 25, 2, 3);
    CHECK(a.ratios == b.ratios);
    CHECK(a.violations == 0);
    REQUIRE(a.argmax_trial >= 0);
    CHECK(a.max_ratio == a.ratios[static_cast<std::size_t>(a.argmax_trial)]);
    CHECK(a.max_ratio <= 8.0);

    // Trial i is drawn from stream i alone.
    CounterRng rng(5, 7);
    const CarlesonInstance inst = random_carleson_instance(rng, 2, 3);
    const EmbeddingSides s = embedding_check(inst.weight, CarlesonSequence(inst.weight, inst.a), inst.f, inst.t);
    CHECK(s.lhs / inst.f.energy() == doctest::Approx(a.ratios[7]).epsilon(1e-14));
  }
}
