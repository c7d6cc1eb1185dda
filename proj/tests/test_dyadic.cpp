#include "support.hpp"

#include "haarlab/dyadic.hpp"
#include "haarlab/json_io.hpp"
#include "haarlab/weights.hpp"

using namespace haarlab;
using namespace haarlab::test;

namespace {

GridFunction scalar_function(int depth, std::initializer_list<double> leaves) {
  CMatrix v(1, static_cast<Eigen::Index>(leaves.size()));
  Eigen::Index t = 0;
  for (double x : leaves) v(0, t++) = x;
  return GridFunction(depth, v);
}

GridFunction haar_function(const DyadicInterval& node, int depth) {
  GridFunction h(1, depth);
  const auto [lf, lc] = leaf_range(node.left(), depth);
  const auto [rf, rc] = leaf_range(node.right(), depth);
  const double amp = 1.0 / std::sqrt(node.length());
  for (std::int64_t t = 0; t < lc; ++t) h.leaf(lf + t)(0) = amp;
  for (std::int64_t t = 0; t < rc; ++t) h.leaf(rf + t)(0) = -amp;
  return h;
}

}  // namespace

TEST_SUITE("dyadic") {
  TEST_CASE("interval navigation") {
    const DyadicInterval i{3, 5};
    CHECK(i.left() == DyadicInterval{4, 10});
    CHECK(i.right() == DyadicInterval{4, 11});
    CHECK(i.left().parent() == i);
    CHECK(i.right().parent() == i);
    CHECK(i.length() == 0.125);
    CHECK(DyadicInterval::from_heap(i.heap_index()) == i);
    CHECK(i.contains(DyadicInterval{5, 21}));
    CHECK_FALSE(i.contains(DyadicInterval{5, 24}));
    const auto d2 = i.descendants(2);
    REQUIRE(d2.size() == 4);
    CHECK(d2.front() == DyadicInterval{5, 20});
    CHECK(d2.back() == DyadicInterval{5, 23});
    CHECK(leaf_range({1, 1}, 3) == std::pair<std::int64_t, std::int64_t>{4, 4});
    CHECK_THROWS_CODE(leaf_range({4, 0}, 3), ErrorCode::OutOfTree);
  }

  TEST_CASE("average examples") {
    const GridFunction c = GridFunction::constant(3, CVector::Constant(2, Complex(1.5, -2)));
    for (std::size_t h = 0; h < node_count(3); ++h)
      CHECK((average(c, DyadicInterval::from_heap(h)) - c.leaf(0)).norm() < 1e-15);
    const GridFunction ind = scalar_function(1, {1, 0});
    CHECK(average(ind, DyadicInterval::root())(0) == Complex(0.5));
    CHECK(average(ind, {1, 1})(0) == Complex(0.0));
    CHECK_THROWS_CODE(average(ind, {2, 0}), ErrorCode::OutOfTree);
  }

  TEST_CASE("haar_coeff examples") {
    CHECK(haar_coeff(GridFunction::constant(2, CVector::Ones(3)), DyadicInterval::root()).norm() == 0.0);
    CHECK(haar_coeff(scalar_function(1, {1, 0}), DyadicInterval::root())(0) == Complex(0.5));
    CHECK(haar_coeff(haar_function(DyadicInterval::root(), 1), DyadicInterval::root())(0) == Complex(1.0));
    CHECK_THROWS_CODE(haar_coeff(scalar_function(1, {1, 0}), {1, 0}), ErrorCode::OutOfTree);
  }

  TEST_CASE("haar_synthesize examples") {
    std::map<DyadicInterval, CVector> zero;
    for (std::size_t h = 0; h < internal_count(3); ++h) zero[DyadicInterval::from_heap(h)] = CVector::Zero(2);
    const CVector c = CVector::Constant(2, Complex(0.25, 1));
    const GridFunction g = haar_synthesize(c, zero, 3);
    for (std::int64_t t = 0; t < g.leaves(); ++t) CHECK((g.leaf(t) - c).norm() < 1e-15);

    std::map<DyadicInterval, CVector> one{{DyadicInterval::root(), CVector::Ones(1)}};
    const GridFunction h = haar_synthesize(CVector::Zero(1), one, 1);
    CHECK(h.leaf(0)(0) == Complex(1.0));
    CHECK(h.leaf(1)(0) == Complex(-1.0));

    zero.erase(DyadicInterval{2, 3});
    CHECK_THROWS_CODE(haar_synthesize(c, zero, 3), ErrorCode::MissingCoefficient);
  }

  TEST_CASE("analysis then synthesis reproduces f") {
    for_trials(21, 200, [](CounterRng& rng, int) {
      const int d = 1 + static_cast<int>(rng.below(4));
      const int depth = static_cast<int>(rng.below(9));
      const GridFunction f(depth, random_complex_matrix(rng, d, leaf_count(depth)));
      const GridFunction g = haar_synthesize(haar_analyze(f));
      CHECK(rel_err(g.values(), f.values()) <= 1e-12);
    });
  }

  TEST_CASE("Parseval on the finite tree") {
    for_trials(22, 200, [](CounterRng& rng, int) {
      const int d = 1 + static_cast<int>(rng.below(4));
      const int depth = static_cast<int>(rng.below(9));
      const GridFunction f(depth, random_complex_matrix(rng, d, leaf_count(depth)));
      const HaarCoefficients c = haar_analyze(f);
      double energy = c.mean.squaredNorm();
      for (std::size_t h = 0; h < internal_count(depth); ++h)
        energy += haar_coeff(f, DyadicInterval::from_heap(h)).squaredNorm();
      CHECK(std::abs(energy - f.energy()) <= 1e-10 * f.energy());
    });
  }

  TEST_CASE("Haar orthonormality on the grid") {
    const int depth = 4;
    for (std::size_t a = 0; a < internal_count(depth); ++a)
      for (std::size_t b = 0; b < internal_count(depth); ++b) {
        const Complex ip = pairing(haar_function(DyadicInterval::from_heap(a), depth),
                                   haar_function(DyadicInterval::from_heap(b), depth));
        CHECK(std::abs(ip - Complex(a == b ? 1.0 : 0.0)) <= 1e-12);
      }
  }

  TEST_CASE("weight_averages examples") {
    const MatrixWeight id = MatrixWeight::constant(3, HpdMatrix::identity(2));
    const auto [u, v] = weight_averages(id, {2, 1});
    CHECK(rel_err(u.matrix(), CMatrix::Identity(2, 2)) < 1e-15);
    CHECK(rel_err(v.matrix(), CMatrix::Identity(2, 2)) < 1e-15);

    const MatrixWeight w(1, {HpdMatrix(scalar(4)), HpdMatrix(scalar(1))});
    const auto [u1, v1] = weight_averages(w, DyadicInterval::root());
    CHECK(u1.matrix()(0, 0).real() == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(v1.matrix()(0, 0).real() == doctest::Approx(0.625).epsilon(1e-15));
    CHECK_THROWS_CODE(weight_averages(w, {2, 0}), ErrorCode::OutOfTree);
  }

  TEST_CASE("weight averages form a martingale and satisfy matrix Cauchy-Schwarz") {
    for_trials(23, 60, [](CounterRng& rng, int) {
      const int d = 1 + static_cast<int>(rng.below(4));
      const int depth = 1 + static_cast<int>(rng.below(6));
      const MatrixWeight w = random_test_weight(rng, d, depth);
      for (std::size_t h = 0; h < node_count(depth); ++h) {
        if (h < internal_count(depth)) {
          const CMatrix mid = 0.5 * (w.avg_at(2 * h + 1).matrix() + w.avg_at(2 * h + 2).matrix());
          CHECK(rel_err(w.avg_at(h).matrix(), mid) <= 1e-12);
        }
        CHECK(min_eigenvalue(congruence(w.avg_inverse_at(h).herm(), w.avg_at(h))) >= 1.0 - 1e-9);
      }
    });
  }

  TEST_CASE("JSON round trips are exact") {
    CounterRng rng(24);
    const MatrixWeight w = random_test_weight(rng, 3, 3);
    const MatrixWeight w2 = weight_from_json(Json::parse(weight_to_json(w).dump()));
    for (std::int64_t t = 0; t < w.leaves(); ++t) CHECK(w2.leaf(t).matrix() == w.leaf(t).matrix());
    const GridFunction f(3, random_complex_matrix(rng, 2, 8));
    CHECK(function_from_json(Json::parse(function_to_json(f).dump())).values() == f.values());
    CHECK_THROWS_CODE(weight_from_json(Json::parse(R"({"d": 1, "depth": 1, "leaves": []})")), ErrorCode::ConfigInvalid);
    CHECK_THROWS_CODE(matrix_from_json(Json::parse(R"({"d": 2, "re": [[1]]})")), ErrorCode::ConfigInvalid);
  }
}
