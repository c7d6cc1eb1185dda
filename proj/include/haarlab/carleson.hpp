#pragma once

// Matrix Carleson embedding on the finite dyadic tree.
//
// For PSD A_I the Carleson condition reads
//     (1/|I|) sum_{J in I} <W>_J A_J <W>_J <= <W>_I   for every node I,
// and the embedding bounds
//     t sum_I <(I + t <W>_I^{-1} M~_I)^{-1} A_I (I + t M~_I <W>_I^{-1})^{-1} <W^{1/2} f>_I, <W^{1/2} f>_I>
// by 8 ||f||^2, with M~_I = (1/|I|) sum_{J strictly in I} <W>_J A_J <W>_J.

#include <cstdint>
#include <vector>

#include "haarlab/dyadic.hpp"
#include "haarlab/rng.hpp"

namespace haarlab {

class CarlesonSequence {
 public:
  CarlesonSequence() = default;
  /// One PSD matrix per node of the weight's tree, heap-indexed. NotPositiveDefinite if some
  /// A_I has a negative eigenvalue beyond kPsdTol.
  CarlesonSequence(const MatrixWeight& weight, std::vector<HermMatrix> a);

  int dim() const { return dim_; }
  int depth() const { return depth_; }
  const std::vector<HermMatrix>& a() const { return a_; }
  const HermMatrix& a_at(std::size_t heap) const { return a_[heap]; }

  /// sum_{J in I} <W>_J A_J <W>_J, accumulated bottom-up as term + left + right.
  const CMatrix& node_sum(std::size_t heap) const { return node_sum_[heap]; }
  /// M_I = node_sum / |I|.
  CMatrix carleson_average(std::size_t heap) const;
  /// M~_I = (node_sum(I+) + node_sum(I-)) / |I|; zero at leaves.
  CMatrix m_tilde(std::size_t heap) const;

  /// Largest lambda_max(<W>_I^{-1/2} M_I <W>_I^{-1/2}) over the tree and the node attaining it.
  double condition_ratio() const { return worst_ratio_; }
  std::size_t condition_witness() const { return worst_node_; }
  bool condition_holds(double tol = kPsdTol) const { return worst_ratio_ <= 1.0 + tol; }

 private:
  int dim_ = 0;
  int depth_ = 0;
  std::vector<HermMatrix> a_;
  std::vector<CMatrix> node_sum_;
  double worst_ratio_ = 0.0;
  std::size_t worst_node_ = 0;
};

struct CarlesonScale {
  double c = 0.0;
  bool unbounded = false;  // every node sum vanishes; any c works
  std::size_t argmin = 0;  // node where {c A_I} meets the condition with equality
};

/// Largest c with {c A_I} Carleson. Depth-0 trees are allowed.
CarlesonScale carleson_scale(const MatrixWeight& weight, const std::vector<HermMatrix>& a);

struct EmbeddingSides {
  double lhs = 0.0;
  double rhs = 0.0;             // 8 ||f||^2
  double imag_residue = 0.0;    // largest |Im| of a summand before it is dropped
};

/// ConditionViolated unless the sequence is Carleson at tol; ConfigInvalid unless 0 < t <= 1.
EmbeddingSides embedding_check(const MatrixWeight& weight, const CarlesonSequence& a, const GridFunction& f,
                               double t, double tol = kPsdTol);

/// Carleson sequence with A_I = c_raw A_raw rescaled to sit on the boundary of the condition.
struct CarlesonInstance {
  MatrixWeight weight;
  std::vector<HermMatrix> a;
  GridFunction f;
  double t = 1.0;
};

/// Wishart A_I of random rank (some nodes zeroed), rescaled by carleson_scale; weight from
/// random_test_weight; f complex Gaussian; t drawn from {1/4, 1/2, 1}.
CarlesonInstance random_carleson_instance(CounterRng& rng, int dim, int depth);

struct EmbeddingFuzzReport {
  std::int64_t trials = 0;
  std::int64_t violations = 0;
  double max_ratio = 0.0;       // max lhs / ||f||^2
  std::int64_t argmax_trial = -1;
  std::vector<double> ratios;   // per trial, in trial order
  CarlesonInstance worst;       // the argmax instance
};

/// Trial i draws from CounterRng(seed, i).
EmbeddingFuzzReport embedding_fuzz(std::uint64_t seed, std::int64_t trials, int dim, int depth,
                                   double tol = kPsdTol);

}  // namespace haarlab
