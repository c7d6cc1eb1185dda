#pragma once

// Finite dyadic tree over [0,1): intervals, leaf-constant C^d functions,
// Haar analysis/synthesis, and matrix weights with cached node averages.
//
// Nodes are addressed by (level, index); level 0 is [0,1). The left child
// (level+1, 2k) plays the role of I+ and the right child (level+1, 2k+1) of I-,
// so h_I = |I|^{-1/2} (chi_left - chi_right).

#include <compare>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "haarlab/linalg.hpp"

namespace haarlab {

inline constexpr int kMaxDepth = 20;

struct DyadicInterval {
  int level = 0;
  std::int64_t index = 0;

  static constexpr DyadicInterval root() { return {0, 0}; }

  double length() const { return std::ldexp(1.0, -level); }
  double left_endpoint() const { return std::ldexp(static_cast<double>(index), -level); }

  DyadicInterval left() const { return {level + 1, 2 * index}; }
  DyadicInterval right() const { return {level + 1, 2 * index + 1}; }
  DyadicInterval parent() const { return {level - 1, index / 2}; }
  DyadicInterval sibling() const { return {level, index ^ 1}; }
  bool is_left() const { return (index & 1) == 0; }

  bool valid() const { return level >= 0 && index >= 0 && index < (std::int64_t{1} << level); }

  /// True when `other` is this interval or one of its descendants.
  bool contains(const DyadicInterval& other) const {
    return other.level >= level && (other.index >> (other.level - level)) == index;
  }

  /// Breadth-first position: 2^level - 1 + index.
  std::size_t heap_index() const { return (std::size_t{1} << level) - 1 + static_cast<std::size_t>(index); }

  static DyadicInterval from_heap(std::size_t h) {
    int level = 0;
    while (((std::size_t{1} << (level + 1)) - 1) <= h) ++level;
    return {level, static_cast<std::int64_t>(h - ((std::size_t{1} << level) - 1))};
  }

  /// Descendants n generations down (D_n(I)), left to right.
  std::vector<DyadicInterval> descendants(int generations) const;

  auto operator<=>(const DyadicInterval&) const = default;
};

inline std::size_t node_count(int depth) { return (std::size_t{1} << (depth + 1)) - 1; }
inline std::size_t internal_count(int depth) { return (std::size_t{1} << depth) - 1; }
inline std::int64_t leaf_count(int depth) { return std::int64_t{1} << depth; }

/// Leaf index range [first, first + count) covered by I in a depth-L tree.
std::pair<std::int64_t, std::int64_t> leaf_range(const DyadicInterval& interval, int depth);

void require_in_tree(const DyadicInterval& interval, int depth);

/// C^d-valued function constant on the 2^depth leaf intervals; column t holds leaf t.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(int dim, int depth);
  GridFunction(int depth, CMatrix leaf_values);

  static GridFunction constant(int depth, const CVector& value);

  int dim() const { return static_cast<int>(values_.rows()); }
  int depth() const { return depth_; }
  std::int64_t leaves() const { return values_.cols(); }

  const CMatrix& values() const { return values_; }
  CMatrix& values() { return values_; }
  auto leaf(std::int64_t t) const { return values_.col(t); }
  auto leaf(std::int64_t t) { return values_.col(t); }

  /// ||f||^2 in L^2([0,1)).
  double energy() const { return values_.squaredNorm() / static_cast<double>(leaves()); }

  GridFunction& operator+=(const GridFunction& other);
  GridFunction& operator-=(const GridFunction& other);
  GridFunction& operator*=(Complex s);
  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(Complex s, GridFunction a) { return a *= s; }

 private:
  int depth_ = 0;
  CMatrix values_;
};

/// <f, g> = integral of <f(t), g(t)>, linear in f.
Complex pairing(const GridFunction& f, const GridFunction& g);

CVector average(const GridFunction& f, const DyadicInterval& interval);

/// d x node_count(depth) table of all node averages, heap-indexed.
CMatrix node_averages(const GridFunction& f);

/// <f, h_I> = (|I|^{1/2} / 2) (<f>_{I+} - <f>_{I-}).
CVector haar_coeff(const GridFunction& f, const DyadicInterval& interval);

/// Mean over [0,1) plus the Haar coefficient of every internal node (heap-indexed columns).
struct HaarCoefficients {
  int depth = 0;
  CVector mean;
  CMatrix coeffs;

  int dim() const { return static_cast<int>(mean.size()); }
  auto at(const DyadicInterval& interval) const { return coeffs.col(interval.heap_index()); }
  auto at(const DyadicInterval& interval) { return coeffs.col(interval.heap_index()); }
};

HaarCoefficients haar_analyze(const GridFunction& f);
GridFunction haar_synthesize(const HaarCoefficients& coefficients);
/// Throws MissingCoefficient unless every internal node has an entry.
GridFunction haar_synthesize(const CVector& mean, const std::map<DyadicInterval, CVector>& coeffs, int depth);

/// Leaf-constant HPD weight with cached <W>_I and <W^{-1}>_I for every node.
class MatrixWeight {
 public:
  MatrixWeight() = default;
  MatrixWeight(int depth, std::vector<HpdMatrix> leaves);

  static MatrixWeight constant(int depth, const HpdMatrix& value);

  int dim() const { return dim_; }
  int depth() const { return depth_; }
  std::int64_t leaves() const { return static_cast<std::int64_t>(leaves_.size()); }

  const HpdMatrix& leaf(std::int64_t t) const { return leaves_[static_cast<std::size_t>(t)]; }
  const std::vector<HpdMatrix>& leaf_values() const { return leaves_; }
  const CMatrix& leaf_sqrt(std::int64_t t) const { return leaf_sqrt_[static_cast<std::size_t>(t)]; }
  const CMatrix& leaf_inv_sqrt(std::int64_t t) const { return leaf_inv_sqrt_[static_cast<std::size_t>(t)]; }
  const CMatrix& leaf_inverse(std::int64_t t) const { return leaf_inverse_[static_cast<std::size_t>(t)]; }

  const HpdMatrix& avg(const DyadicInterval& interval) const;
  const HpdMatrix& avg_inverse(const DyadicInterval& interval) const;
  const HpdMatrix& avg_at(std::size_t heap) const { return avg_[heap]; }
  const HpdMatrix& avg_inverse_at(std::size_t heap) const { return avg_inv_[heap]; }

  /// Leaf-wise products W^{power} f for power in {1, 1/2, -1/2, -1}.
  GridFunction multiply(const GridFunction& f) const;
  GridFunction multiply_sqrt(const GridFunction& f) const;
  GridFunction multiply_inv_sqrt(const GridFunction& f) const;
  GridFunction multiply_inverse(const GridFunction& f) const;

 private:
  GridFunction apply_leafwise(const std::vector<CMatrix>& factors, const GridFunction& f) const;

  int dim_ = 0;
  int depth_ = 0;
  std::vector<HpdMatrix> leaves_;
  std::vector<CMatrix> leaf_sqrt_;
  std::vector<CMatrix> leaf_inv_sqrt_;
  std::vector<CMatrix> leaf_inverse_;
  std::vector<HpdMatrix> avg_;
  std::vector<HpdMatrix> avg_inv_;
};

std::pair<const HpdMatrix&, const HpdMatrix&> weight_averages(const MatrixWeight& weight,
                                                              const DyadicInterval& interval);

}  // namespace haarlab
