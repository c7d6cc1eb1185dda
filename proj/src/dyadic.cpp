#include "haarlab/dyadic.hpp"

#include <cmath>
#include <string>

namespace haarlab {

std::vector<DyadicInterval> DyadicInterval::descendants(int generations) const {
  std::vector<DyadicInterval> out;
  const std::int64_t count = std::int64_t{1} << generations;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t r = 0; r < count; ++r) out.push_back({level + generations, (index << generations) + r});
  return out;
}

void require_in_tree(const DyadicInterval& interval, int depth) {
  require(interval.valid() && interval.level <= depth, ErrorCode::OutOfTree,
          "interval (" + std::to_string(interval.level) + ", " + std::to_string(interval.index) +
              ") not in depth-" + std::to_string(depth) + " tree");
}

std::pair<std::int64_t, std::int64_t> leaf_range(const DyadicInterval& interval, int depth) {
  require_in_tree(interval, depth);
  const int shift = depth - interval.level;
  return {interval.index << shift, std::int64_t{1} << shift};
}

// ---------------------------------------------------------------------------

GridFunction::GridFunction(int dim, int depth) : depth_(depth) {
  require(dim >= 1 && depth >= 0 && depth <= kMaxDepth, ErrorCode::ConfigInvalid, "bad grid shape");
  values_ = CMatrix::Zero(dim, leaf_count(depth));
}

GridFunction::GridFunction(int depth, CMatrix leaf_values) : depth_(depth), values_(std::move(leaf_values)) {
  require(depth >= 0 && depth <= kMaxDepth && values_.rows() >= 1 && values_.cols() == leaf_count(depth),
          ErrorCode::ShapeMismatch, "leaf table must be d x 2^depth");
}

GridFunction GridFunction::constant(int depth, const CVector& value) {
  GridFunction f(static_cast<int>(value.size()), depth);
  f.values_.colwise() = value;
  return f;
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
  require(other.depth_ == depth_ && other.dim() == dim(), ErrorCode::ShapeMismatch, "grid shapes differ");
  values_ += other.values_;
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
  require(other.depth_ == depth_ && other.dim() == dim(), ErrorCode::ShapeMismatch, "grid shapes differ");
  values_ -= other.values_;
  return *this;
}

GridFunction& GridFunction::operator*=(Complex s) {
  values_ *= s;
  return *this;
}

Complex pairing(const GridFunction& f, const GridFunction& g) {
  require(f.depth() == g.depth() && f.dim() == g.dim(), ErrorCode::ShapeMismatch, "grid shapes differ");
  Complex total = 0.0;
  for (std::int64_t t = 0; t < f.leaves(); ++t) total += g.leaf(t).dot(f.leaf(t));
  return total / static_cast<double>(f.leaves());
}

CVector average(const GridFunction& f, const DyadicInterval& interval) {
  const auto [first, count] = leaf_range(interval, f.depth());
  return f.values().middleCols(first, count).rowwise().sum() / static_cast<double>(count);
}

CMatrix node_averages(const GridFunction& f) {
  const int depth = f.depth();
  CMatrix table(f.dim(), static_cast<Eigen::Index>(node_count(depth)));
  const std::size_t first_leaf = internal_count(depth);
  for (std::int64_t t = 0; t < f.leaves(); ++t) table.col(first_leaf + t) = f.leaf(t);
  for (std::size_t h = first_leaf; h-- > 0;) table.col(h) = 0.5 * (table.col(2 * h + 1) + table.col(2 * h + 2));
  return table;
}

CVector haar_coeff(const GridFunction& f, const DyadicInterval& interval) {
  require_in_tree(interval, f.depth());
  require(interval.level < f.depth(), ErrorCode::OutOfTree, "leaf intervals have no Haar function");
  return 0.5 * std::sqrt(interval.length()) * (average(f, interval.left()) - average(f, interval.right()));
}

HaarCoefficients haar_analyze(const GridFunction& f) {
  const CMatrix table = node_averages(f);
  HaarCoefficients out;
  out.depth = f.depth();
  out.mean = table.col(0);
  out.coeffs.resize(f.dim(), static_cast<Eigen::Index>(internal_count(f.depth())));
  for (std::size_t h = 0; h < internal_count(f.depth()); ++h) {
    const double scale = 0.5 * std::sqrt(DyadicInterval::from_heap(h).length());
    out.coeffs.col(h) = scale * (table.col(2 * h + 1) - table.col(2 * h + 2));
  }
  return out;
}

GridFunction haar_synthesize(const HaarCoefficients& c) {
  const int depth = c.depth;
  require(c.coeffs.cols() == static_cast<Eigen::Index>(internal_count(depth)) && c.coeffs.rows() == c.mean.size(),
          ErrorCode::ShapeMismatch, "coefficient table does not match depth");
  CMatrix table(c.mean.size(), static_cast<Eigen::Index>(node_count(depth)));
  table.col(0) = c.mean;
  for (std::size_t h = 0; h < internal_count(depth); ++h) {
    // a_{I+-} = a_I +- c_I / |I|^{1/2}
    const CVector step = c.coeffs.col(h) / std::sqrt(DyadicInterval::from_heap(h).length());
    table.col(2 * h + 1) = table.col(h) + step;
    table.col(2 * h + 2) = table.col(h) - step;
  }
  return GridFunction(depth, table.rightCols(leaf_count(depth)));
}

GridFunction haar_synthesize(const CVector& mean, const std::map<DyadicInterval, CVector>& coeffs, int depth) {
  HaarCoefficients c;
  c.depth = depth;
  c.mean = mean;
  c.coeffs = CMatrix::Zero(mean.size(), static_cast<Eigen::Index>(internal_count(depth)));
  for (std::size_t h = 0; h < internal_count(depth); ++h) {
    const DyadicInterval node = DyadicInterval::from_heap(h);
    const auto it = coeffs.find(node);
    require(it != coeffs.end(), ErrorCode::MissingCoefficient,
            "no coefficient for (" + std::to_string(node.level) + ", " + std::to_string(node.index) + ")");
    require(it->second.size() == mean.size(), ErrorCode::ShapeMismatch, "coefficient dimension");
    c.coeffs.col(h) = it->second;
  }
  return haar_synthesize(c);
}

// ---------------------------------------------------------------------------

MatrixWeight::MatrixWeight(int depth, std::vector<HpdMatrix> leaves) : depth_(depth), leaves_(std::move(leaves)) {
  require(depth >= 0 && depth <= kMaxDepth, ErrorCode::ConfigInvalid, "weight depth out of range");
  require(static_cast<std::int64_t>(leaves_.size()) == leaf_count(depth), ErrorCode::ShapeMismatch,
          "weight needs 2^depth leaves");
  dim_ = static_cast<int>(leaves_.front().dim());
  const std::size_t n_leaves = leaves_.size();
  leaf_sqrt_.reserve(n_leaves);
  leaf_inv_sqrt_.reserve(n_leaves);
  leaf_inverse_.reserve(n_leaves);
  for (const HpdMatrix& w : leaves_) {
    require(w.dim() == dim_, ErrorCode::ShapeMismatch, "weight leaves differ in dimension");
    leaf_sqrt_.push_back(w.sqrt_matrix());
    leaf_inv_sqrt_.push_back(w.inv_sqrt_matrix());
    leaf_inverse_.push_back(w.inverse_matrix());
  }

  const std::size_t nodes = node_count(depth);
  const std::size_t first_leaf = internal_count(depth);
  std::vector<CMatrix> sum(nodes), sum_inv(nodes);
  for (std::size_t t = 0; t < n_leaves; ++t) {
    sum[first_leaf + t] = leaves_[t].matrix();
    sum_inv[first_leaf + t] = leaf_inverse_[t];
  }
  for (std::size_t h = first_leaf; h-- > 0;) {
    sum[h] = 0.5 * (sum[2 * h + 1] + sum[2 * h + 2]);
    sum_inv[h] = 0.5 * (sum_inv[2 * h + 1] + sum_inv[2 * h + 2]);
  }
  avg_.reserve(nodes);
  avg_inv_.reserve(nodes);
  for (std::size_t h = 0; h < nodes; ++h) {
    if (h >= first_leaf) {
      avg_.push_back(leaves_[h - first_leaf]);
      avg_inv_.push_back(inverse(leaves_[h - first_leaf]));
    } else {
      avg_.push_back(HpdMatrix::from_hermitian_part(sum[h]));
      avg_inv_.push_back(HpdMatrix::from_hermitian_part(sum_inv[h]));
    }
  }
}

MatrixWeight MatrixWeight::constant(int depth, const HpdMatrix& value) {
  return MatrixWeight(depth, std::vector<HpdMatrix>(static_cast<std::size_t>(leaf_count(depth)), value));
}

const HpdMatrix& MatrixWeight::avg(const DyadicInterval& interval) const {
  require_in_tree(interval, depth_);
  return avg_[interval.heap_index()];
}

const HpdMatrix& MatrixWeight::avg_inverse(const DyadicInterval& interval) const {
  require_in_tree(interval, depth_);
  return avg_inv_[interval.heap_index()];
}

GridFunction MatrixWeight::apply_leafwise(const std::vector<CMatrix>& factors, const GridFunction& f) const {
  require(f.depth() == depth_ && f.dim() == dim_, ErrorCode::ShapeMismatch, "function and weight shapes differ");
  GridFunction out(dim_, depth_);
  for (std::int64_t t = 0; t < f.leaves(); ++t) out.leaf(t) = factors[static_cast<std::size_t>(t)] * f.leaf(t);
  return out;
}

GridFunction MatrixWeight::multiply(const GridFunction& f) const {
  require(f.depth() == depth_ && f.dim() == dim_, ErrorCode::ShapeMismatch, "function and weight shapes differ");
  GridFunction out(dim_, depth_);
  for (std::int64_t t = 0; t < f.leaves(); ++t) out.leaf(t) = leaf(t).matrix() * f.leaf(t);
  return out;
}

GridFunction MatrixWeight::multiply_sqrt(const GridFunction& f) const { return apply_leafwise(leaf_sqrt_, f); }
GridFunction MatrixWeight::multiply_inv_sqrt(const GridFunction& f) const { return apply_leafwise(leaf_inv_sqrt_, f); }
GridFunction MatrixWeight::multiply_inverse(const GridFunction& f) const { return apply_leafwise(leaf_inverse_, f); }

std::pair<const HpdMatrix&, const HpdMatrix&> weight_averages(const MatrixWeight& weight,
                                                              const DyadicInterval& interval) {
  return {weight.avg(interval), weight.avg_inverse(interval)};
}

}  // namespace haarlab
