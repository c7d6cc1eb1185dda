#include "haarlab/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "haarlab/weights.hpp"

namespace haarlab {

bool CubeBox::is_cube() const {
  for (int l : level)
    if (l != level.front()) return false;
  return true;
}

double CubeBox::measure() const {
  int total = 0;
  for (int l : level) total += l;
  return std::ldexp(1.0, -total);
}

bool CubeBox::contains_leaf(const std::vector<std::int64_t>& leaf, int depth) const {
  for (std::size_t a = 0; a < level.size(); ++a)
    if ((leaf[a] >> (depth - level[a])) != coord[a]) return false;
  return true;
}

CubeIntervalMap::CubeIntervalMap(int p, int depth) : p_(p), depth_(depth) {
  require(p >= 1 && depth >= 0, ErrorCode::ConfigInvalid, "cube map needs p >= 1 and depth >= 0");
  require(p <= 3 && p * depth <= 12, ErrorCode::BudgetExceeded,
          "cube map limited to p <= 3 and p * depth <= 12 (got p=" + std::to_string(p) +
              ", depth=" + std::to_string(depth) + ")");
  const std::int64_t n = std::int64_t{1} << (p * depth);
  cube_to_line_.resize(static_cast<std::size_t>(n));
  line_to_cube_.resize(static_cast<std::size_t>(n));
  for (std::int64_t c = 0; c < n; ++c) {
    const std::vector<std::int64_t> x = leaf_coords(c);
    std::int64_t line = 0;
    for (int bit = depth - 1; bit >= 0; --bit)
      for (int a = 0; a < p; ++a) line = (line << 1) | ((x[static_cast<std::size_t>(a)] >> bit) & 1);
    cube_to_line_[static_cast<std::size_t>(c)] = line;
    line_to_cube_[static_cast<std::size_t>(line)] = c;
  }
}

std::vector<std::int64_t> CubeIntervalMap::leaf_coords(std::int64_t cube_leaf) const {
  std::vector<std::int64_t> x(static_cast<std::size_t>(p_));
  const std::int64_t mask = (std::int64_t{1} << depth_) - 1;
  for (int a = p_ - 1; a >= 0; --a) {
    x[static_cast<std::size_t>(a)] = cube_leaf & mask;
    cube_leaf >>= depth_;
  }
  return x;
}

std::int64_t CubeIntervalMap::cube_leaf_index(const std::vector<std::int64_t>& coords) const {
  std::int64_t c = 0;
  for (int a = 0; a < p_; ++a) c = (c << depth_) | coords[static_cast<std::size_t>(a)];
  return c;
}

CubeBox CubeIntervalMap::region(const DyadicInterval& line_node) const {
  require_in_tree(line_node, line_depth());
  CubeBox box;
  box.level.assign(static_cast<std::size_t>(p_), 0);
  box.coord.assign(static_cast<std::size_t>(p_), 0);
  for (int s = 0; s < line_node.level; ++s) {
    const std::int64_t bit = (line_node.index >> (line_node.level - 1 - s)) & 1;
    const auto a = static_cast<std::size_t>(s % p_);
    box.coord[a] = 2 * box.coord[a] + bit;
    ++box.level[a];
  }
  return box;
}

DyadicInterval CubeIntervalMap::line_node(int generation, const std::vector<std::int64_t>& coords) const {
  require(generation >= 0 && generation <= depth_ && static_cast<int>(coords.size()) == p_, ErrorCode::OutOfTree,
          "cube outside the grid");
  std::int64_t index = 0;
  for (int bit = generation - 1; bit >= 0; --bit)
    for (int a = 0; a < p_; ++a) {
      const std::int64_t x = coords[static_cast<std::size_t>(a)];
      require(x >= 0 && x < (std::int64_t{1} << generation), ErrorCode::OutOfTree, "cube coordinate");
      index = (index << 1) | ((x >> bit) & 1);
    }
  return {p_ * generation, index};
}

GridFunction transfer_function(const CubeIntervalMap& map, const CubeFunction& f) {
  require(f.p == map.p() && f.depth == map.depth() && f.values.cols() == map.leaves(), ErrorCode::ShapeMismatch,
          "cube function does not match the map");
  CMatrix line(f.values.rows(), f.values.cols());
  for (std::int64_t t = 0; t < map.leaves(); ++t) line.col(t) = f.values.col(map.cube_leaf(t));
  return GridFunction(map.line_depth(), std::move(line));
}

MatrixWeight transfer_weight(const CubeIntervalMap& map, const CubeWeight& w) {
  require(w.p == map.p() && w.depth == map.depth() && static_cast<std::int64_t>(w.leaves.size()) == map.leaves(),
          ErrorCode::ShapeMismatch, "cube weight does not match the map");
  std::vector<HpdMatrix> leaves;
  leaves.reserve(w.leaves.size());
  for (std::int64_t t = 0; t < map.leaves(); ++t) leaves.push_back(w.leaves[static_cast<std::size_t>(map.cube_leaf(t))]);
  return MatrixWeight(map.line_depth(), std::move(leaves));
}

InflationReport inflation_check(const CubeIntervalMap& map, const CubeWeight& w, double tol) {
  const MatrixWeight line = transfer_weight(map, w);
  const A2Report a2 = a2_characteristic(line);
  InflationReport out;
  out.line_x = a2.characteristic;
  out.witness = a2.witness;
  out.cube_x = 0.0;
  out.almost_child_x = map.p() == 1 ? 1.0 : 0.0;
  for (std::size_t level = 0; level < a2.per_level.size(); ++level) {
    if (level % static_cast<std::size_t>(map.p()) == 0)
      out.cube_x = std::max(out.cube_x, a2.per_level[level]);
    else
      out.almost_child_x = std::max(out.almost_child_x, a2.per_level[level]);
  }
  out.bound = std::ldexp(out.cube_x, 2 * (map.p() - 1));
  out.ratio = out.line_x / out.cube_x;
  out.ok = out.line_x <= out.bound + tol * std::max(1.0, out.bound);
  return out;
}

AlmostChildReport almost_child_check(const CubeIntervalMap& map, const MatrixWeight& line_weight) {
  require(line_weight.depth() == map.line_depth(), ErrorCode::ShapeMismatch, "line weight depth");
  AlmostChildReport out;
  out.min_integral_gap = std::numeric_limits<double>::infinity();
  const int p = map.p();
  for (std::size_t h = 0; h < node_count(map.line_depth()); ++h) {
    const DyadicInterval node = DyadicInterval::from_heap(h);
    const int r = node.level % p;
    if (r == 0) continue;
    // The enclosing cube is r levels up.
    const DyadicInterval cube{node.level - r, node.index >> r};
    const double ratio = map.region(node).measure() / map.region(cube).measure();
    out.min_measure_ratio = std::min(out.min_measure_ratio, ratio);
    const CMatrix int_q = cube.length() * line_weight.avg(cube).matrix();
    const CMatrix int_r = node.length() * line_weight.avg(node).matrix();
    const double gap = min_eigenvalue(HermMatrix::from_hermitian_part(int_q - int_r)) / op_norm(int_q);
    out.min_integral_gap = std::min(out.min_integral_gap, gap);
    ++out.checked;
  }
  if (out.checked == 0) out.min_integral_gap = 0.0;
  return out;
}

CubeWeight random_cube_weight(CounterRng& rng, int p, int depth, int dim) {
  const CubeIntervalMap map(p, depth);
  CubeWeight w;
  w.p = p;
  w.depth = depth;
  const std::int64_t n = map.leaves();
  w.leaves.reserve(static_cast<std::size_t>(n));
  if (rng.below(2) == 0) {
    const double spread = rng.uniform(0.1, 2.0);
    for (std::int64_t c = 0; c < n; ++c) w.leaves.push_back(random_hpd(rng, dim, spread));
    return w;
  }
  // Cascade: each generation multiplies every child's eigenvalues by exp(+-a u) in a shared frame.
  const CMatrix frame = random_unitary(rng, dim);
  const double amplitude = rng.uniform(0.2, 1.5);
  Eigen::MatrixXd log_eig = Eigen::MatrixXd::Zero(dim, n);
  for (int i = 0; i < dim; ++i) log_eig.row(i).setConstant(rng.uniform(-1.0, 1.0));
  for (int g = 1; g <= depth; ++g) {
    const std::int64_t cubes = std::int64_t{1} << (p * g);
    std::vector<double> step(static_cast<std::size_t>(cubes * dim));
    for (double& s : step) s = amplitude * rng.uniform(-1.0, 1.0);
    for (std::int64_t c = 0; c < n; ++c) {
      const std::vector<std::int64_t> x = map.leaf_coords(c);
      std::int64_t id = 0;
      for (int a = 0; a < p; ++a) id = (id << g) | (x[static_cast<std::size_t>(a)] >> (depth - g));
      for (int i = 0; i < dim; ++i) log_eig(i, c) += step[static_cast<std::size_t>(id * dim + i)];
    }
  }
  for (std::int64_t c = 0; c < n; ++c) {
    const RVector values = log_eig.col(c).array().exp();
    w.leaves.push_back(HpdMatrix::from_hermitian_part(frame * values.asDiagonal() * frame.adjoint()));
  }
  return w;
}

CubeFunction random_cube_function(CounterRng& rng, int p, int depth, int dim) {
  CubeFunction f;
  f.p = p;
  f.depth = depth;
  f.values = random_complex_matrix(rng, dim, std::int64_t{1} << (p * depth));
  return f;
}

}  // namespace haarlab
