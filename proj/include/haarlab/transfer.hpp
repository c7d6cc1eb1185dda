#pragma once

// Arranging the dyadic cubes of [0,1)^p on [0,1).
//
// Line level l = p j + r describes a box obtained from a generation-j cube by halving axes
// 1..r once more; r = 0 boxes are cubes, the others are almost children. Interval bit s
// (counted from the most significant) splits axis (s - 1) mod p, low half to the left child,
// so a cube leaf's line index is the bit interleaving x_1, x_2, ..., x_p of its coordinates.
//
// Cube-grid data is stored in row-major coordinate order: leaf (x_1, ..., x_p) has index
// sum_a x_a 2^{depth (p - 1 - a)}.

#include <cstdint>
#include <vector>

#include "haarlab/dyadic.hpp"
#include "haarlab/rng.hpp"

namespace haarlab {

struct CubeBox {
  std::vector<int> level;           // halvings per axis
  std::vector<std::int64_t> coord;  // dyadic position per axis at that level

  bool is_cube() const;
  /// Volume in [0,1)^p.
  double measure() const;
  bool contains_leaf(const std::vector<std::int64_t>& leaf, int depth) const;
};

class CubeIntervalMap {
 public:
  /// ConfigInvalid unless p >= 1 and depth >= 0; BudgetExceeded when p > 3 or p depth > 12.
  CubeIntervalMap(int p, int depth);

  int p() const { return p_; }
  int depth() const { return depth_; }
  int line_depth() const { return p_ * depth_; }
  std::int64_t leaves() const { return static_cast<std::int64_t>(cube_to_line_.size()); }

  std::int64_t line_leaf(std::int64_t cube_leaf) const { return cube_to_line_[static_cast<std::size_t>(cube_leaf)]; }
  std::int64_t cube_leaf(std::int64_t line_leaf) const { return line_to_cube_[static_cast<std::size_t>(line_leaf)]; }

  /// The box an interval of the line tree stands for.
  CubeBox region(const DyadicInterval& line_node) const;
  /// The interval standing for the generation-j cube with the given coordinates.
  DyadicInterval line_node(int generation, const std::vector<std::int64_t>& coords) const;

  std::vector<std::int64_t> leaf_coords(std::int64_t cube_leaf) const;
  std::int64_t cube_leaf_index(const std::vector<std::int64_t>& coords) const;

 private:
  int p_ = 1;
  int depth_ = 0;
  std::vector<std::int64_t> cube_to_line_;
  std::vector<std::int64_t> line_to_cube_;
};

inline CubeIntervalMap build_map(int p, int depth) { return CubeIntervalMap(p, depth); }

/// Leaf-constant data on the cube grid: column c is cube leaf c (row-major).
struct CubeFunction {
  int p = 1;
  int depth = 0;
  CMatrix values;
};

struct CubeWeight {
  int p = 1;
  int depth = 0;
  std::vector<HpdMatrix> leaves;
  int dim() const { return leaves.empty() ? 0 : static_cast<int>(leaves.front().dim()); }
};

/// g on the line with <f>_Q = <g>_{Phi(Q)} for every cube and almost child Q.
GridFunction transfer_function(const CubeIntervalMap& map, const CubeFunction& f);
MatrixWeight transfer_weight(const CubeIntervalMap& map, const CubeWeight& w);

struct InflationReport {
  double cube_x = 1.0;          // over dyadic cubes (line levels divisible by p)
  double line_x = 1.0;          // over every interval, almost children included
  double almost_child_x = 1.0;  // over almost children only (1 when p = 1)
  double bound = 1.0;           // 2^{2(p-1)} cube_x
  double ratio = 1.0;           // line_x / cube_x
  bool ok = true;
  DyadicInterval witness;       // where line_x is attained
};

InflationReport inflation_check(const CubeIntervalMap& map, const CubeWeight& w, double tol = kPsdTol);

struct AlmostChildReport {
  double min_measure_ratio = 1.0;  // min |R| / |Q| over almost children R of cubes Q
  double min_integral_gap = 0.0;   // min eigenvalue of int_Q W - int_R W, scaled by ||int_Q W||
  std::int64_t checked = 0;
};

/// Almost children against their enclosing cube: |R| >= 2^{1-p} |Q| and int_R W <= int_Q W.
AlmostChildReport almost_child_check(const CubeIntervalMap& map, const MatrixWeight& line_weight);

/// Half the draws have independent random HPD leaves; the rest follow a multiplicative
/// cascade on the cube tree in a common frame, each generation scaling the 2^p children.
CubeWeight random_cube_weight(CounterRng& rng, int p, int depth, int dim);
CubeFunction random_cube_function(CounterRng& rng, int p, int depth, int dim);

}  // namespace haarlab
