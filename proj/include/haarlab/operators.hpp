#pragma once

// Martingale transforms, cancellative Haar shifts and their slices, and
// weighted operator norms on the finite dyadic tree.

#include <functional>
#include <vector>

#include "haarlab/dyadic.hpp"
#include "haarlab/rng.hpp"

namespace haarlab {

/// One matrix sigma_I per internal node, heap-indexed.
struct MartingaleSymbol {
  int dim = 0;
  int depth = 0;
  std::vector<CMatrix> sigma;

  static MartingaleSymbol constant(int dim, int depth, const CMatrix& value);
  static MartingaleSymbol identity(int dim, int depth) { return constant(dim, depth, CMatrix::Identity(dim, dim)); }
  static MartingaleSymbol zero(int dim, int depth) { return constant(dim, depth, CMatrix::Zero(dim, dim)); }

  const CMatrix& at(const DyadicInterval& interval) const { return sigma[interval.heap_index()]; }
  CMatrix& at(const DyadicInterval& interval) { return sigma[interval.heap_index()]; }

  /// sigma*_I = (sigma_I)^*.
  MartingaleSymbol adjoint() const;
  MartingaleSymbol scaled(Complex c) const;
};

/// ||sigma||_{inf,W} = max_I ||<W>_I^{1/2} sigma_I <W>_I^{-1/2}||.
double sigma_norm(const MartingaleSymbol& sigma, const MatrixWeight& weight);

/// T_sigma f = sum_I sigma_I <f, h_I> h_I.
GridFunction apply_martingale_transform(const MartingaleSymbol& sigma, const GridFunction& f);

/// Coefficients c^L_{I,J} for one anchor L: row r is I = r-th interval of D_m(L),
/// column s is J = s-th interval of D_n(L), both left to right.
struct ShiftBlock {
  DyadicInterval anchor;
  CMatrix coeffs;
};

class HaarShiftSpec {
 public:
  HaarShiftSpec() = default;
  /// Validates shapes and |c| <= 2^{-(m+n)/2} + 1e-15; anchors must be distinct.
  HaarShiftSpec(int m, int n, std::vector<ShiftBlock> blocks);

  int m() const { return m_; }
  int n() const { return n_; }
  int complexity() const { return std::max(m_, n_) + 1; }
  double coefficient_bound() const;
  const std::vector<ShiftBlock>& blocks() const { return blocks_; }
  /// Smallest tree depth on which every anchor has D_k(L): max anchor level + k.
  int required_depth() const;

  /// c^L_{I,J} -> conj(c^L_{J,I}), with m and n swapped.
  HaarShiftSpec adjoint() const;

 private:
  int m_ = 0;
  int n_ = 0;
  std::vector<ShiftBlock> blocks_;
};

/// S f = sum_L sum_{I,J} c^L_{I,J} <f, h_I> h_J. Throws DepthExceeded if some anchor
/// lacks k generations below it in f's tree.
GridFunction apply_haar_shift(const HaarShiftSpec& shift, const GridFunction& f);

/// Blocks whose anchor level is j modulo k. Throws IndexOutOfRange unless 0 <= j < k.
HaarShiftSpec slice(const HaarShiftSpec& shift, int j);

using LinearMap = std::function<GridFunction(const GridFunction&)>;

struct WeightedNorm {
  double norm = 0.0;            // largest singular value of the dense matrix
  double power_estimate = 0.0;  // power iteration on M* M
  int power_iterations = 0;
  bool agree = false;           // |norm - power_estimate| <= 1e-6 norm
};

inline constexpr Eigen::Index kMaxDenseDimension = 4096;

/// Dense d 2^L x d 2^L matrix of W^{1/2} T W^{-1/2} in the leaf basis.
CMatrix weighted_dense_matrix(const LinearMap& op, const MatrixWeight& weight);

/// ||T||_{L^2(W) -> L^2(W)}. Throws DimensionTooLarge when d 2^L > 4096.
WeightedNorm weighted_norm(const LinearMap& op, const MatrixWeight& weight);
WeightedNorm weighted_norm(const MartingaleSymbol& sigma, const MatrixWeight& weight);
WeightedNorm weighted_norm(const HaarShiftSpec& shift, const MatrixWeight& weight);

struct InequalitySides {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// lhs = sum_I sum_i |<P_I^i <f,h_I>, P_I^i <g,h_I>>| with P_I^i the eigenprojections of <W>_I;
/// rhs = d sum_I ||<W>_I^{1/2} <f,h_I>|| ||<W>_I^{-1/2} <g,h_I>||.
InequalitySides linearization_check(const GridFunction& f, const GridFunction& g, const MatrixWeight& weight);

struct SliceBound {
  double lhs = 0.0;           // |<S_j f, g>|
  double rhs = 0.0;           // summed over every L in the residue class with D_k(L) in the tree
  double rhs_anchored = 0.0;  // the same sum restricted to the anchors present in the spec
};

/// |<S_j f, g>| against sum_L |L| sum_i sum_{P,Q in D_k(L)}
/// |<P_L^i (<f>_P - <f>_L)/2^k, P_L^i (<g>_Q - <g>_L)/2^k>|.
/// `j` is the residue class of the slice; PreconditionViolated if some anchor is outside it.
SliceBound slice_bound_check(const HaarShiftSpec& slice_spec, int j, const GridFunction& f, const GridFunction& g,
                             const MatrixWeight& weight);

// Random instances.

/// sigma_I = <W>_I^{-1/2} tau_I <W>_I^{1/2} with ||tau_I|| uniform in (0, 1], so sigma_norm <= 1.
MartingaleSymbol random_symbol(CounterRng& rng, const MatrixWeight& weight);
/// Scalar symbol sigma_I = +-1 times the identity.
MartingaleSymbol random_sign_symbol(CounterRng& rng, int dim, int depth);
/// Every admissible anchor kept with probability `density`; coefficients uniform on the disk
/// of radius 2^{-(m+n)/2}.
HaarShiftSpec random_shift(CounterRng& rng, int m, int n, int depth, double density = 1.0);
/// m = n and c^L_{I,J} = conj(c^L_{J,I}).
HaarShiftSpec random_self_adjoint_shift(CounterRng& rng, int m, int depth, double density = 1.0);

}  // namespace haarlab
