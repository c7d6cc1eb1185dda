#pragma once

#include <cstdint>
#include <vector>

#include "haarlab/dyadic.hpp"
#include "haarlab/rng.hpp"

namespace haarlab {

struct A2Report {
  double characteristic = 1.0;
  DyadicInterval witness;
  /// per_level[j] = max over level-j nodes.
  std::vector<double> per_level;
};

/// ||<W>_I^{1/2} <W^{-1}>_I^{1/2}||^2 = lambda_max(<W>_I^{1/2} <W^{-1}>_I <W>_I^{1/2}).
double a2_at(const MatrixWeight& weight, std::size_t heap);

/// Dyadic A2 characteristic: maximum over every node of the tree.
A2Report a2_characteristic(const MatrixWeight& weight);

struct TwoPointWeight {
  HermMatrix plus;   // W1, placed on the left child
  HermMatrix minus;  // W2, placed on the right child
  /// (I - N)^{1/2} has a numerically unit eigenvalue (N nearly singular), so W2 is only semidefinite.
  bool minus_singular = false;
};

/// W1,2 = U^{1/2} (I +- (I - N)^{1/2}) U^{1/2}, N = U^{-1/2} V^{-1} U^{-1/2};
/// (W1 + W2)/2 = U and (W1^{-1} + W2^{-1})/2 = V.
/// Throws DomainViolation when N has an eigenvalue above 1 + tol.
TwoPointWeight two_point_weight(const HpdMatrix& u, const HpdMatrix& v, double tol = kPsdTol);

/// f = W^{-1} V^{-1} f_avg + (F - ||V^{-1/2} f_avg||^2)^{1/2} phi with V = <W^{-1}> over [0,1),
/// where phi has zero mean, zero W-moment and unit weighted energy, so that <f> = f_avg
/// and <||W^{1/2} f||^2> = F.
GridFunction function_with_averages(const MatrixWeight& weight, const CVector& f_avg, double energy,
                                    double tol = kPsdTol);

/// The correction phi used by function_with_averages (supported on the first 2d+1 leaves).
GridFunction moment_free_direction(const MatrixWeight& weight);

/// Seeded weight: a fixed unitary frame Q per seed, and leaf eigenvalues following
/// independent multiplicative dyadic walks whose common amplitude is found by bisection so
/// the characteristic equals target_x up to round-off (1 when depth is 0).
MatrixWeight random_a2_weight(std::uint64_t seed, int dim, int depth, double target_x);

/// Weight with independent random HPD leaves (non-commuting in general).
MatrixWeight random_generic_weight(CounterRng& rng, int dim, int depth, double log_spread);

/// Either generator picked at random; the fuzz harnesses use this mix.
MatrixWeight random_test_weight(CounterRng& rng, int dim, int depth);

}  // namespace haarlab
