#pragma once

// Coefficient matrices Lambda = (lambda_KL) indexed by D_k(I0), the alpha-sequences that
// realize them, Schur multipliers, and the norms ||Lambda||_1, ||Lambda||_2.
//
// The feasible set for alpha throughout is P = { |alpha_I| <= 1/4, sum alpha_I = 0 }.

#include <cstdint>
#include <vector>

#include "haarlab/bellman.hpp"
#include "haarlab/rng.hpp"

namespace haarlab {

/// Grothendieck constant used by the even-kernel bound; a configured value, not computed.
inline constexpr double kGrothendieckDefault = 1.782;

enum class LambdaKind { RankOne, Symmetric };

struct LambdaMatrix {
  LambdaKind kind = LambdaKind::Symmetric;
  CMatrix values;
  CVector m, n;  // rank-one factors, lambda_KL = m_K n_L; empty for Symmetric

  Eigen::Index size() const { return values.rows(); }
  /// log2 of the size.
  int k() const;
  double abs_sum() const { return values.cwiseAbs().sum(); }

  /// PreconditionViolated unless m and n have equal power-of-two length and zero sum within
  /// 1e-10 of their l1 norms.
  static LambdaMatrix rank_one(const CVector& m, const CVector& n);
  /// PreconditionViolated unless symmetric with zero row sums within 1e-10 (relative to max |lambda|).
  static LambdaMatrix symmetric(const CMatrix& values);
};

/// lambda^i_KL = <P^i (f_K - f_I0)/2^k, P^i (g_L - g_I0)/2^k>, P^i the projection onto the i-th
/// eigenvector (ascending eigenvalues) of U_I0. `tree` holds every node of D_n(I0), n <= k,
/// heap-indexed. EigenIndexOutOfRange unless 0 <= i < d; DynamicsViolated if the root is not
/// the mean of the leaves.
LambdaMatrix build_lambda(const std::vector<BellmanPoint>& tree, int k, int eigen_index);

/// lambda_KL = <(f_K - f_I0)/2^k, (g_L - g_I0)/2^k> + <(f_L - f_I0)/2^k, (g_K - g_I0)/2^k>.
LambdaMatrix build_lambda_even(const std::vector<BellmanPoint>& tree, int k);

/// sum_{K,L} alpha_K alpha_L lambda_KL.
Complex quadratic_value(const LambdaMatrix& lambda, const std::vector<double>& alpha);

/// The vertex of P maximizing sum_I alpha_I c_I: the top half of c gets +1/4, the bottom half
/// -1/4, the median entry 0 when the length is odd.
std::vector<double> greedy_vertex(const Eigen::Ref<const RVector>& c);

/// Every balanced +-1/4 pattern (all vertices of P for even length). Length <= 16.
std::vector<std::vector<double>> balanced_vertices(int size);

enum class SearchMethod { Trivial, Scan, Exhaustive };

struct AlphaResult {
  std::vector<double> alpha;
  double value = 0.0;     // |sum alpha_K alpha_L lambda_KL|
  double abs_sum = 0.0;   // sum |lambda_KL|
  double ratio = 0.0;     // value / abs_sum; 0/0 counts as a pass
  SearchMethod method = SearchMethod::Trivial;
};

/// Alpha with |sum alpha alpha lambda| >= 4^{-5} sum |lambda| for rank-one Lambda. Scans convex
/// combinations of greedy vertices for rotated real parts of m and n, falling back to exhaustive
/// search when the scan misses the bound. SearchFailed if still below 4^{-5}. Size <= 64.
AlphaResult alpha_search_rank_one(const LambdaMatrix& lambda);
inline constexpr double kRankOneConstant = 1.0 / 1024.0;  // 4^{-5}

/// Best value of |sum alpha alpha lambda| over balanced +-1/4 patterns. Size <= 16.
AlphaResult exhaustive_alpha(const LambdaMatrix& lambda);

struct EvenCertificate {
  double value = 0.0;     // |sum alpha alpha lambda|
  double abs_sum = 0.0;
  double bound = 0.0;     // 384 K_G 2^{k/2} value
  bool ok = false;        // abs_sum <= bound
};

struct EvenAlphaResult {
  std::vector<double> alpha;
  EvenCertificate certificate;
  SearchMethod method = SearchMethod::Trivial;
};

/// Alpha with sum |lambda| <= 384 K_G 2^{k/2} |sum alpha alpha lambda|. Size <= 16.
EvenAlphaResult alpha_search_even(const LambdaMatrix& lambda, double k_g = kGrothendieckDefault);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct LambdaNorms {
  Interval norm1;           // sup over P of |alpha^T Lambda alpha|
  Interval norm2;           // sup over |alpha|, |beta| <= 1 of |alpha^T Lambda beta|
  bool certified = false;   // norm1 enclosure rigorous up to round-off; otherwise norm1.hi = inf
};

/// ||Lambda||_2 is exact (bilinear, so attained at box vertices). ||Lambda||_1 is certified for
/// size <= 4 by enumerating the faces of P for each rotation e^{-i phi}, phi on a grid of
/// `resolution` angles, which gives value <= sup <= value / cos(pi / resolution). Larger sizes
/// fall back to the even alpha search, a lower bound. Size <= 16.
LambdaNorms lambda_norms(const LambdaMatrix& lambda, int resolution = 720);

/// Exact sup over real quadratic forms on P: max alpha^T R alpha, by face enumeration.
double max_quadratic_on_p(const RMatrix& r);

/// (A o M)_ij = a_ij m_ij. ShapeMismatch on unequal shapes.
CMatrix schur_multiply(const CMatrix& a, const CMatrix& m);

struct SignMultiplierCheck {
  double ratio = 0.0;  // ||A o M|| / ||M||
  double bound = 0.0;  // 2^{k/2} for 2^k x 2^k sign matrices
  bool ok = false;
};

/// PreconditionViolated unless A is square of power-of-two size with entries +-1.
SignMultiplierCheck sign_multiplier_check(const RMatrix& a, const CMatrix& m);

struct SummabilityCheck {
  double abs_sum = 0.0;   // sum |lambda|
  double bound = 0.0;     // 384 K_G 2^{k/2} ||Lambda||_1 (lower end of the enclosure)
  bool ok = false;
};

/// sum |lambda_KL| <= 384 K_G 2^{k/2} ||Lambda||_1. Size <= 16.
SummabilityCheck summability_check(const LambdaMatrix& lambda, double k_g = kGrothendieckDefault,
                                   int resolution = 720);

// Random instances.

/// Zero-sum complex Gaussian factors; one draw in four zeroes a random subset of entries first.
LambdaMatrix random_rank_one_lambda(CounterRng& rng, int k);
/// lambda_KL = <u_K, v_L> + <u_L, v_K> with zero-sum u, v in C^d.
LambdaMatrix random_symmetric_lambda(CounterRng& rng, int k, int dim);
/// Entries +-1, size 2^k.
RMatrix random_sign_matrix(CounterRng& rng, int k);

}  // namespace haarlab
