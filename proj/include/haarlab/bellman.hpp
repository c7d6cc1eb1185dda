#pragma once

// Bellman-domain geometry for the martingale-transform problem and the explicit
// Bellman function of the Carleson embedding.
//
// A point A = (f, F, U, g, G, V) lies in D_X when U, V > 0,
// I <= V^{1/2} U V^{1/2} <= X I, ||V^{-1/2} f||^2 <= F and ||U^{-1/2} g||^2 <= G.

#include <vector>

#include "haarlab/dyadic.hpp"
#include "haarlab/rng.hpp"

namespace haarlab {

struct BellmanPoint {
  CVector f;
  double F = 0.0;
  HpdMatrix U;
  CVector g;
  double G = 0.0;
  HpdMatrix V;

  int dim() const { return static_cast<int>(f.size()); }
};

/// theta a + (1 - theta) b, coordinate-wise.
BellmanPoint convex_combination(double theta, const BellmanPoint& a, const BellmanPoint& b);
/// sum_i w_i p_i / sum_i w_i for positive weights.
BellmanPoint weighted_mean(const std::vector<BellmanPoint>& points, const std::vector<double>& weights);

struct DomainMargins {
  double lambda_min = 0.0;  // spectrum of V^{1/2} U V^{1/2}
  double lambda_max = 0.0;
  double cs_f = 0.0;        // ||V^{-1/2} f||^2
  double cs_g = 0.0;        // ||U^{-1/2} g||^2
};

DomainMargins domain_margins(const BellmanPoint& a);

/// Membership in D_X. The spectral bounds are relaxed by tol max(1, lambda_max), the
/// Cauchy-Schwarz bounds by tol max(1, F) and tol max(1, G).
bool domain_check(const BellmanPoint& a, double x, double tol = kPsdTol);

struct SegmentReport {
  bool inside = true;
  double worst_theta = 0.0;     // theta of the sample with the largest lambda_max
  double worst_lambda = 0.0;    // that lambda_max
  int samples = 0;
  std::vector<double> failing_thetas;
};

/// Samples theta = i / (samples - 1), i = 0..samples-1 (plus 1/2 when samples is even) on the
/// segment [A_minus, A_plus] and checks each point against D_{factor X}. With factor 4 this is
/// the segment test for the endpoint-and-midpoint lemma; PreconditionViolated unless both
/// endpoints and the midpoint lie in D_X.
SegmentReport segment_in_domain(const BellmanPoint& a_plus, const BellmanPoint& a_minus, double x, double factor,
                                int samples = 33, double tol = kPsdTol, bool check_precondition = true);

inline SegmentReport segment_in_4x(const BellmanPoint& a_plus, const BellmanPoint& a_minus, double x,
                                   int samples = 33, double tol = kPsdTol) {
  return segment_in_domain(a_plus, a_minus, x, 4.0, samples, tol);
}

/// Node points of a tree built from a weight and two functions: f_I = <f>_I,
/// F_I = <||W^{1/2} f||^2>_I, U_I = <W>_I, g_I = <g>_I, G_I = <||W^{-1/2} g||^2>_I,
/// V_I = <W^{-1}>_I. Heap-indexed over the whole tree.
std::vector<BellmanPoint> bellman_tree_from_weight(const MatrixWeight& weight, const GridFunction& f,
                                                   const GridFunction& g);

/// Modified dynamics over a depth-k tree of node points rooted at I0.
struct DynamicsReport {
  int k = 0;
  double x = 1.0;
  std::vector<double> a_plus, a_minus;              // per leaf of D_k(I0)
  std::vector<BellmanPoint> plus, minus;            // A_I^{+-}, heap-indexed
  std::vector<double> theta_plus, theta_minus;      // heap-indexed; root entries are 1

  double a_min = 0.0, a_max = 0.0;
  double theta_min = 0.0, theta_max = 0.0;         // over non-root nodes
  double theta_sum_residual = 0.0;                  // max |theta_{I+} + theta_{I-} - 1|
  double product_residual = 0.0;                    // max |prod theta - 2^{-k} a| over leaves
  double convexity_residual = 0.0;                  // max relative |A_I - theta_+ A_+ - theta_- A_-|

  bool points_in_25x_9 = true;                      // every A_I^{+-} in D_{25X/9}
  bool midpoints_in_25x_9 = true;                   // midpoints of A_{I+}^{+-}, A_{I-}^{+-}
  bool segments_in_100x_9 = true;                   // those segments in D_{100X/9}
  double worst_lambda = 0.0;                        // largest lambda_max seen on any sampled segment
};

/// Requires the midpoint identity at every internal node (DynamicsViolated otherwise),
/// |alpha_I| <= 1/4 and sum alpha = 0 (PreconditionViolated otherwise).
DynamicsReport modified_dynamics(const std::vector<BellmanPoint>& tree, int k, const std::vector<double>& alpha,
                                 double x, double tol = kPsdTol, int segment_samples = 33);

/// Random feasible alpha: |alpha_I| <= 1/4 and sum zero up to round-off. A centered Gaussian
/// vector rescaled into the box, or (one draw in four) a balanced +-1/4 vertex.
std::vector<double> random_feasible_alpha(CounterRng& rng, std::size_t n);

// Midpoint-convexity identities used by the domain lemma.

/// (F1 + F2)/2 - ||((V1 + V2)/2)^{-1/2} (f1 + f2)/2||^2; nonnegative when each point satisfies
/// its own Cauchy-Schwarz bound.
double cauchy_schwarz_midpoint_gap(const HpdMatrix& v1, const CVector& f1, double big_f1, const HpdMatrix& v2,
                                   const CVector& f2, double big_f2);

struct C0MidpointReport {
  double lambda_min = 0.0;       // of Vm^{1/2} Um Vm^{1/2} with Um, Vm the midpoints
  double cubic_min = 0.0;        // min eigenvalue of T^3 + I - T^2 - T, T = V1^{1/2} V2^{-1} V1^{1/2}
  double factor_residual = 0.0;  // ||T^3 + I - T^2 - T - (T - I)(T + I)(T - I)||
};

C0MidpointReport c0_midpoint_check(const HpdMatrix& u1, const HpdMatrix& v1, const HpdMatrix& u2,
                                   const HpdMatrix& v2);

// ---------------------------------------------------------------------------
// Carleson Bellman function B(f, F, W, M) = 4 (F - <(W + M)^{-1} f, f>) on
// <W^{-1} f, f> <= F, 0 <= M <= W.

struct CarlesonBellmanPoint {
  CVector f;
  double F = 0.0;
  HpdMatrix W;
  HermMatrix M;
};

bool carleson_domain_check(const CarlesonBellmanPoint& p, double tol = kPsdTol);

/// Throws DomainViolation outside the domain.
double carleson_bellman(const CarlesonBellmanPoint& p, double tol = kPsdTol);

struct ConcavityGap {
  double gap = 0.0;   // B(A) - (B(A+) + B(A-))/2
  double quad = 0.0;  // (1/2) <(W + M~)^{-1} m (W + M~)^{-1} f, f>
  double scale = 1.0; // max(1, |B(A)|, quad)
  bool holds(double tol = kPsdTol) const { return gap >= quad - tol * scale; }
};

/// MidpointMismatch unless f, F, W are midpoints and M = m + (M+ + M-)/2;
/// PreconditionViolated unless 0 <= m <= W.
ConcavityGap carleson_concavity_gap(const CarlesonBellmanPoint& p, const CarlesonBellmanPoint& p_plus,
                                    const CarlesonBellmanPoint& p_minus, const HermMatrix& m,
                                    double tol = kPsdTol);

struct ResolventReport {
  bool psd = false;            // (W+M~)^{-1} - (W+M~+m)^{-1} - (1/2)(W+M~)^{-1} m (W+M~)^{-1} >= 0
  bool e_bounded = false;      // 0 <= E <= I, E = (W+M~)^{-1/2} m (W+M~)^{-1/2}
  double min_eigenvalue = 0.0; // of the difference
  double e_max = 0.0;
};

ResolventReport resolvent_inequality_check(const HpdMatrix& w, const HermMatrix& m_tilde, const HermMatrix& m,
                                           double tol = kPsdTol);

}  // namespace haarlab
