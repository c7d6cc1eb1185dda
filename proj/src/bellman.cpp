#include "haarlab/bellman.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace haarlab {

namespace {

double rel_diff(const CMatrix& a, const CMatrix& b) {
  return (a - b).norm() / std::max(1.0, std::max(a.norm(), b.norm()));
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

double point_residual(const BellmanPoint& a, const BellmanPoint& b) {
  double r = rel_diff(a.f, b.f);
  r = std::max(r, rel_diff(a.F, b.F));
  r = std::max(r, rel_diff(a.U.matrix(), b.U.matrix()));
  r = std::max(r, rel_diff(a.g, b.g));
  r = std::max(r, rel_diff(a.G, b.G));
  return std::max(r, rel_diff(a.V.matrix(), b.V.matrix()));
}

}  // namespace

BellmanPoint convex_combination(double theta, const BellmanPoint& a, const BellmanPoint& b) {
  return weighted_mean({a, b}, {theta, 1.0 - theta});
}

BellmanPoint weighted_mean(const std::vector<BellmanPoint>& points, const std::vector<double>& weights) {
  require(!points.empty() && points.size() == weights.size(), ErrorCode::ShapeMismatch, "weighted mean inputs");
  const int d = points.front().dim();
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  require(total > 0.0, ErrorCode::PreconditionViolated, "weights must have positive sum");
  CVector f = CVector::Zero(d), g = CVector::Zero(d);
  CMatrix u = CMatrix::Zero(d, d), v = CMatrix::Zero(d, d);
  double big_f = 0.0, big_g = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weights[i] / total;
    if (w == 0.0) continue;
    f += w * points[i].f;
    big_f += w * points[i].F;
    u += w * points[i].U.matrix();
    g += w * points[i].g;
    big_g += w * points[i].G;
    v += w * points[i].V.matrix();
  }
  return {f, big_f, HpdMatrix::from_hermitian_part(u), g, big_g, HpdMatrix::from_hermitian_part(v)};
}

DomainMargins domain_margins(const BellmanPoint& a) {
  DomainMargins out;
  const RVector ev = congruence(a.U.herm(), a.V).eigenvalues();
  out.lambda_min = ev(0);
  out.lambda_max = ev(ev.size() - 1);
  out.cs_f = std::real(a.f.dot(a.V.solve(a.f)));
  out.cs_g = std::real(a.g.dot(a.U.solve(a.g)));
  return out;
}

bool domain_check(const BellmanPoint& a, double x, double tol) {
  const DomainMargins m = domain_margins(a);
  const double spectral_slack = tol * std::max(1.0, m.lambda_max);
  return m.lambda_min >= 1.0 - spectral_slack && m.lambda_max <= x + spectral_slack &&
         m.cs_f <= a.F + tol * std::max(1.0, std::abs(a.F)) && m.cs_g <= a.G + tol * std::max(1.0, std::abs(a.G));
}

SegmentReport segment_in_domain(const BellmanPoint& a_plus, const BellmanPoint& a_minus, double x, double factor,
                                int samples, double tol, bool check_precondition) {
  require(samples >= 2, ErrorCode::ConfigInvalid, "segment needs at least the two endpoints");
  if (check_precondition) {
    require(domain_check(a_plus, x, tol) && domain_check(a_minus, x, tol) &&
                domain_check(convex_combination(0.5, a_plus, a_minus), x, tol),
            ErrorCode::PreconditionViolated, "endpoints and midpoint must lie in D_X");
  }
  std::vector<double> thetas;
  for (int i = 0; i < samples; ++i) thetas.push_back(static_cast<double>(i) / (samples - 1));
  if (samples % 2 == 0) thetas.push_back(0.5);

  SegmentReport out;
  out.worst_lambda = -1.0;
  for (double theta : thetas) {
    const BellmanPoint p = convex_combination(theta, a_plus, a_minus);
    const double lambda = domain_margins(p).lambda_max;
    if (lambda > out.worst_lambda) {
      out.worst_lambda = lambda;
      out.worst_theta = theta;
    }
    if (!domain_check(p, factor * x, tol)) {
      out.inside = false;
      out.failing_thetas.push_back(theta);
    }
    ++out.samples;
  }
  return out;
}

std::vector<BellmanPoint> bellman_tree_from_weight(const MatrixWeight& weight, const GridFunction& f,
                                                   const GridFunction& g) {
  require(f.depth() == weight.depth() && g.depth() == weight.depth() && f.dim() == weight.dim() &&
              g.dim() == weight.dim(),
          ErrorCode::ShapeMismatch, "function and weight shapes differ");
  const int depth = weight.depth();
  const CMatrix fa = node_averages(f);
  const CMatrix ga = node_averages(g);

  // Leaf energies ||W^{1/2} f||^2 and ||W^{-1/2} g||^2, averaged bottom-up.
  std::vector<double> big_f(node_count(depth)), big_g(node_count(depth));
  const std::size_t first_leaf = internal_count(depth);
  for (std::int64_t t = 0; t < weight.leaves(); ++t) {
    big_f[first_leaf + t] = quadratic_form(weight.leaf(t).matrix(), CVector(f.leaf(t)));
    big_g[first_leaf + t] = quadratic_form(weight.leaf_inverse(t), CVector(g.leaf(t)));
  }
  for (std::size_t h = first_leaf; h-- > 0;) {
    big_f[h] = 0.5 * (big_f[2 * h + 1] + big_f[2 * h + 2]);
    big_g[h] = 0.5 * (big_g[2 * h + 1] + big_g[2 * h + 2]);
  }

  std::vector<BellmanPoint> tree;
  tree.reserve(node_count(depth));
  for (std::size_t h = 0; h < node_count(depth); ++h) {
    const auto col = static_cast<Eigen::Index>(h);
    tree.push_back({fa.col(col), big_f[h], weight.avg_at(h), ga.col(col), big_g[h], weight.avg_inverse_at(h)});
  }
  return tree;
}

DynamicsReport modified_dynamics(const std::vector<BellmanPoint>& tree, int k, const std::vector<double>& alpha,
                                 double x, double tol, int segment_samples) {
  require(k >= 1 && k < kMaxDepth, ErrorCode::ConfigInvalid, "k out of range");
  require(tree.size() == node_count(k), ErrorCode::ShapeMismatch, "tree must hold every node of D_n(I0), n <= k");
  const std::size_t leaves = static_cast<std::size_t>(leaf_count(k));
  require(alpha.size() == leaves, ErrorCode::ShapeMismatch, "alpha needs one entry per interval of D_k(I0)");

  for (std::size_t h = 0; h < internal_count(k); ++h) {
    const double r = point_residual(tree[h], convex_combination(0.5, tree[2 * h + 1], tree[2 * h + 2]));
    require(r <= tol, ErrorCode::DynamicsViolated,
            "midpoint identity fails at heap node " + std::to_string(h) + " (residual " + std::to_string(r) + ")");
  }
  double alpha_sum = 0.0;
  for (double a : alpha) {
    require(std::abs(a) <= 0.25 + 1e-15, ErrorCode::PreconditionViolated, "|alpha_I| must not exceed 1/4");
    alpha_sum += a;
  }
  require(std::abs(alpha_sum) <= 1e-12, ErrorCode::PreconditionViolated, "alpha must sum to zero");

  DynamicsReport out;
  out.k = k;
  out.x = x;
  const std::size_t nodes = node_count(k);
  const std::size_t first_leaf = internal_count(k);
  for (double a : alpha) {
    out.a_plus.push_back(1.0 + a);
    out.a_minus.push_back(1.0 - a);
  }
  const auto minmax_plus = std::minmax_element(out.a_plus.begin(), out.a_plus.end());
  const auto minmax_minus = std::minmax_element(out.a_minus.begin(), out.a_minus.end());
  out.a_min = std::min(*minmax_plus.first, *minmax_minus.first);
  out.a_max = std::max(*minmax_plus.second, *minmax_minus.second);

  // Node sums of a^{+-} over the leaves below each node.
  std::vector<double> sum_plus(nodes), sum_minus(nodes);
  for (std::size_t t = 0; t < leaves; ++t) {
    sum_plus[first_leaf + t] = out.a_plus[t];
    sum_minus[first_leaf + t] = out.a_minus[t];
  }
  for (std::size_t h = first_leaf; h-- > 0;) {
    sum_plus[h] = sum_plus[2 * h + 1] + sum_plus[2 * h + 2];
    sum_minus[h] = sum_minus[2 * h + 1] + sum_minus[2 * h + 2];
  }

  out.plus.resize(nodes);
  out.minus.resize(nodes);
  for (std::size_t h = 0; h < nodes; ++h) {
    const auto [first, count] = leaf_range(DyadicInterval::from_heap(h), k);
    std::vector<BellmanPoint> below(tree.begin() + static_cast<std::ptrdiff_t>(first_leaf + first),
                                    tree.begin() + static_cast<std::ptrdiff_t>(first_leaf + first + count));
    std::vector<double> wp(out.a_plus.begin() + first, out.a_plus.begin() + first + count);
    std::vector<double> wm(out.a_minus.begin() + first, out.a_minus.begin() + first + count);
    out.plus[h] = weighted_mean(below, wp);
    out.minus[h] = weighted_mean(below, wm);
  }

  out.theta_plus.assign(nodes, 1.0);
  out.theta_minus.assign(nodes, 1.0);
  out.theta_min = 1.0;
  out.theta_max = 0.0;
  for (std::size_t h = 1; h < nodes; ++h) {
    const std::size_t parent = (h - 1) / 2;
    out.theta_plus[h] = sum_plus[h] / sum_plus[parent];
    out.theta_minus[h] = sum_minus[h] / sum_minus[parent];
    out.theta_min = std::min({out.theta_min, out.theta_plus[h], out.theta_minus[h]});
    out.theta_max = std::max({out.theta_max, out.theta_plus[h], out.theta_minus[h]});
  }

  const double leaf_scale = std::ldexp(1.0, -k);
  for (std::size_t t = 0; t < leaves; ++t) {
    double prod_plus = 1.0, prod_minus = 1.0;
    for (std::size_t h = first_leaf + t; h > 0; h = (h - 1) / 2) {
      prod_plus *= out.theta_plus[h];
      prod_minus *= out.theta_minus[h];
    }
    out.product_residual = std::max({out.product_residual, std::abs(prod_plus - leaf_scale * out.a_plus[t]),
                                      std::abs(prod_minus - leaf_scale * out.a_minus[t])});
  }

  const double x_points = 25.0 / 9.0 * x;
  out.worst_lambda = 0.0;
  for (std::size_t h = 0; h < nodes; ++h) {
    if (!domain_check(out.plus[h], x_points, tol) || !domain_check(out.minus[h], x_points, tol))
      out.points_in_25x_9 = false;
    if (h >= first_leaf) continue;
    const std::size_t l = 2 * h + 1, r = 2 * h + 2;
    out.theta_sum_residual = std::max({out.theta_sum_residual, std::abs(out.theta_plus[l] + out.theta_plus[r] - 1.0),
                                       std::abs(out.theta_minus[l] + out.theta_minus[r] - 1.0)});
    const double conv_plus = point_residual(
        out.plus[h], weighted_mean({out.plus[l], out.plus[r]}, {out.theta_plus[l], out.theta_plus[r]}));
    const double conv_minus = point_residual(
        out.minus[h], weighted_mean({out.minus[l], out.minus[r]}, {out.theta_minus[l], out.theta_minus[r]}));
    out.convexity_residual = std::max({out.convexity_residual, conv_plus, conv_minus});

    for (const auto* side : {&out.plus, &out.minus}) {
      const BellmanPoint& left = (*side)[l];
      const BellmanPoint& right = (*side)[r];
      if (!domain_check(convex_combination(0.5, left, right), x_points, tol)) out.midpoints_in_25x_9 = false;
      const SegmentReport seg = segment_in_domain(left, right, x_points, 4.0, segment_samples, tol, false);
      if (!seg.inside) out.segments_in_100x_9 = false;
      out.worst_lambda = std::max(out.worst_lambda, seg.worst_lambda);
    }
  }
  return out;
}

std::vector<double> random_feasible_alpha(CounterRng& rng, std::size_t n) {
  std::vector<double> alpha(n, 0.0);
  if (n < 2) return alpha;
  if (rng.below(4) == 0) {
    for (std::size_t i = 0; i + 1 < n; i += 2) {
      alpha[i] = 0.25;
      alpha[i + 1] = -0.25;
    }
    for (std::size_t i = n - 1; i > 0; --i) std::swap(alpha[i], alpha[rng.below(i + 1)]);
    return alpha;
  }
  double mean = 0.0;
  for (double& a : alpha) {
    a = rng.normal();
    mean += a;
  }
  mean /= static_cast<double>(n);
  double peak = 0.0;
  for (double& a : alpha) {
    a -= mean;
    peak = std::max(peak, std::abs(a));
  }
  if (peak == 0.0) return std::vector<double>(n, 0.0);
  const double scale = 0.25 * rng.uniform(0.0, 1.0) / peak;
  for (double& a : alpha) a *= scale;
  return alpha;
}

double cauchy_schwarz_midpoint_gap(const HpdMatrix& v1, const CVector& f1, double big_f1, const HpdMatrix& v2,
                                   const CVector& f2, double big_f2) {
  const HpdMatrix v = HpdMatrix::from_hermitian_part(0.5 * (v1.matrix() + v2.matrix()));
  const CVector f = 0.5 * (f1 + f2);
  return 0.5 * (big_f1 + big_f2) - std::real(f.dot(v.solve(f)));
}

C0MidpointReport c0_midpoint_check(const HpdMatrix& u1, const HpdMatrix& v1, const HpdMatrix& u2,
                                   const HpdMatrix& v2) {
  C0MidpointReport out;
  const HpdMatrix um = HpdMatrix::from_hermitian_part(0.5 * (u1.matrix() + u2.matrix()));
  const HpdMatrix vm = HpdMatrix::from_hermitian_part(0.5 * (v1.matrix() + v2.matrix()));
  out.lambda_min = min_eigenvalue(congruence(um.herm(), vm));

  const CMatrix root = v1.sqrt_matrix();
  const CMatrix t = hermitian_part(root * v2.inverse_matrix() * root);
  const CMatrix id = CMatrix::Identity(t.rows(), t.cols());
  const CMatrix cubic = t * t * t + id - t * t - t;
  const CMatrix factored = (t - id) * (t + id) * (t - id);
  out.cubic_min = min_eigenvalue(HermMatrix::from_hermitian_part(cubic));
  out.factor_residual = (cubic - factored).norm() / std::max(1.0, cubic.norm());
  return out;
}

// ---------------------------------------------------------------------------

bool carleson_domain_check(const CarlesonBellmanPoint& p, double tol) {
  const double cs = std::real(p.f.dot(p.W.solve(p.f)));
  if (cs > p.F + tol * std::max(1.0, std::abs(p.F))) return false;
  return is_psd(p.M, tol) && is_psd(p.W.herm() - p.M, tol);
}

double carleson_bellman(const CarlesonBellmanPoint& p, double tol) {
  require(carleson_domain_check(p, tol), ErrorCode::DomainViolation, "point outside the Carleson Bellman domain");
  const HpdMatrix sum = HpdMatrix::from_hermitian_part(p.W.matrix() + p.M.matrix());
  return 4.0 * (p.F - std::real(p.f.dot(sum.solve(p.f))));
}

ConcavityGap carleson_concavity_gap(const CarlesonBellmanPoint& p, const CarlesonBellmanPoint& p_plus,
                                    const CarlesonBellmanPoint& p_minus, const HermMatrix& m, double tol) {
  const CMatrix m_tilde = 0.5 * (p_plus.M.matrix() + p_minus.M.matrix());
  const double mismatch =
      std::max({rel_diff(p.f, 0.5 * (p_plus.f + p_minus.f)), rel_diff(p.F, 0.5 * (p_plus.F + p_minus.F)),
                rel_diff(p.W.matrix(), 0.5 * (p_plus.W.matrix() + p_minus.W.matrix())),
                rel_diff(p.M.matrix(), m.matrix() + m_tilde)});
  require(mismatch <= 1e-10, ErrorCode::MidpointMismatch,
          "triple does not satisfy the midpoint relations (residual " + std::to_string(mismatch) + ")");
  require(is_psd(m, tol) && is_psd(p.W.herm() - m, tol), ErrorCode::PreconditionViolated, "need 0 <= m <= W");

  ConcavityGap out;
  const double b = carleson_bellman(p, tol);
  out.gap = b - 0.5 * (carleson_bellman(p_plus, tol) + carleson_bellman(p_minus, tol));
  const HpdMatrix r = HpdMatrix::from_hermitian_part(p.W.matrix() + m_tilde);
  const CVector rf = r.solve(p.f);
  out.quad = 0.5 * std::real(rf.dot(m.matrix() * rf));
  out.scale = std::max({1.0, std::abs(b), out.quad});
  return out;
}

ResolventReport resolvent_inequality_check(const HpdMatrix& w, const HermMatrix& m_tilde, const HermMatrix& m,
                                           double tol) {
  const HpdMatrix r = HpdMatrix::from_hermitian_part(w.matrix() + m_tilde.matrix());
  const HpdMatrix rm = HpdMatrix::from_hermitian_part(r.matrix() + m.matrix());
  const CMatrix r_inv = r.inverse_matrix();
  const HermMatrix diff =
      HermMatrix::from_hermitian_part(r_inv - rm.inverse_matrix() - 0.5 * r_inv * m.matrix() * r_inv);
  const HermMatrix e = HermMatrix::from_hermitian_part(r.inv_sqrt_matrix() * m.matrix() * r.inv_sqrt_matrix());

  ResolventReport out;
  out.min_eigenvalue = min_eigenvalue(diff);
  out.psd = out.min_eigenvalue >= -tol * std::max(1.0, r.min_eigenvalue() > 0 ? 1.0 / r.min_eigenvalue() : 1.0);
  const RVector ev = e.eigenvalues();
  out.e_max = ev(ev.size() - 1);
  out.e_bounded = ev(0) >= -tol && out.e_max <= 1.0 + tol;
  return out;
}

}  // namespace haarlab
