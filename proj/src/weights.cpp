#include "haarlab/weights.hpp"

#include <algorithm>
#include <cmath>

namespace haarlab {

double a2_at(const MatrixWeight& weight, std::size_t heap) {
  return max_eigenvalue(congruence(weight.avg_inverse_at(heap).herm(), weight.avg_at(heap)));
}

A2Report a2_characteristic(const MatrixWeight& weight) {
  A2Report report;
  report.per_level.assign(static_cast<std::size_t>(weight.depth() + 1), 0.0);
  report.characteristic = -1.0;
  for (std::size_t h = 0; h < node_count(weight.depth()); ++h) {
    const DyadicInterval node = DyadicInterval::from_heap(h);
    const double x = a2_at(weight, h);
    auto& level_max = report.per_level[static_cast<std::size_t>(node.level)];
    level_max = std::max(level_max, x);
    if (x > report.characteristic) {
      report.characteristic = x;
      report.witness = node;
    }
  }
  return report;
}

TwoPointWeight two_point_weight(const HpdMatrix& u, const HpdMatrix& v, double tol) {
  require(u.dim() == v.dim(), ErrorCode::ShapeMismatch, "U and V differ in dimension");
  const Eigen::Index d = u.dim();
  const CMatrix u_root = u.sqrt_matrix();
  const CMatrix u_inv_root = u.inv_sqrt_matrix();
  const HermMatrix n = HermMatrix::from_hermitian_part(u_inv_root * v.inverse_matrix() * u_inv_root);

  Eigen::SelfAdjointEigenSolver<CMatrix> es(n.matrix());
  const RVector nu = es.eigenvalues();
  require(nu(d - 1) <= 1.0 + tol, ErrorCode::DomainViolation,
          "V^{1/2} U V^{1/2} is not >= I (N has eigenvalue " + std::to_string(nu(d - 1)) + ")");

  // (I - N)^{1/2}, round-off below zero clamped. W2 degenerates where this reaches 1,
  // i.e. where N is numerically zero.
  RVector root_gap(d);
  bool singular = false;
  for (Eigen::Index i = 0; i < d; ++i) {
    root_gap(i) = std::sqrt(std::max(1.0 - nu(i), 0.0));
    if (1.0 - root_gap(i) <= tol) singular = true;
  }
  const CMatrix r = es.eigenvectors() * root_gap.asDiagonal() * es.eigenvectors().adjoint();
  const CMatrix id = CMatrix::Identity(d, d);

  TwoPointWeight out;
  out.plus = HermMatrix::from_hermitian_part(u_root * (id + r) * u_root);
  out.minus = HermMatrix::from_hermitian_part(u_root * (id - r) * u_root);
  out.minus_singular = singular;
  return out;
}

GridFunction moment_free_direction(const MatrixWeight& weight) {
  const int d = weight.dim();
  const std::int64_t used = std::min<std::int64_t>(weight.leaves(), 2 * d + 1);
  const Eigen::Index unknowns = d * used;

  // Rows 0..d-1: sum_t phi_t = 0; rows d..2d-1: sum_t W_t phi_t = 0.
  CMatrix constraints = CMatrix::Zero(2 * d, unknowns);
  for (std::int64_t t = 0; t < used; ++t) {
    constraints.block(0, d * t, d, d) = CMatrix::Identity(d, d);
    constraints.block(d, d * t, d, d) = weight.leaf(t).matrix();
  }
  Eigen::JacobiSVD<CMatrix> svd(constraints, Eigen::ComputeFullV);
  const RVector& sv = svd.singularValues();
  const double cutoff = 1e-10 * std::max(1.0, sv.size() ? sv(0) : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  require(rank < unknowns, ErrorCode::GridTooCoarse,
          "moment constraints have only the zero solution on " + std::to_string(weight.leaves()) + " leaves");

  const CVector direction = svd.matrixV().col(unknowns - 1);
  GridFunction phi(d, weight.depth());
  for (std::int64_t t = 0; t < used; ++t) phi.leaf(t) = direction.segment(d * t, d);

  double energy = 0.0;
  for (std::int64_t t = 0; t < used; ++t) energy += quadratic_form(weight.leaf(t).matrix(), CVector(phi.leaf(t)));
  energy /= static_cast<double>(weight.leaves());
  phi *= 1.0 / std::sqrt(energy);
  return phi;
}

GridFunction function_with_averages(const MatrixWeight& weight, const CVector& f_avg, double energy, double tol) {
  require(f_avg.size() == weight.dim(), ErrorCode::ShapeMismatch, "mean vector dimension");
  const HpdMatrix& v = weight.avg_inverse(DyadicInterval::root());
  const CVector v_inv_f = v.solve(f_avg);
  const double floor = std::real(f_avg.dot(v_inv_f));
  require(energy >= floor - tol * std::max(1.0, std::abs(floor)), ErrorCode::InfeasibleMoments,
          "F = " + std::to_string(energy) + " is below ||V^{-1/2} f||^2 = " + std::to_string(floor));

  GridFunction f(weight.dim(), weight.depth());
  for (std::int64_t t = 0; t < f.leaves(); ++t) f.leaf(t) = weight.leaf_inverse(t) * v_inv_f;

  const double excess = energy - floor;
  if (excess > 0.0) {
    GridFunction phi = moment_free_direction(weight);
    phi *= std::sqrt(excess);
    f += phi;
  }
  return f;
}

MatrixWeight random_a2_weight(std::uint64_t seed, int dim, int depth, double target_x) {
  require(target_x >= 1.0, ErrorCode::ConfigInvalid, "target characteristic must be >= 1");
  require(dim >= 1 && depth >= 0 && depth <= kMaxDepth, ErrorCode::ConfigInvalid, "weight shape");
  CounterRng rng(seed, 0);
  const CMatrix frame = random_unitary(rng, dim);

  // Unit-amplitude walk: each split moves the two children by +-u, |u| in [0.5, 1.5].
  const std::size_t nodes = node_count(depth);
  Eigen::MatrixXd shape = Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(nodes));
  for (std::size_t h = 0; h < internal_count(depth); ++h) {
    for (int i = 0; i < dim; ++i) {
      const double step = rng.uniform(0.5, 1.5) * rng.sign();
      shape(i, static_cast<Eigen::Index>(2 * h + 1)) = shape(i, static_cast<Eigen::Index>(h)) + step;
      shape(i, static_cast<Eigen::Index>(2 * h + 2)) = shape(i, static_cast<Eigen::Index>(h)) - step;
    }
  }
  RVector offset(dim);
  for (int i = 0; i < dim; ++i) offset(i) = rng.uniform(-1.0, 1.0);

  const std::size_t first_leaf = internal_count(depth);
  const auto leaves_n = static_cast<Eigen::Index>(leaf_count(depth));
  const Eigen::MatrixXd leaf_shape = shape.middleCols(static_cast<Eigen::Index>(first_leaf), leaves_n);

  // All leaves share one frame, so the characteristic at scale s is the largest scalar
  // <e^{s x}>_I <e^{-s x}>_I over eigen-directions and nodes; it increases with s.
  auto characteristic = [&](double s) {
    double best = 1.0;
    for (int i = 0; i < dim; ++i) {
      std::vector<double> up(nodes), down(nodes);
      for (Eigen::Index t = 0; t < leaves_n; ++t) {
        up[first_leaf + static_cast<std::size_t>(t)] = std::exp(s * leaf_shape(i, t));
        down[first_leaf + static_cast<std::size_t>(t)] = std::exp(-s * leaf_shape(i, t));
      }
      for (std::size_t h = first_leaf; h-- > 0;) {
        up[h] = 0.5 * (up[2 * h + 1] + up[2 * h + 2]);
        down[h] = 0.5 * (down[2 * h + 1] + down[2 * h + 2]);
      }
      for (std::size_t h = 0; h < nodes; ++h) best = std::max(best, up[h] * down[h]);
    }
    return best;
  };

  double scale = 0.0;
  if (depth > 0 && target_x > 1.0) {
    double lo = 0.0, hi = 1.0;
    while (characteristic(hi) < target_x && hi < 1e3) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (characteristic(mid) < target_x ? lo : hi) = mid;
    }
    scale = 0.5 * (lo + hi);
  }

  std::vector<HpdMatrix> leaves;
  leaves.reserve(static_cast<std::size_t>(leaf_count(depth)));
  for (Eigen::Index t = 0; t < leaves_n; ++t) {
    const RVector values = (scale * leaf_shape.col(t) + offset).array().exp();
    leaves.push_back(HpdMatrix::from_hermitian_part(frame * values.asDiagonal() * frame.adjoint()));
  }
  return MatrixWeight(depth, std::move(leaves));
}

MatrixWeight random_generic_weight(CounterRng& rng, int dim, int depth, double log_spread) {
  std::vector<HpdMatrix> leaves;
  leaves.reserve(static_cast<std::size_t>(leaf_count(depth)));
  for (std::int64_t t = 0; t < leaf_count(depth); ++t) leaves.push_back(random_hpd(rng, dim, log_spread));
  return MatrixWeight(depth, std::move(leaves));
}

MatrixWeight random_test_weight(CounterRng& rng, int dim, int depth) {
  if (rng.below(2) == 0) return random_generic_weight(rng, dim, depth, rng.uniform(0.1, 2.0));
  return random_a2_weight(rng(), dim, depth, std::exp(rng.uniform(0.0, std::log(64.0))));
}

}  // namespace haarlab
