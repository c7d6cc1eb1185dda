#include "haarlab/carleson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "haarlab/weights.hpp"

namespace haarlab {

namespace {

// <W>_J A_J <W>_J for every node, then bottom-up sums.
std::vector<CMatrix> carleson_node_sums(const MatrixWeight& weight, const std::vector<HermMatrix>& a) {
  const std::size_t nodes = node_count(weight.depth());
  require(a.size() == nodes, ErrorCode::ShapeMismatch, "Carleson sequence needs one matrix per tree node");
  std::vector<CMatrix> sums(nodes);
  for (std::size_t h = 0; h < nodes; ++h) {
    require(a[h].dim() == weight.dim(), ErrorCode::ShapeMismatch, "A_I dimension differs from the weight");
    const CMatrix& w = weight.avg_at(h).matrix();
    sums[h] = hermitian_part(w * a[h].matrix() * w);
  }
  for (std::size_t h = internal_count(weight.depth()); h-- > 0;) sums[h] += sums[2 * h + 1] + sums[2 * h + 2];
  return sums;
}

double node_ratio(const MatrixWeight& weight, const CMatrix& node_sum, std::size_t h) {
  const double inv_len = std::ldexp(1.0, DyadicInterval::from_heap(h).level);
  const CMatrix& w_inv_root = weight.avg_at(h).inv_sqrt_matrix();
  return max_eigenvalue(HermMatrix::from_hermitian_part(w_inv_root * (inv_len * node_sum) * w_inv_root));
}

}  // namespace

CarlesonSequence::CarlesonSequence(const MatrixWeight& weight, std::vector<HermMatrix> a)
    : dim_(weight.dim()), depth_(weight.depth()), a_(std::move(a)) {
  node_sum_ = carleson_node_sums(weight, a_);
  for (std::size_t h = 0; h < a_.size(); ++h) {
    require(is_psd(a_[h]), ErrorCode::NotPositiveDefinite, "A_I must be positive semidefinite");
    const double r = node_ratio(weight, node_sum_[h], h);
    if (h == 0 || r > worst_ratio_) {
      worst_ratio_ = r;
      worst_node_ = h;
    }
  }
}

CMatrix CarlesonSequence::carleson_average(std::size_t heap) const {
  return std::ldexp(1.0, DyadicInterval::from_heap(heap).level) * node_sum_[heap];
}

CMatrix CarlesonSequence::m_tilde(std::size_t heap) const {
  if (heap >= internal_count(depth_)) return CMatrix::Zero(dim_, dim_);
  return std::ldexp(1.0, DyadicInterval::from_heap(heap).level) * (node_sum_[2 * heap + 1] + node_sum_[2 * heap + 2]);
}

CarlesonScale carleson_scale(const MatrixWeight& weight, const std::vector<HermMatrix>& a) {
  const std::vector<CMatrix> sums = carleson_node_sums(weight, a);
  CarlesonScale out;
  double worst = 0.0;
  for (std::size_t h = 0; h < sums.size(); ++h) {
    const double r = node_ratio(weight, sums[h], h);
    if (r > worst) {
      worst = r;
      out.argmin = h;
    }
  }
  if (worst <= 0.0) {
    out.unbounded = true;
    out.c = std::numeric_limits<double>::infinity();
  } else {
    out.c = 1.0 / worst;
  }
  return out;
}

EmbeddingSides embedding_check(const MatrixWeight& weight, const CarlesonSequence& a, const GridFunction& f,
                               double t, double tol) {
  require(t > 0.0 && t <= 1.0, ErrorCode::ConfigInvalid, "t must lie in (0, 1]");
  require(a.dim() == weight.dim() && a.depth() == weight.depth() && f.dim() == weight.dim() &&
              f.depth() == weight.depth(),
          ErrorCode::ShapeMismatch, "weight, sequence and function shapes differ");
  require(a.condition_holds(tol), ErrorCode::ConditionViolated,
          "Carleson condition fails (ratio " + std::to_string(a.condition_ratio()) + ")");

  const CMatrix wf = node_averages(weight.multiply_sqrt(f));
  EmbeddingSides out;
  double sum = 0.0;
  for (std::size_t h = 0; h < node_count(weight.depth()); ++h) {
    // (I + t M~ W^{-1})^{-1} x = W (W + t M~)^{-1} x, and the left factor is its adjoint.
    const CMatrix& w = weight.avg_at(h).matrix();
    const CMatrix shifted = w + t * a.m_tilde(h);
    const CVector y = w * shifted.ldlt().solve(wf.col(static_cast<Eigen::Index>(h)));
    const Complex term = y.dot(a.a_at(h).matrix() * y);
    out.imag_residue = std::max(out.imag_residue, std::abs(term.imag()));
    sum += term.real();
  }
  out.lhs = t * sum;
  out.rhs = 8.0 * f.energy();
  return out;
}

CarlesonInstance random_carleson_instance(CounterRng& rng, int dim, int depth) {
  CarlesonInstance inst;
  inst.weight = random_test_weight(rng, dim, depth);
  const std::size_t nodes = node_count(depth);
  // Sparse sequences (few charged nodes) and dense ones both occur.
  const double density = rng.below(3) == 0 ? rng.uniform(0.05, 0.5) : 1.0;
  std::vector<HermMatrix> raw;
  raw.reserve(nodes);
  for (std::size_t h = 0; h < nodes; ++h) {
    if (rng.uniform() < density) {
      const auto rank = static_cast<Eigen::Index>(1 + rng.below(static_cast<std::uint64_t>(dim)));
      raw.push_back(random_wishart(rng, dim, rank));
    } else {
      raw.push_back(HermMatrix::zero(dim));
    }
  }
  if (std::all_of(raw.begin(), raw.end(), [](const HermMatrix& m) { return m.matrix().isZero(0.0); }))
    raw[0] = random_wishart(rng, dim, dim);

  const CarlesonScale scale = carleson_scale(inst.weight, raw);
  for (HermMatrix& m : raw) m = scale.c * m;
  inst.a = std::move(raw);

  inst.f = GridFunction(depth, random_complex_matrix(rng, dim, leaf_count(depth)));
  static constexpr double kTimes[] = {0.25, 0.5, 1.0};
  inst.t = kTimes[rng.below(3)];
  return inst;
}

EmbeddingFuzzReport embedding_fuzz(std::uint64_t seed, std::int64_t trials, int dim, int depth, double tol) {
  require(trials >= 0 && dim >= 1 && depth >= 0 && depth <= kMaxDepth, ErrorCode::ConfigInvalid,
          "embedding fuzz configuration");
  EmbeddingFuzzReport report;
  report.trials = trials;
  report.ratios.reserve(static_cast<std::size_t>(trials));
  for (std::int64_t i = 0; i < trials; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    CarlesonInstance inst = random_carleson_instance(rng, dim, depth);
    const CarlesonSequence seq(inst.weight, inst.a);
    const EmbeddingSides sides = embedding_check(inst.weight, seq, inst.f, inst.t, tol);
    const double energy = inst.f.energy();
    const double ratio = energy > 0.0 ? sides.lhs / energy : 0.0;
    if (sides.lhs > sides.rhs + tol * std::max(1.0, sides.rhs)) ++report.violations;
    report.ratios.push_back(ratio);
    if (report.argmax_trial < 0 || ratio > report.max_ratio) {
      report.max_ratio = ratio;
      report.argmax_trial = i;
      report.worst = std::move(inst);
    }
  }
  return report;
}

}  // namespace haarlab
