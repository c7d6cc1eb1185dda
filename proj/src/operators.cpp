#include "haarlab/operators.hpp"

#include <cmath>
#include <set>
#include <string>

namespace haarlab {

MartingaleSymbol MartingaleSymbol::constant(int dim, int depth, const CMatrix& value) {
  require(value.rows() == dim && value.cols() == dim, ErrorCode::ShapeMismatch, "symbol value must be d x d");
  MartingaleSymbol s;
  s.dim = dim;
  s.depth = depth;
  s.sigma.assign(internal_count(depth), value);
  return s;
}

MartingaleSymbol MartingaleSymbol::adjoint() const {
  MartingaleSymbol out = *this;
  for (CMatrix& s : out.sigma) s.adjointInPlace();
  return out;
}

MartingaleSymbol MartingaleSymbol::scaled(Complex c) const {
  MartingaleSymbol out = *this;
  for (CMatrix& s : out.sigma) s *= c;
  return out;
}

double sigma_norm(const MartingaleSymbol& sigma, const MatrixWeight& weight) {
  require(sigma.depth == weight.depth() && sigma.dim == weight.dim(), ErrorCode::ShapeMismatch,
          "symbol and weight shapes differ");
  double best = 0.0;
  for (std::size_t h = 0; h < sigma.sigma.size(); ++h) {
    const HpdMatrix& u = weight.avg_at(h);
    best = std::max(best, op_norm(u.sqrt_matrix() * sigma.sigma[h] * u.inv_sqrt_matrix()));
  }
  return best;
}

GridFunction apply_martingale_transform(const MartingaleSymbol& sigma, const GridFunction& f) {
  require(sigma.depth == f.depth() && sigma.dim == f.dim(), ErrorCode::ShapeMismatch,
          "symbol and function shapes differ");
  HaarCoefficients c = haar_analyze(f);
  c.mean.setZero();
  for (std::size_t h = 0; h < sigma.sigma.size(); ++h)
    c.coeffs.col(static_cast<Eigen::Index>(h)) = sigma.sigma[h] * c.coeffs.col(static_cast<Eigen::Index>(h));
  return haar_synthesize(c);
}

// ---------------------------------------------------------------------------

HaarShiftSpec::HaarShiftSpec(int m, int n, std::vector<ShiftBlock> blocks) : m_(m), n_(n), blocks_(std::move(blocks)) {
  require(m >= 0 && n >= 0 && m < kMaxDepth && n < kMaxDepth, ErrorCode::ConfigInvalid, "shift parameters out of range");
  const double bound = coefficient_bound() + 1e-15;
  std::set<DyadicInterval> seen;
  for (const ShiftBlock& b : blocks_) {
    require(b.anchor.valid(), ErrorCode::OutOfTree, "invalid anchor interval");
    require(seen.insert(b.anchor).second, ErrorCode::ConfigInvalid, "duplicate anchor");
    require(b.coeffs.rows() == (Eigen::Index{1} << m) && b.coeffs.cols() == (Eigen::Index{1} << n),
            ErrorCode::ShapeMismatch, "coefficient block must be 2^m x 2^n");
    require(b.coeffs.cwiseAbs().maxCoeff() <= bound, ErrorCode::PreconditionViolated,
            "coefficient exceeds 2^{-(m+n)/2}");
  }
}

double HaarShiftSpec::coefficient_bound() const { return std::pow(2.0, -0.5 * (m_ + n_)); }

int HaarShiftSpec::required_depth() const {
  int level = -1;
  for (const ShiftBlock& b : blocks_) level = std::max(level, b.anchor.level);
  return level < 0 ? 0 : level + complexity();
}

HaarShiftSpec HaarShiftSpec::adjoint() const {
  std::vector<ShiftBlock> out;
  out.reserve(blocks_.size());
  for (const ShiftBlock& b : blocks_) out.push_back({b.anchor, b.coeffs.adjoint()});
  return HaarShiftSpec(n_, m_, std::move(out));
}

GridFunction apply_haar_shift(const HaarShiftSpec& shift, const GridFunction& f) {
  require(shift.required_depth() <= f.depth(), ErrorCode::DepthExceeded,
          "shift needs depth " + std::to_string(shift.required_depth()) + ", tree has " + std::to_string(f.depth()));
  const HaarCoefficients in = haar_analyze(f);
  HaarCoefficients out;
  out.depth = f.depth();
  out.mean = CVector::Zero(f.dim());
  out.coeffs = CMatrix::Zero(f.dim(), in.coeffs.cols());
  for (const ShiftBlock& b : shift.blocks()) {
    const auto sources = b.anchor.descendants(shift.m());
    const auto targets = b.anchor.descendants(shift.n());
    for (std::size_t s = 0; s < targets.size(); ++s) {
      auto target = out.at(targets[s]);
      for (std::size_t r = 0; r < sources.size(); ++r)
        target += b.coeffs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) * in.at(sources[r]);
    }
  }
  return haar_synthesize(out);
}

HaarShiftSpec slice(const HaarShiftSpec& shift, int j) {
  const int k = shift.complexity();
  require(j >= 0 && j < k, ErrorCode::IndexOutOfRange,
          "slice index " + std::to_string(j) + " outside [0, " + std::to_string(k) + ")");
  std::vector<ShiftBlock> kept;
  for (const ShiftBlock& b : shift.blocks())
    if (b.anchor.level % k == j) kept.push_back(b);
  return HaarShiftSpec(shift.m(), shift.n(), std::move(kept));
}

// ---------------------------------------------------------------------------

CMatrix weighted_dense_matrix(const LinearMap& op, const MatrixWeight& weight) {
  const int d = weight.dim();
  const Eigen::Index size = static_cast<Eigen::Index>(d) * weight.leaves();
  require(size <= kMaxDenseDimension, ErrorCode::DimensionTooLarge,
          "dense dimension " + std::to_string(size) + " exceeds " + std::to_string(kMaxDenseDimension));
  CMatrix dense(size, size);
  GridFunction basis(d, weight.depth());
  for (std::int64_t t = 0; t < weight.leaves(); ++t) {
    for (int i = 0; i < d; ++i) {
      basis.leaf(t) = weight.leaf_inv_sqrt(t).col(i);
      const GridFunction image = weight.multiply_sqrt(op(basis));
      dense.col(d * t + i) = image.values().reshaped();
      basis.leaf(t).setZero();
    }
  }
  return dense;
}

namespace {

// Largest singular value by power iteration on M* M from a fixed pseudo-random start.
double power_norm(const CMatrix& m, int& iterations) {
  CounterRng rng(0x9a17u, static_cast<std::uint64_t>(m.cols()));
  CVector x = random_complex_vector(rng, m.cols());
  x.normalize();
  double estimate = 0.0;
  iterations = 0;
  for (; iterations < 20000; ++iterations) {
    const CVector y = m * x;
    const double next = y.norm();
    if (next == 0.0) return 0.0;
    x = m.adjoint() * y;
    x.normalize();
    const bool done = iterations > 2 && std::abs(next - estimate) <= 1e-14 * next;
    estimate = next;
    if (done) break;
  }
  return estimate;
}

}  // namespace

WeightedNorm weighted_norm(const LinearMap& op, const MatrixWeight& weight) {
  const CMatrix dense = weighted_dense_matrix(op, weight);
  WeightedNorm out;
  Eigen::BDCSVD<CMatrix> svd(dense);
  out.norm = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  out.power_estimate = power_norm(dense, out.power_iterations);
  out.agree = std::abs(out.norm - out.power_estimate) <= 1e-6 * std::max(out.norm, 1e-300);
  if (out.norm == 0.0) out.agree = out.power_estimate == 0.0;
  return out;
}

WeightedNorm weighted_norm(const MartingaleSymbol& sigma, const MatrixWeight& weight) {
  return weighted_norm([&](const GridFunction& f) { return apply_martingale_transform(sigma, f); }, weight);
}

WeightedNorm weighted_norm(const HaarShiftSpec& shift, const MatrixWeight& weight) {
  return weighted_norm([&](const GridFunction& f) { return apply_haar_shift(shift, f); }, weight);
}

// ---------------------------------------------------------------------------

InequalitySides linearization_check(const GridFunction& f, const GridFunction& g, const MatrixWeight& weight) {
  require(f.depth() == weight.depth() && g.depth() == weight.depth() && f.dim() == weight.dim() &&
              g.dim() == weight.dim(),
          ErrorCode::ShapeMismatch, "function and weight shapes differ");
  const HaarCoefficients cf = haar_analyze(f);
  const HaarCoefficients cg = haar_analyze(g);
  InequalitySides out;
  const double d = weight.dim();
  for (Eigen::Index h = 0; h < cf.coeffs.cols(); ++h) {
    const HpdMatrix& u = weight.avg_at(static_cast<std::size_t>(h));
    const CVector a = cf.coeffs.col(h);
    const CVector b = cg.coeffs.col(h);
    const CVector pa = u.eigenvectors().adjoint() * a;
    const CVector pb = u.eigenvectors().adjoint() * b;
    out.lhs += (pa.cwiseAbs().array() * pb.cwiseAbs().array()).sum();
    out.rhs += d * (u.sqrt_matrix() * a).norm() * (u.inv_sqrt_matrix() * b).norm();
  }
  return out;
}

SliceBound slice_bound_check(const HaarShiftSpec& slice_spec, int j, const GridFunction& f, const GridFunction& g,
                             const MatrixWeight& weight) {
  const int k = slice_spec.complexity();
  require(j >= 0 && j < k, ErrorCode::IndexOutOfRange, "slice index outside [0, k)");
  require(f.depth() == weight.depth() && g.depth() == weight.depth() && f.dim() == weight.dim() &&
              g.dim() == weight.dim(),
          ErrorCode::ShapeMismatch, "function and weight shapes differ");
  for (const ShiftBlock& b : slice_spec.blocks())
    require(b.anchor.level % k == j, ErrorCode::PreconditionViolated, "anchor outside the slice residue class");
  const int depth = f.depth();
  require(slice_spec.required_depth() <= depth, ErrorCode::DepthExceeded, "tree too shallow for D_k(L)");

  std::set<DyadicInterval> anchors;
  for (const ShiftBlock& b : slice_spec.blocks()) anchors.insert(b.anchor);

  const CMatrix fa = node_averages(f);
  const CMatrix ga = node_averages(g);
  const double scale = std::ldexp(1.0, -k);

  SliceBound out;
  out.lhs = std::abs(pairing(apply_haar_shift(slice_spec, f), g));
  for (int level = j; level + k <= depth; level += k) {
    for (std::int64_t idx = 0; idx < (std::int64_t{1} << level); ++idx) {
      const DyadicInterval l{level, idx};
      const CMatrix& frame = weight.avg_at(l.heap_index()).eigenvectors();
      const CVector f_l = fa.col(l.heap_index());
      const CVector g_l = ga.col(l.heap_index());
      RVector sum_f = RVector::Zero(f.dim());
      RVector sum_g = RVector::Zero(f.dim());
      for (const DyadicInterval& p : l.descendants(k)) {
        sum_f += (frame.adjoint() * (fa.col(p.heap_index()) - f_l) * scale).cwiseAbs();
        sum_g += (frame.adjoint() * (ga.col(p.heap_index()) - g_l) * scale).cwiseAbs();
      }
      const double term = l.length() * sum_f.dot(sum_g);
      out.rhs += term;
      if (anchors.contains(l)) out.rhs_anchored += term;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

MartingaleSymbol random_symbol(CounterRng& rng, const MatrixWeight& weight) {
  const int d = weight.dim();
  MartingaleSymbol s = MartingaleSymbol::zero(d, weight.depth());
  for (std::size_t h = 0; h < s.sigma.size(); ++h) {
    CMatrix tau = random_complex_matrix(rng, d, d);
    tau *= rng.uniform(0.05, 1.0) / op_norm(tau);
    const HpdMatrix& u = weight.avg_at(h);
    s.sigma[h] = u.inv_sqrt_matrix() * tau * u.sqrt_matrix();
  }
  return s;
}

MartingaleSymbol random_sign_symbol(CounterRng& rng, int dim, int depth) {
  MartingaleSymbol s = MartingaleSymbol::identity(dim, depth);
  for (CMatrix& m : s.sigma) m *= static_cast<double>(rng.sign());
  return s;
}

namespace {

std::vector<DyadicInterval> pick_anchors(CounterRng& rng, int k, int depth, double density) {
  std::vector<DyadicInterval> anchors;
  for (int level = 0; level + k <= depth; ++level)
    for (std::int64_t idx = 0; idx < (std::int64_t{1} << level); ++idx)
      if (density >= 1.0 || rng.uniform() < density) anchors.push_back({level, idx});
  return anchors;
}

}  // namespace

HaarShiftSpec random_shift(CounterRng& rng, int m, int n, int depth, double density) {
  const int k = std::max(m, n) + 1;
  require(depth >= k, ErrorCode::DepthExceeded, "tree too shallow for the requested complexity");
  const double radius = std::pow(2.0, -0.5 * (m + n));
  std::vector<ShiftBlock> blocks;
  for (const DyadicInterval& l : pick_anchors(rng, k, depth, density)) {
    CMatrix c(Eigen::Index{1} << m, Eigen::Index{1} << n);
    for (Eigen::Index s = 0; s < c.cols(); ++s)
      for (Eigen::Index r = 0; r < c.rows(); ++r) c(r, s) = rng.disk(radius);
    blocks.push_back({l, std::move(c)});
  }
  return HaarShiftSpec(m, n, std::move(blocks));
}

HaarShiftSpec random_self_adjoint_shift(CounterRng& rng, int m, int depth, double density) {
  const int k = m + 1;
  require(depth >= k, ErrorCode::DepthExceeded, "tree too shallow for the requested complexity");
  const double radius = std::pow(2.0, -static_cast<double>(m));
  const Eigen::Index size = Eigen::Index{1} << m;
  std::vector<ShiftBlock> blocks;
  for (const DyadicInterval& l : pick_anchors(rng, k, depth, density)) {
    CMatrix c(size, size);
    for (Eigen::Index s = 0; s < size; ++s) {
      c(s, s) = rng.uniform(-radius, radius);
      for (Eigen::Index r = s + 1; r < size; ++r) {
        c(r, s) = rng.disk(radius);
        c(s, r) = std::conj(c(r, s));
      }
    }
    blocks.push_back({l, std::move(c)});
  }
  return HaarShiftSpec(m, m, std::move(blocks));
}

}  // namespace haarlab
