#include "haarlab/schur.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace haarlab {

namespace {

constexpr double kQuarter = 0.25;

bool is_power_of_two(Eigen::Index n) { return n >= 1 && (n & (n - 1)) == 0; }

Complex complex_dot(const std::vector<double>& alpha, const CVector& c) {
  Complex s = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) s += alpha[i] * c(static_cast<Eigen::Index>(i));
  return s;
}

// Leaf deviations (x_K - mean) / 2^k for the f or g coordinate of a depth-k tree.
CMatrix leaf_deviations(const std::vector<BellmanPoint>& tree, int k, bool use_f) {
  require(k >= 1 && k <= 6, ErrorCode::ConfigInvalid, "lambda matrices need 1 <= k <= 6");
  require(tree.size() == node_count(k), ErrorCode::ShapeMismatch, "tree must hold every node of D_n(I0), n <= k");
  const int d = tree.front().dim();
  const std::size_t first_leaf = internal_count(k);
  const auto leaves = static_cast<Eigen::Index>(leaf_count(k));
  CMatrix dev(d, leaves);
  for (Eigen::Index t = 0; t < leaves; ++t) {
    const BellmanPoint& p = tree[first_leaf + static_cast<std::size_t>(t)];
    dev.col(t) = use_f ? p.f : p.g;
  }
  const CVector mean = dev.rowwise().mean();
  const CVector& root = use_f ? tree.front().f : tree.front().g;
  const double scale = std::max(1.0, std::max(root.norm(), dev.cwiseAbs().maxCoeff()));
  require((mean - root).norm() <= 1e-9 * scale, ErrorCode::DynamicsViolated,
          "root point is not the mean of the leaves");
  dev.colwise() -= mean;
  return dev * std::ldexp(1.0, -k);
}

std::vector<double> combine(double t, double s1, const std::vector<double>& a, double s2,
                            const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = t * s1 * a[i] + (1.0 - t) * s2 * b[i];
  return out;
}

// max over beta in {+-1}^n of |sum_L beta_L c_L|: the optimal beta is the sign pattern of
// Re(e^{-i phi} c) for some phi, which only changes where some Re(e^{-i phi} c_L) = 0.
double max_abs_linear_on_signs(const CVector& c) {
  std::vector<double> critical;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (std::abs(c(i)) == 0.0) continue;
    double a = std::arg(c(i)) + std::numbers::pi / 2;
    a = std::fmod(a, std::numbers::pi);
    if (a < 0) a += std::numbers::pi;
    critical.push_back(a);
  }
  if (critical.empty()) return 0.0;
  std::sort(critical.begin(), critical.end());
  critical.push_back(critical.front() + std::numbers::pi);
  double best = 0.0;
  for (std::size_t j = 0; j + 1 < critical.size(); ++j) {
    const double phi = 0.5 * (critical[j] + critical[j + 1]);
    const Complex rot = std::polar(1.0, -phi);
    Complex s = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) s += (std::real(rot * c(i)) >= 0.0 ? 1.0 : -1.0) * c(i);
    best = std::max(best, std::abs(s));
  }
  return best;
}

RMatrix rotated_real_part(const CMatrix& values, double phi) {
  const CMatrix rotated = std::polar(1.0, -phi) * values;
  const RMatrix r = rotated.real();
  return 0.5 * (r + r.transpose());
}

// Swaps of a +1/4 and a -1/4 entry while |q| improves.
void improve_by_swaps(const LambdaMatrix& lambda, std::vector<double>& alpha, double& value) {
  const std::size_t n = alpha.size();
  bool improved = true;
  int rounds = 0;
  while (improved && rounds++ < 64) {
    improved = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (alpha[i] <= 0.0 || alpha[j] >= 0.0) continue;
        std::swap(alpha[i], alpha[j]);
        const double v = std::abs(quadratic_value(lambda, alpha));
        if (v > value * (1.0 + 1e-12)) {
          value = v;
          improved = true;
        } else {
          std::swap(alpha[i], alpha[j]);
        }
      }
    }
  }
}

}  // namespace

int LambdaMatrix::k() const { return std::countr_zero(static_cast<std::uint64_t>(size())); }

LambdaMatrix LambdaMatrix::rank_one(const CVector& m, const CVector& n) {
  require(m.size() == n.size() && is_power_of_two(m.size()) && m.size() >= 2, ErrorCode::ShapeMismatch,
          "rank-one factors need equal power-of-two length >= 2");
  require(std::abs(m.sum()) <= 1e-10 * m.cwiseAbs().sum() && std::abs(n.sum()) <= 1e-10 * n.cwiseAbs().sum(),
          ErrorCode::PreconditionViolated, "rank-one factors must have zero sum");
  LambdaMatrix out;
  out.kind = LambdaKind::RankOne;
  out.m = m;
  out.n = n;
  out.values = m * n.transpose();
  return out;
}

LambdaMatrix LambdaMatrix::symmetric(const CMatrix& values) {
  require(values.rows() == values.cols() && is_power_of_two(values.rows()) && values.rows() >= 2,
          ErrorCode::ShapeMismatch, "Lambda must be square of power-of-two size >= 2");
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  require((values - values.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale, ErrorCode::PreconditionViolated,
          "Lambda must be symmetric");
  require(values.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-10 * scale, ErrorCode::PreconditionViolated,
          "Lambda must have zero row sums");
  LambdaMatrix out;
  out.kind = LambdaKind::Symmetric;
  out.values = values;
  return out;
}

LambdaMatrix build_lambda(const std::vector<BellmanPoint>& tree, int k, int eigen_index) {
  require(!tree.empty(), ErrorCode::ShapeMismatch, "empty tree");
  const int d = tree.front().dim();
  require(eigen_index >= 0 && eigen_index < d, ErrorCode::EigenIndexOutOfRange,
          "eigen index " + std::to_string(eigen_index) + " outside [0, " + std::to_string(d) + ")");
  const CMatrix u = leaf_deviations(tree, k, true);
  const CMatrix v = leaf_deviations(tree, k, false);
  const CVector e = tree.front().U.eigenvectors().col(eigen_index);
  // <P a, P b> = (e* a) conj(e* b).
  const CVector m = (e.adjoint() * u).transpose();
  const CVector n = (e.adjoint() * v).transpose().conjugate();
  LambdaMatrix out;
  out.kind = LambdaKind::RankOne;
  out.m = m;
  out.n = n;
  out.values = m * n.transpose();
  return out;
}

LambdaMatrix build_lambda_even(const std::vector<BellmanPoint>& tree, int k) {
  require(!tree.empty(), ErrorCode::ShapeMismatch, "empty tree");
  const CMatrix u = leaf_deviations(tree, k, true);
  const CMatrix v = leaf_deviations(tree, k, false);
  // gram(L, K) = <u_K, v_L>.
  const CMatrix gram = v.adjoint() * u;
  LambdaMatrix out;
  out.kind = LambdaKind::Symmetric;
  out.values = gram.transpose() + gram;
  return out;
}

Complex quadratic_value(const LambdaMatrix& lambda, const std::vector<double>& alpha) {
  require(static_cast<Eigen::Index>(alpha.size()) == lambda.size(), ErrorCode::ShapeMismatch, "alpha length");
  if (lambda.kind == LambdaKind::RankOne && lambda.m.size() == lambda.size())
    return complex_dot(alpha, lambda.m) * complex_dot(alpha, lambda.n);
  const Eigen::Map<const RVector> a(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
  const CVector ac = a.cast<Complex>();
  return (ac.transpose() * lambda.values * ac)(0, 0);
}

std::vector<double> greedy_vertex(const Eigen::Ref<const RVector>& c) {
  const auto n = static_cast<std::size_t>(c.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return c(static_cast<Eigen::Index>(a)) > c(static_cast<Eigen::Index>(b));
  });
  std::vector<double> alpha(n, 0.0);
  for (std::size_t r = 0; r < n / 2; ++r) {
    alpha[order[r]] = kQuarter;
    alpha[order[n - 1 - r]] = -kQuarter;
  }
  return alpha;
}

std::vector<std::vector<double>> balanced_vertices(int size) {
  require(size >= 2 && size <= 16 && size % 2 == 0, ErrorCode::ConfigInvalid, "balanced patterns need even size <= 16");
  std::vector<std::vector<double>> out;
  const std::uint32_t limit = 1u << size;
  for (std::uint32_t mask = 0; mask < limit; ++mask) {
    if (std::popcount(mask) != size / 2) continue;
    std::vector<double> alpha(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) alpha[static_cast<std::size_t>(i)] = (mask >> i) & 1u ? kQuarter : -kQuarter;
    out.push_back(std::move(alpha));
  }
  return out;
}

AlphaResult exhaustive_alpha(const LambdaMatrix& lambda) {
  AlphaResult out;
  out.abs_sum = lambda.abs_sum();
  out.method = SearchMethod::Exhaustive;
  out.value = -1.0;
  for (auto& alpha : balanced_vertices(static_cast<int>(lambda.size()))) {
    const double v = std::abs(quadratic_value(lambda, alpha));
    if (v > out.value) {
      out.value = v;
      out.alpha = std::move(alpha);
    }
  }
  out.ratio = out.abs_sum > 0.0 ? out.value / out.abs_sum : 0.0;
  return out;
}

AlphaResult alpha_search_rank_one(const LambdaMatrix& lambda) {
  require(lambda.kind == LambdaKind::RankOne && lambda.m.size() == lambda.size(), ErrorCode::PreconditionViolated,
          "rank-one search needs the stored factors");
  require(lambda.size() <= 64, ErrorCode::ConfigInvalid, "rank-one search supports size <= 64");
  const Eigen::Index n = lambda.size();

  AlphaResult out;
  out.abs_sum = lambda.abs_sum();
  if (out.abs_sum == 0.0) {
    out.alpha = greedy_vertex(RVector::Zero(n));
    return out;
  }

  constexpr int kAngles = 8;
  std::vector<std::vector<double>> from_m, from_n;
  for (int j = 0; j < kAngles; ++j) {
    const Complex rot = std::polar(1.0, -std::numbers::pi * j / kAngles);
    from_m.push_back(greedy_vertex((rot * lambda.m).real()));
    from_n.push_back(greedy_vertex((rot * lambda.n).real()));
  }

  out.method = SearchMethod::Scan;
  out.value = -1.0;
  auto consider = [&](std::vector<double> alpha) {
    const double v = std::abs(complex_dot(alpha, lambda.m)) * std::abs(complex_dot(alpha, lambda.n));
    if (v > out.value) {
      out.value = v;
      out.alpha = std::move(alpha);
    }
  };
  for (const auto& a : from_m) consider(a);
  for (const auto& b : from_n) consider(b);
  for (const auto& a : from_m)
    for (const auto& b : from_n)
      for (double s1 : {1.0, -1.0})
        for (double s2 : {1.0, -1.0})
          for (int step = 1; step < 32; ++step) consider(combine(step / 32.0, s1, a, s2, b));

  out.ratio = out.value / out.abs_sum;
  if (out.ratio < kRankOneConstant && n <= 16) {
    AlphaResult full = exhaustive_alpha(lambda);
    if (full.value > out.value) out = std::move(full);
  }
  require(out.ratio >= kRankOneConstant, ErrorCode::SearchFailed,
          "no alpha reaches 4^-5 (best ratio " + std::to_string(out.ratio) + ")");
  return out;
}

EvenAlphaResult alpha_search_even(const LambdaMatrix& lambda, double k_g) {
  const Eigen::Index n = lambda.size();
  require(n <= 16, ErrorCode::ConfigInvalid, "even search supports size <= 16");
  EvenAlphaResult out;
  out.certificate.abs_sum = lambda.abs_sum();
  const double factor = 384.0 * k_g * std::sqrt(static_cast<double>(n));
  auto certify = [&](double value) {
    out.certificate.value = value;
    out.certificate.bound = factor * value;
    out.certificate.ok = out.certificate.abs_sum <= out.certificate.bound;
  };
  if (out.certificate.abs_sum == 0.0) {
    out.alpha = greedy_vertex(RVector::Zero(n));
    certify(0.0);
    out.certificate.ok = true;
    return out;
  }

  // Greedy vertices along the extreme eigenvectors of rotated real parts, then swap descent.
  std::vector<std::vector<double>> candidates;
  constexpr int kAngles = 8;
  for (int j = 0; j < kAngles; ++j) {
    const RMatrix r = rotated_real_part(lambda.values, std::numbers::pi * j / kAngles);
    Eigen::SelfAdjointEigenSolver<RMatrix> es(r);
    for (Eigen::Index col : {Eigen::Index{0}, n - 1}) {
      const RVector v = es.eigenvectors().col(col);
      candidates.push_back(greedy_vertex(v));
      candidates.push_back(greedy_vertex(-v));
    }
  }
  double best = -1.0;
  std::vector<double> best_alpha;
  std::vector<double> second_alpha;
  for (auto& c : candidates) {
    double v = std::abs(quadratic_value(lambda, c));
    improve_by_swaps(lambda, c, v);
    if (v > best) {
      second_alpha = best_alpha;
      best = v;
      best_alpha = c;
    } else if (second_alpha.empty()) {
      second_alpha = c;
    }
  }
  out.method = SearchMethod::Scan;
  if (!second_alpha.empty()) {
    for (double s1 : {1.0, -1.0})
      for (double s2 : {1.0, -1.0})
        for (int step = 1; step < 32; ++step) {
          std::vector<double> a = combine(step / 32.0, s1, best_alpha, s2, second_alpha);
          const double v = std::abs(quadratic_value(lambda, a));
          if (v > best) {
            best = v;
            best_alpha = std::move(a);
          }
        }
  }
  out.alpha = best_alpha;
  certify(best);
  if (!out.certificate.ok) {
    AlphaResult full = exhaustive_alpha(lambda);
    if (full.value > best) {
      out.alpha = full.alpha;
      out.method = SearchMethod::Exhaustive;
      certify(full.value);
    }
  }
  require(out.certificate.ok, ErrorCode::SearchFailed, "even alpha search missed the summability bound");
  return out;
}

double max_quadratic_on_p(const RMatrix& r) {
  const auto n = static_cast<int>(r.rows());
  require(r.rows() == r.cols() && n >= 1 && n <= 10, ErrorCode::ConfigInvalid, "face enumeration supports n <= 10");
  const RMatrix sym = 0.5 * (r + r.transpose());
  double best = -std::numeric_limits<double>::infinity();
  int faces = 1;
  for (int i = 0; i < n; ++i) faces *= 3;

  std::vector<int> label(static_cast<std::size_t>(n));
  for (int code = 0; code < faces; ++code) {
    int c = code;
    std::vector<int> free_idx;
    RVector alpha = RVector::Zero(n);
    double fixed_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      label[static_cast<std::size_t>(i)] = c % 3;
      c /= 3;
      if (label[static_cast<std::size_t>(i)] == 2) {
        free_idx.push_back(i);
      } else {
        alpha(i) = label[static_cast<std::size_t>(i)] == 0 ? -kQuarter : kQuarter;
        fixed_sum += alpha(i);
      }
    }
    const auto f = static_cast<Eigen::Index>(free_idx.size());
    if (f == 0) {
      if (std::abs(fixed_sum) > 1e-15) continue;
    } else {
      // Stationary point of alpha^T R alpha on the face: [2 R_FF, -1; 1^T, 0] [a_F; mu] = [-2 R_FS a_S; -sum a_S].
      RMatrix kkt = RMatrix::Zero(f + 1, f + 1);
      RVector rhs = RVector::Zero(f + 1);
      for (Eigen::Index a = 0; a < f; ++a) {
        for (Eigen::Index b = 0; b < f; ++b) kkt(a, b) = 2.0 * sym(free_idx[a], free_idx[b]);
        kkt(a, f) = -1.0;
        kkt(f, a) = 1.0;
        double cross = 0.0;
        for (int j = 0; j < n; ++j)
          if (label[static_cast<std::size_t>(j)] != 2) cross += sym(free_idx[a], j) * alpha(j);
        rhs(a) = -2.0 * cross;
      }
      rhs(f) = -fixed_sum;
      Eigen::FullPivLU<RMatrix> lu(kkt);
      lu.setThreshold(1e-12);
      // A singular system has no isolated stationary point; the maximum then sits on a smaller face.
      if (lu.rank() < f + 1) continue;
      const RVector sol = lu.solve(rhs);
      bool inside = true;
      for (Eigen::Index a = 0; a < f; ++a) {
        if (std::abs(sol(a)) > kQuarter + 1e-12) inside = false;
        alpha(free_idx[a]) = std::clamp(sol(a), -kQuarter, kQuarter);
      }
      if (!inside) continue;
    }
    best = std::max(best, alpha.dot(sym * alpha));
  }
  return best;
}

LambdaNorms lambda_norms(const LambdaMatrix& lambda, int resolution) {
  const Eigen::Index n = lambda.size();
  require(n >= 2 && n <= 16, ErrorCode::ConfigInvalid, "lambda norms support sizes 2..16");
  require(resolution >= 4, ErrorCode::ConfigInvalid, "angular resolution must be >= 4");
  LambdaNorms out;

  // ||Lambda||_2: alpha and -alpha give the same value, so alpha_0 = +1.
  double norm2 = 0.0;
  const std::uint32_t patterns = 1u << (n - 1);
  for (std::uint32_t mask = 0; mask < patterns; ++mask) {
    RVector alpha(n);
    alpha(0) = 1.0;
    for (Eigen::Index i = 1; i < n; ++i) alpha(i) = (mask >> (i - 1)) & 1u ? 1.0 : -1.0;
    const CVector row = (alpha.cast<Complex>().transpose() * lambda.values).transpose();
    norm2 = std::max(norm2, max_abs_linear_on_signs(row));
  }
  out.norm2 = {norm2, norm2};

  if (lambda.values.cwiseAbs().maxCoeff() == 0.0) {
    out.certified = true;
    return out;
  }
  if (n <= 4) {
    const bool real = lambda.values.imag().cwiseAbs().maxCoeff() == 0.0;
    const int steps = real ? 2 : resolution;
    double lo = 0.0;
    for (int j = 0; j < steps; ++j)
      lo = std::max(lo, max_quadratic_on_p(rotated_real_part(lambda.values, 2.0 * std::numbers::pi * j / steps)));
    out.norm1 = {lo, real ? lo : lo / std::cos(std::numbers::pi / steps)};
    out.certified = true;
  } else {
    double lo = exhaustive_alpha(lambda).value;
    LambdaMatrix copy = lambda;
    copy.kind = LambdaKind::Symmetric;
    try {
      lo = std::max(lo, alpha_search_even(copy).certificate.value);
    } catch (const Error&) {
      // the search only raises when it misses the summability bound; the exhaustive value stands
    }
    out.norm1 = {lo, std::numeric_limits<double>::infinity()};
  }
  return out;
}

CMatrix schur_multiply(const CMatrix& a, const CMatrix& m) {
  require(a.rows() == m.rows() && a.cols() == m.cols(), ErrorCode::ShapeMismatch, "Schur product shapes differ");
  return a.cwiseProduct(m);
}

SignMultiplierCheck sign_multiplier_check(const RMatrix& a, const CMatrix& m) {
  require(a.rows() == a.cols() && is_power_of_two(a.rows()), ErrorCode::PreconditionViolated,
          "sign matrix must be square of power-of-two size");
  require((a.array().abs() == 1.0).all(), ErrorCode::PreconditionViolated, "sign matrix entries must be +-1");
  SignMultiplierCheck out;
  const double base = op_norm(m);
  out.ratio = base > 0.0 ? op_norm(schur_multiply(a.cast<Complex>(), m)) / base : 0.0;
  out.bound = std::sqrt(static_cast<double>(a.rows()));
  out.ok = out.ratio <= out.bound + 1e-9;
  return out;
}

SummabilityCheck summability_check(const LambdaMatrix& lambda, double k_g, int resolution) {
  SummabilityCheck out;
  out.abs_sum = lambda.abs_sum();
  const LambdaNorms norms = lambda_norms(lambda, resolution);
  out.bound = 384.0 * k_g * std::sqrt(static_cast<double>(lambda.size())) * norms.norm1.lo;
  out.ok = out.abs_sum <= out.bound * (1.0 + 1e-12);
  return out;
}

LambdaMatrix random_rank_one_lambda(CounterRng& rng, int k) {
  require(k >= 1 && k <= 6, ErrorCode::ConfigInvalid, "rank-one lambda needs 1 <= k <= 6");
  const Eigen::Index n = Eigen::Index{1} << k;
  auto factor = [&]() {
    CVector v = random_complex_vector(rng, n);
    if (rng.below(4) == 0) v = v.real().cast<Complex>();
    std::vector<bool> keep(static_cast<std::size_t>(n), true);
    if (rng.below(4) == 0) {
      for (auto&& kept : keep) kept = rng.below(2) == 0;
      // The support needs two entries to carry a zero-sum vector.
      keep[0] = keep[static_cast<std::size_t>(n - 1)] = true;
    }
    Complex mean = 0.0;
    int count = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!keep[static_cast<std::size_t>(i)]) {
        v(i) = 0.0;
      } else {
        mean += v(i);
        ++count;
      }
    }
    mean /= static_cast<double>(count);
    for (Eigen::Index i = 0; i < n; ++i)
      if (keep[static_cast<std::size_t>(i)]) v(i) -= mean;
    return v;
  };
  const CVector m = factor();
  const CVector nn = factor();
  return LambdaMatrix::rank_one(m, nn);
}

LambdaMatrix random_symmetric_lambda(CounterRng& rng, int k, int dim) {
  require(k >= 1 && k <= 4 && dim >= 1, ErrorCode::ConfigInvalid, "symmetric lambda shape");
  const Eigen::Index n = Eigen::Index{1} << k;
  CMatrix u = random_complex_matrix(rng, dim, n);
  CMatrix v = random_complex_matrix(rng, dim, n);
  if (rng.below(4) == 0) {
    u = u.real().cast<Complex>();
    v = v.real().cast<Complex>();
  }
  u.colwise() -= CVector(u.rowwise().mean());
  v.colwise() -= CVector(v.rowwise().mean());
  const CMatrix gram = v.adjoint() * u;
  return LambdaMatrix::symmetric(gram.transpose() + gram);
}

RMatrix random_sign_matrix(CounterRng& rng, int k) {
  const Eigen::Index n = Eigen::Index{1} << k;
  RMatrix a(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) a(i, j) = rng.sign();
  return a;
}

}  // namespace haarlab
