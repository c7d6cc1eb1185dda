#include "haarlab/fuzz.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "haarlab/bellman.hpp"
#include "haarlab/carleson.hpp"
#include "haarlab/operators.hpp"
#include "haarlab/schur.hpp"
#include "haarlab/transfer.hpp"
#include "haarlab/weights.hpp"

namespace haarlab {

namespace {

int draw_dim(CounterRng& rng, int max_dim) { return 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, max_dim)))); }

int draw_between(CounterRng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, hi - lo + 1))));
}

GridFunction random_function(CounterRng& rng, int dim, int depth) {
  return GridFunction(depth, random_complex_matrix(rng, dim, leaf_count(depth)));
}

double relative(double err, double scale) { return err / std::max(1.0, scale); }

CheckOutcome upper(double observed, double bound, double tol) {
  return {observed, bound, observed <= bound + tol * std::max(1.0, std::abs(bound)), {}};
}

CheckOutcome at_most(double observed, double bound) { return {observed, bound, observed <= bound, {}}; }

Json point_to_json(const BellmanPoint& a) {
  return {{"f", vector_to_json(a.f)}, {"F", a.F}, {"U", matrix_to_json(a.U.matrix())},
          {"g", vector_to_json(a.g)}, {"G", a.G}, {"V", matrix_to_json(a.V.matrix())}};
}

BellmanPoint point_from_json(const Json& j) {
  BellmanPoint a;
  a.f = vector_from_json(j.at("f"));
  a.F = j.at("F").get<double>();
  a.U = HpdMatrix(matrix_from_json(j.at("U")));
  a.g = vector_from_json(j.at("g"));
  a.G = j.at("G").get<double>();
  a.V = HpdMatrix(matrix_from_json(j.at("V")));
  return a;
}

Json points_to_json(const std::vector<BellmanPoint>& points) {
  Json out = Json::array();
  for (const BellmanPoint& a : points) out.push_back(point_to_json(a));
  return out;
}

std::vector<BellmanPoint> points_from_json(const Json& j) {
  std::vector<BellmanPoint> out;
  for (const Json& a : j) out.push_back(point_from_json(a));
  return out;
}

Json cpoint_to_json(const CarlesonBellmanPoint& p) {
  return {{"f", vector_to_json(p.f)}, {"F", p.F}, {"W", matrix_to_json(p.W.matrix())}, {"M", matrix_to_json(p.M.matrix())}};
}

CarlesonBellmanPoint cpoint_from_json(const Json& j) {
  CarlesonBellmanPoint p;
  p.f = vector_from_json(j.at("f"));
  p.F = j.at("F").get<double>();
  p.W = HpdMatrix(matrix_from_json(j.at("W")));
  p.M = HermMatrix(matrix_from_json(j.at("M")));
  return p;
}

Json doubles_to_json(const std::vector<double>& v) { return Json(v); }

/// lambda_max of V^{1/2} U V^{1/2}.
double point_x(const BellmanPoint& a) { return domain_margins(a).lambda_max; }

/// Square root of a PSD matrix with round-off negatives clamped.
CMatrix psd_sqrt(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(m));
  const RVector values = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * values.asDiagonal() * es.eigenvectors().adjoint();
}

/// <W^{-1} f, f> times (1 + slack); one draw in three sits on the boundary.
double energy_above(CounterRng& rng, const HpdMatrix& w, const CVector& f) {
  const double base = std::real(f.dot(w.solve(f)));
  if (rng.below(3) == 0) return base;
  return base * (1.0 + rng.uniform(0.0, 2.0)) + (rng.below(4) == 0 ? rng.uniform() : 0.0);
}

CarlesonBellmanPoint random_cpoint(CounterRng& rng, int d) {
  CarlesonBellmanPoint p;
  p.W = random_hpd(rng, d, rng.uniform(0.1, 2.0));
  const HermMatrix c = random_contraction_psd(rng, d, rng.below(3) == 0);
  const double s = rng.below(4) == 0 ? 1.0 : rng.uniform();
  p.M = HermMatrix::from_hermitian_part(s * p.W.sqrt_matrix() * c.matrix() * p.W.sqrt_matrix());
  p.f = rng.below(8) == 0 ? CVector(CVector::Zero(d)) : random_complex_vector(rng, d);
  p.F = energy_above(rng, p.W, p.f);
  return p;
}

// ---------------------------------------------------------------------------

FuzzCheck haar_roundtrip() {
  return {"dyadic", "haar_roundtrip",
          [](CounterRng& rng, const FuzzConfig& cfg) {
            const int d = draw_dim(rng, cfg.d);
            const int depth = draw_between(rng, 0, cfg.depth);
            return Json{{"f", function_to_json(random_function(rng, d, depth))}};
          },
          [](const Json& in, double) {
            const GridFunction f = function_from_json(in.at("f"));
            const HaarCoefficients c = haar_analyze(f);
            const GridFunction g = haar_synthesize(c);
            const double norm = f.values().norm();
            const double recon = (g.values() - f.values()).norm() / std::max(norm, 1e-300);
            const double parseval = c.mean.squaredNorm() + c.coeffs.squaredNorm();
            const double energy_err = std::abs(parseval - f.energy()) / std::max(f.energy(), 1e-300);
            CheckOutcome out = at_most(std::max(recon, energy_err), 1e-10);
            out.detail = "reconstruction " + std::to_string(recon) + ", energy " + std::to_string(energy_err);
            return out;
          }};
}

FuzzCheck slice_sum() {
  return {"operators", "slice_sum",
          [](CounterRng& rng, const FuzzConfig& cfg) {
            const int m = draw_between(rng, 0, cfg.k - 1);
            const int n = draw_between(rng, 0, cfg.k - 1);
            const int k = std::max(m, n) + 1;
            const int depth = std::min(kMaxDepth, k + draw_between(rng, 0, std::max(0, cfg.depth - k)));
            const int d = draw_dim(rng, cfg.d);
            const HaarShiftSpec s = random_shift(rng, m, n, depth, rng.uniform(0.3, 1.0));
            return Json{{"shift", shift_to_json(s)}, {"f", function_to_json(random_function(rng, d, depth))}};
          },
          [](const Json& in, double) {
            const HaarShiftSpec s = shift_from_json(in.at("shift"));
            const GridFunction f = function_from_json(in.at("f"));
            const GridFunction full = apply_haar_shift(s, f);
            GridFunction sum(f.dim(), f.depth());
            for (int j = 0; j < s.complexity(); ++j) sum += apply_haar_shift(slice(s, j), f);
            const double scale = full.values().cwiseAbs().maxCoeff();
            const double err = (sum.values() - full.values()).cwiseAbs().maxCoeff();
            return at_most(relative(err, scale), 1e-12);
          }};
}

FuzzCheck two_point() {
  return {"weights", "two_point",
          [](CounterRng& rng, const FuzzConfig& cfg) {
            const int d = draw_dim(rng, cfg.d);
            const HpdMatrix u = random_hpd(rng, d, rng.uniform(0.1, 1.5));
            CMatrix v = u.inverse_matrix();
            if (rng.below(8) != 0) {
              const auto rank = static_cast<Eigen::Index>(1 + rng.below(static_cast<std::uint64_t>(d)));
              v += rng.uniform(0.05, 2.0) * random_wishart(rng, d, rank).matrix();
            }
            return Json{{"U", matrix_to_json(u.matrix())}, {"V", matrix_to_json(hermitian_part(v))}};
          },
          [](const Json& in, double) {
            const HpdMatrix u(matrix_from_json(in.at("U")));
            const HpdMatrix v(matrix_from_json(in.at("V")));
            const TwoPointWeight tp = two_point_weight(u, v);
            const double res_u = op_norm(CMatrix(0.5 * (tp.plus.matrix() + tp.minus.matrix()) - u.matrix())) /
                                 u.max_eigenvalue();
            double res_v = 0.0;
            if (!tp.minus_singular) {
              const CMatrix i1 = tp.plus.matrix().ldlt().solve(CMatrix::Identity(u.dim(), u.dim()));
              const CMatrix i2 = tp.minus.matrix().ldlt().solve(CMatrix::Identity(u.dim(), u.dim()));
              res_v = op_norm(CMatrix(0.5 * (i1 + i2) - v.matrix())) / v.max_eigenvalue();
            }
            CheckOutcome out = at_most(std::max(res_u, res_v), 1e-10);
            out.detail = "U residual " + std::to_string(res_u) + ", V residual " + std::to_string(res_v);
            return out;
          }};
}

FuzzCheck linearization() {
  return {"operators", "linearization",
          [](CounterRng& rng, const FuzzConfig& cfg) {
            const int d = draw_dim(rng, cfg.d);
            const int depth = draw_between(rng, 1, cfg.depth);
            const MatrixWeight w = random_test_weight(rng, d, depth);
            return Json{{"weight", weight_to_json(w)}, {"f", function_to_json(random_function(rng, d, depth))},
                        {"g", function_to_json(random_function(rng, d, depth))}};
          },
          [](const Json& in, double tol) {
            const InequalitySides s = linearization_check(function_from_json(in.at("f")), function_from_json(in.at("g")),
                                                          weight_from_json(in.at("weight")));
            return upper(s.lhs, s.rhs, tol);
          }};
}

FuzzCheck slice_bound() {
  return {"operators", "slice_bound",
          [](CounterRng& rng, const FuzzConfig& cfg) {
            const int m = draw_between(rng, 0, cfg.k - 1);
            const int n = draw_between(rng, 0, cfg.k - 1);
            const int k = std::max(m, n) + 1;
            const int depth = std::min(kMaxDepth, k + draw_between(rng, 0, std::max(0, std::min(cfg.depth, 7) - k)));
            const int d = draw_dim(rng, cfg.d);
            const int j = draw_between(rng, 0, k - 1);
            const HaarShiftSpec s = slice(random_shift(rng, m, n, depth, rng.uniform(0.3, 1.0)), j);
            const MatrixWeight w = random_test_weight(rng, d, depth);
            return Json{{"shift", shift_to_json(s)}, {"j", j}, {"weight", weight_to_json(w)},
                        {"f", function_to_json(random_function(rng, d, depth))},
                        {"g", function_to_json(random_function(rng, d, depth))}};
          },
          [](const Json& in, double tol) {
            const SliceBound b =
                slice_bound_check(shift_from_json(in.at("shift")), in.at("j").get<int>(), function_from_json(in.at("f")),
                                  function_from_json(in.at("g")), weight_from_json(in.at("weight")));
            return upper(b.lhs, b.rhs, tol);
          }};
}

// Triples either from the node averages of a random weight or from the two-point construction.
FuzzCheck segment() {
  return {"bellman", "segment",
          [](CounterRng& rng, const FuzzConfig& cfg) {
            const int d = draw_dim(rng, cfg.d);
            if (rng.below(2) == 0) {
              const HpdMatrix u = random_hpd(rng, d, rng.uniform(0.1, 1.5));
              const CMatrix v = u.inverse_matrix() + rng.uniform(0.05, 3.0) * random_wishart(rng, d, d).matrix();
              const TwoPointWeight tp = two_point_weight(u, HpdMatrix::from_hermitian_part(v));
              if (!tp.minus_singular) {
                std::vector<BellmanPoint> ends;
                for (const HermMatrix* w : {&tp.plus, &tp.minus}) {
                  BellmanPoint a;
                  a.U = HpdMatrix(*w);
                  a.V = HpdMatrix::from_hermitian_part(a.U.inverse_matrix());
                  a.f = random_complex_vector(rng, d);
                  a.g = random_complex_vector(rng, d);
                  a.F = std::real(a.f.dot(a.U.matrix() * a.f)) * (rng.below(3) == 0 ? 1.0 : 1.0 + rng.uniform());
                  a.G = std::real(a.g.dot(a.U.solve(a.g))) * (rng.below(3) == 0 ? 1.0 : 1.0 + rng.uniform());
                  ends.push_back(std::move(a));
                }
                return Json{{"plus", point_to_json(ends[0])}, {"minus", point_to_json(ends[1])}};
              }
            }
            const int depth = draw_between(rng, 1, cfg.depth);
            const MatrixWeight w = random_test_weight(rng, d, depth);
            const auto tree = bellman_tree_from_weight(w, random_function(rng, d, depth), random_function(rng, d, depth));
            const DyadicInterval node = DyadicInterval::from_heap(rng.below(internal_count(depth)));
            return Json{{"plus", point_to_json(tree[node.left().heap_index()])},
                        {"minus", point_to_json(tree[node.right().heap_index()])}};
          },
          [](const Json& in, double tol) {
            const BellmanPoint plus = point_from_json(in.at("plus"));
            const BellmanPoint minus = point_from_json(in.at("minus"));
            const BellmanPoint mid = convex_combination(0.5, plus, minus);
            const double x = std::max({1.0, point_x(plus), point_x(minus), point_x(mid)});
            const SegmentReport r = segment_in_4x(plus, minus, x, 33, tol);
            CheckOutcome out{r.worst_lambda, 4.0 * x, r.inside, {}};
            if (!r.inside) out.detail = "first failing theta " + std::to_string(r.failing_thetas.front());
            return out;
          }};
}

FuzzCheck dynamics() {
  return {"bellman", "dynamics",
          [](CounterRng& rng, const FuzzConfig& cfg) {
            const int k = draw_between(rng, 1, cfg.k);
            const int d = draw_dim(rng, cfg.d);
            const MatrixWeight w = random_test_weight(rng, d, k);
            const auto tree = bellman_tree_from_weight(w, random_function(rng, d, k), random_function(rng, d, k));
            return Json{{"k", k}, {"tree", points_to_json(tree)},
                        {"alpha", doubles_to_json(random_feasible_alpha(rng, static_cast<std::size_t>(leaf_count(k))))}};
          },
          [](const Json& in, double tol) {
            const int k = in.at("k").get<int>();
            const auto tree = points_from_json(in.at("tree"));
            const auto alpha = in.at("alpha").get<std::vector<double>>();
            double x = 1.0;
            for (const BellmanPoint& a : tree) x = std::max(x, point_x(a));
            const DynamicsReport r = modified_dynamics(tree, k, alpha, x, tol);
            std::string why;
            if (r.a_min < 0.75 - 1e-15 || r.a_max > 1.25 + 1e-15) why += "a out of [3/4,5/4]; ";
            if (r.theta_min < 0.3 - 1e-12 || r.theta_max > 5.0 / 6.0 + 1e-12) why += "theta out of [3/10,5/6]; ";
            if (r.product_residual > 1e-12) why += "product identity; ";
            if (r.theta_sum_residual > 1e-12) why += "theta sum; ";
            if (r.convexity_residual > 1e-9) why += "convexity; ";
            if (!r.points_in_25x_9) why += "point outside 25X/9; ";
            if (!r.midpoints_in_25x_9) why += "midpoint outside 25X/9; ";
            if (!r.segments_in_100x_9) why += "segment outside 100X/9; ";
            return CheckOutcome{r.worst_lambda, 100.0 * x / 9.0, why.empty(), why};
          }};
}

FuzzCheck rank_one_alpha() {
  return {"schur", "rank_one_alpha",
          [](CounterRng& rng, const FuzzConfig& cfg) {
            const int k = draw_between(rng, 1, std::min(cfg.k, 4));
            LambdaMatrix lam;
            if (rng.below(2) == 0) {
              lam = random_rank_one_lambda(rng, k);
            } else {
              const int d = draw_dim(rng, cfg.d);
              const MatrixWeight w = random_test_weight(rng, d, k);
              const auto tree = bellman_tree_from_weight(w, random_function(rng, d, k), random_function(rng, d, k));
              lam = build_lambda(tree, k, static_cast<int>(rng.below(static_cast<std::uint64_t>(d))));
            }
            return Json{{"m", vector_to_json(lam.m)}, {"n", vector_to_json(lam.n)}};
          },
          [](const Json& in, double) {
            const LambdaMatrix lam = LambdaMatrix::rank_one(vector_from_json(in.at("m")), vector_from_json(in.at("n")));
            const AlphaResult found = alpha_search_rank_one(lam);
            double sum = 0.0, box = 0.0;
            for (double a : found.alpha) {
              sum += a;
              box = std::max(box, std::abs(a));
            }
            std::string why;
            if (box > 0.25 || std::abs(sum) > 1e-14) why += "alpha infeasible; ";
            const bool trivial = found.abs_sum == 0.0;
            if (!trivial && found.ratio < kRankOneConstant) why += "search below 4^-5; ";
            if (lam.size() <= 16) {
              const AlphaResult ex = exhaustive_alpha(lam);
              if (!trivial && ex.ratio < kRankOneConstant) why += "exhaustive below 4^-5; ";
            }
            return CheckOutcome{found.ratio, kRankOneConstant, why.empty(), why};
          }};
}

RMatrix sylvester_hadamard(int k) {
  RMatrix h = RMatrix::Ones(1, 1);
  for (int i = 0; i < k; ++i) {
    RMatrix next(2 * h.rows(), 2 * h.cols());
    next << h, h, h, -h;
    h = next;
  }
  return h;
}

FuzzCheck sign_bound() {
  return {"schur", "sign_bound",
          [](CounterRng& rng, const FuzzConfig& cfg) {
            const int k = draw_between(rng, 1, cfg.k);
            const Eigen::Index n = Eigen::Index{1} << k;
            RMatrix a = rng.below(8) == 0 ? sylvester_hadamard(k) : random_sign_matrix(rng, k);
            CMatrix m;
            switch (rng.below(4)) {
              case 0: m = a.cast<Complex>(); break;  // A o A is all ones
              case 1: m = random_complex_vector(rng, n) * random_complex_vector(rng, n).adjoint(); break;
              default: m = random_complex_matrix(rng, n, n); break;
            }
            return Json{{"A", matrix_to_json(a.cast<Complex>())}, {"M", matrix_to_json(m)}};
          },
          [](const Json& in, double tol) {
            const RMatrix a = matrix_from_json(in.at("A")).real();
            const SignMultiplierCheck c = sign_multiplier_check(a, matrix_from_json(in.at("M")));
            return upper(c.ratio, c.bound, tol);
          }};
}

FuzzCheck embedding() {
  return {"carleson", "embedding",
          [](CounterRng& rng, const FuzzConfig& cfg) {
            const int d = draw_dim(rng, cfg.d);
            const int depth = draw_between(rng, 0, std::min(cfg.depth, 8));
            return carleson_instance_to_json(random_carleson_instance(rng, d, depth));
          },
          [](const Json& in, double tol) {
            const CarlesonInstance inst = carleson_instance_from_json(in);
            const CarlesonSequence seq(inst.weight, inst.a);
            const EmbeddingSides s = embedding_check(inst.weight, seq, inst.f, inst.t, tol);
            return upper(s.lhs, s.rhs, tol);
          }};
}

FuzzCheck concavity() {
  return {"bellman", "concavity",
          [](CounterRng& rng, const FuzzConfig& cfg) {
            const int d = draw_dim(rng, cfg.d);
            const CarlesonBellmanPoint plus = random_cpoint(rng, d);
            const CarlesonBellmanPoint minus = rng.below(10) == 0 ? plus : random_cpoint(rng, d);
            CarlesonBellmanPoint p;
            p.f = 0.5 * (plus.f + minus.f);
            p.F = 0.5 * (plus.F + minus.F);
            p.W = HpdMatrix::from_hermitian_part(0.5 * (plus.W.matrix() + minus.W.matrix()));
            const CMatrix m_tilde = 0.5 * (plus.M.matrix() + minus.M.matrix());
            const CMatrix room = psd_sqrt(p.W.matrix() - m_tilde);
            const HermMatrix c = rng.below(10) == 0 ? HermMatrix::zero(d) : random_contraction_psd(rng, d, rng.below(3) == 0);
            const HermMatrix m = HermMatrix::from_hermitian_part(room * c.matrix() * room);
            p.M = HermMatrix::from_hermitian_part(m.matrix() + m_tilde);
            return Json{{"point", cpoint_to_json(p)}, {"plus", cpoint_to_json(plus)}, {"minus", cpoint_to_json(minus)},
                        {"m", matrix_to_json(m.matrix())}};
          },
          [](const Json& in, double tol) {
            const ConcavityGap g =
                carleson_concavity_gap(cpoint_from_json(in.at("point")), cpoint_from_json(in.at("plus")),
                                       cpoint_from_json(in.at("minus")), HermMatrix(matrix_from_json(in.at("m"))), tol);
            // Stored as observed = gap against bound = quad; the check is gap >= quad.
            return CheckOutcome{g.gap, g.quad, g.holds(tol), {}};
          }};
}

FuzzCheck resolvent() {
  return {"bellman", "resolvent",
          [](CounterRng& rng, const FuzzConfig& cfg) {
            const int d = draw_dim(rng, cfg.d);
            const HpdMatrix w = random_hpd(rng, d, rng.uniform(0.1, 2.0));
            const CMatrix m_tilde = rng.below(6) == 0 ? CMatrix(CMatrix::Zero(d, d))
                                                      : CMatrix(rng.uniform(0.0, 3.0) *
                                                                random_wishart(rng, d, draw_dim(rng, d)).matrix());
            const HermMatrix c = rng.below(8) == 0 ? HermMatrix::identity(d) : random_contraction_psd(rng, d, rng.below(3) == 0);
            const CMatrix m = w.sqrt_matrix() * c.matrix() * w.sqrt_matrix();
            return Json{{"W", matrix_to_json(w.matrix())}, {"Mtilde", matrix_to_json(hermitian_part(m_tilde))},
                        {"m", matrix_to_json(hermitian_part(m))}};
          },
          [](const Json& in, double tol) {
            const ResolventReport r = resolvent_inequality_check(HpdMatrix(matrix_from_json(in.at("W"))),
                                                                 HermMatrix(matrix_from_json(in.at("Mtilde"))),
                                                                 HermMatrix(matrix_from_json(in.at("m"))), tol);
            CheckOutcome out{r.min_eigenvalue, 0.0, r.psd && r.e_bounded, {}};
            if (!r.e_bounded) out.detail = "E not within [0, I], e_max " + std::to_string(r.e_max);
            return out;
          }};
}

FuzzCheck bellman_range() {
  return {"bellman", "range",
          [](CounterRng& rng, const FuzzConfig& cfg) {
            return Json{{"point", cpoint_to_json(random_cpoint(rng, draw_dim(rng, cfg.d)))}};
          },
          [](const Json& in, double tol) {
            const CarlesonBellmanPoint p = cpoint_from_json(in.at("point"));
            const double b = carleson_bellman(p, tol);
            const double slack = tol * std::max(1.0, 4.0 * p.F);
            CheckOutcome out{b, 4.0 * p.F, b >= -slack && b <= 4.0 * p.F + slack, {}};
            if (b < -slack) out.detail = "negative value";
            return out;
          }};
}

int draw_p(CounterRng& rng, const FuzzConfig& cfg) { return cfg.p == 0 ? draw_between(rng, 2, 3) : cfg.p; }

int transfer_depth(CounterRng& rng, const FuzzConfig& cfg, int p) {
  return draw_between(rng, 1, std::max(1, std::min(cfg.depth, p == 3 ? 3 : 12 / p)));
}

FuzzCheck inflation() {
  return {"transfer", "inflation",
          [](CounterRng& rng, const FuzzConfig& cfg) {
            const int p = draw_p(rng, cfg);
            const int depth = transfer_depth(rng, cfg, p);
            return cube_weight_to_json(random_cube_weight(rng, p, depth, draw_dim(rng, cfg.d)));
          },
          [](const Json& in, double tol) {
            const CubeWeight w = cube_weight_from_json(in);
            const InflationReport r = inflation_check(CubeIntervalMap(w.p, w.depth), w, tol);
            return CheckOutcome{r.line_x, r.bound, r.ok, {}};
          }};
}

// Averages over every box are accumulated straight from cube coordinates and compared with
// the line averages over the matching intervals.
FuzzCheck transfer_averages() {
  return {"transfer", "averages",
          [](CounterRng& rng, const FuzzConfig& cfg) {
            const int p = draw_p(rng, cfg);
            const int depth = transfer_depth(rng, cfg, p);
            return cube_function_to_json(random_cube_function(rng, p, depth, draw_dim(rng, cfg.d)));
          },
          [](const Json& in, double) {
            const CubeFunction f = cube_function_from_json(in);
            const CubeIntervalMap map(f.p, f.depth);
            const GridFunction g = transfer_function(map, f);
            using Key = std::pair<std::vector<int>, std::vector<std::int64_t>>;
            std::map<Key, std::pair<CVector, std::int64_t>> boxes;
            for (std::int64_t c = 0; c < map.leaves(); ++c) {
              const std::vector<std::int64_t> x = map.leaf_coords(c);
              for (int level = 0; level <= map.line_depth(); ++level) {
                Key key{std::vector<int>(static_cast<std::size_t>(f.p), 0), {}};
                for (int s = 0; s < level; ++s) ++key.first[static_cast<std::size_t>(s % f.p)];
                for (int a = 0; a < f.p; ++a)
                  key.second.push_back(x[static_cast<std::size_t>(a)] >> (f.depth - key.first[static_cast<std::size_t>(a)]));
                auto [it, fresh] = boxes.try_emplace(key, CVector::Zero(f.values.rows()), 0);
                it->second.first += f.values.col(c);
                ++it->second.second;
              }
            }
            double err = 0.0;
            for (std::size_t h = 0; h < node_count(map.line_depth()); ++h) {
              const DyadicInterval node = DyadicInterval::from_heap(h);
              const CubeBox box = map.region(node);
              const auto& [sum, count] = boxes.at(Key{box.level, box.coord});
              const CVector direct = sum / static_cast<double>(count);
              err = std::max(err, (direct - average(g, node)).cwiseAbs().maxCoeff());
              err = std::max(err, std::abs(static_cast<double>(count) / static_cast<double>(map.leaves()) - box.measure()));
            }
            return at_most(relative(err, f.values.cwiseAbs().maxCoeff()), 1e-12);
          }};
}

// Size-4 symmetric zero-sum Lambda against 64 ||Lambda||_1 <= ||Lambda||_2 <= 192 ||Lambda||_1,
// each side allowed 5% slack. The lower side is known to fail (the sharp constant is 16), so
// this check stays out of the suite.
FuzzCheck norms() {
  FuzzCheck c{"schur", "norms",
              [](CounterRng& rng, const FuzzConfig& cfg) {
                return Json{{"lambda", matrix_to_json(random_symmetric_lambda(rng, 2, draw_dim(rng, cfg.d)).values)}};
              },
              [](const Json& in, double) {
                const LambdaMatrix lam = LambdaMatrix::symmetric(matrix_from_json(in.at("lambda")));
                const LambdaNorms nm = lambda_norms(lam);
                if (nm.norm2.hi == 0.0) return CheckOutcome{0.0, 64.0, true, "zero matrix"};
                const double ratio = nm.norm2.lo / nm.norm1.lo;
                const bool lower = 64.0 * nm.norm1.lo <= 1.05 * nm.norm2.hi;
                const bool upper_ok = nm.norm2.lo <= 1.05 * 192.0 * nm.norm1.hi;
                std::string why;
                if (!lower) why += "64 ||L||_1 > ||L||_2; ";
                if (!upper_ok) why += "||L||_2 > 192 ||L||_1; ";
                return CheckOutcome{ratio, 64.0, lower && upper_ok, why};
              }};
  c.in_suite = false;
  return c;
}

}  // namespace

const std::vector<FuzzCheck>& all_checks() {
  static const std::vector<FuzzCheck> checks = {
      haar_roundtrip(), slice_sum(),   two_point(), linearization(), slice_bound(),   segment(), dynamics(),
      rank_one_alpha(), sign_bound(),  embedding(), concavity(),     resolvent(),     bellman_range(),
      inflation(),      transfer_averages(), norms(),
  };
  return checks;
}

const std::vector<FuzzCheck>& fuzz_checks() {
  static const std::vector<FuzzCheck> checks = [] {
    std::vector<FuzzCheck> out;
    for (const FuzzCheck& c : all_checks())
      if (c.in_suite) out.push_back(c);
    return out;
  }();
  return checks;
}

const FuzzCheck& find_check(const std::string& module, const std::string& operation) {
  for (const FuzzCheck& c : all_checks())
    if (c.module == module && c.operation == operation) return c;
  fail(ErrorCode::ConfigInvalid, "unknown check " + module + "/" + operation);
}

Json counterexample_to_json(const Counterexample& c) {
  return {{"module", c.module},     {"operation", c.operation}, {"seed", c.seed},
          {"stream", c.stream},     {"trial", c.trial},         {"inputs", c.inputs},
          {"observed", c.observed}, {"bound", c.bound},         {"tolerance", c.tolerance},
          {"detail", c.detail}};
}

Counterexample counterexample_from_json(const Json& j) {
  try {
    Counterexample c;
    c.module = j.at("module").get<std::string>();
    c.operation = j.at("operation").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.stream = j.value("stream", std::uint64_t{0});
    c.trial = j.value("trial", std::int64_t{0});
    c.inputs = j.at("inputs");
    c.observed = j.at("observed").get<double>();
    c.bound = j.at("bound").get<double>();
    c.tolerance = j.at("tolerance").get<double>();
    c.detail = j.value("detail", std::string());
    return c;
  } catch (const Json::exception& e) {
    fail(ErrorCode::ConfigInvalid, std::string("counterexample: ") + e.what());
  }
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn, int threads) {
  if (n <= 0) return;
  int workers = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = static_cast<int>(std::min<std::int64_t>(workers, n));
  if (workers == 1) {
    for (std::int64_t t = 0; t < n; ++t) fn(t);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::int64_t t = next++; t < n; t = next++) {
        try {
          fn(t);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

CheckRun run_check(const FuzzCheck& check, std::uint64_t seed, std::int64_t trials, const FuzzConfig& config,
                   double tol, std::uint64_t stream_base, int threads) {
  require(trials >= 0, ErrorCode::ConfigInvalid, "trials must be nonnegative");
  CheckRun run;
  run.name = check.name();
  run.trials = trials;
  run.results.resize(static_cast<std::size_t>(trials));
  std::vector<std::optional<Counterexample>> failures(static_cast<std::size_t>(trials));
  parallel_for(
      trials,
      [&](std::int64_t t) {
        const std::uint64_t stream = stream_base | static_cast<std::uint64_t>(t);
        CounterRng rng(seed, stream);
        Json inputs;
        CheckOutcome outcome;
        try {
          inputs = check.generate(rng, config);
          outcome = check.evaluate(inputs, tol);
        } catch (const std::exception& e) {
          outcome = CheckOutcome{0.0, 0.0, false, e.what()};
        }
        if (!outcome.ok)
          failures[static_cast<std::size_t>(t)] =
              Counterexample{check.module, check.operation, seed,          stream, t, std::move(inputs),
                             outcome.observed, outcome.bound, tol, outcome.detail};
        run.results[static_cast<std::size_t>(t)] = TrialResult{t, std::move(outcome)};
      },
      threads);
  for (auto& f : failures)
    if (f) run.failures.push_back(std::move(*f));
  run.violations = static_cast<std::int64_t>(run.failures.size());
  return run;
}

std::vector<CheckRun> run_suite(std::uint64_t seed, std::int64_t trials, const FuzzConfig& config, double tol,
                                int threads) {
  std::vector<CheckRun> runs;
  const auto& checks = fuzz_checks();
  for (std::size_t i = 0; i < checks.size(); ++i)
    runs.push_back(run_check(checks[i], seed, trials, config, tol, static_cast<std::uint64_t>(i) << 40, threads));
  return runs;
}

ReplayResult replay(const Counterexample& c) {
  const FuzzCheck& check = find_check(c.module, c.operation);
  ReplayResult out;
  try {
    out.outcome = check.evaluate(c.inputs, c.tolerance);
  } catch (const std::exception& e) {
    out.outcome = CheckOutcome{0.0, 0.0, false, e.what()};
  }
  out.reproduced = std::abs(out.outcome.observed - c.observed) <= 1e-12 * std::max(1.0, std::abs(c.observed));
  return out;
}

}  // namespace haarlab
