#include "haarlab/json_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace haarlab {

namespace {

// nlohmann raises its own exception types on missing keys and type mismatches.
template <typename F>
auto guarded(const char* what, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    fail(ErrorCode::ConfigInvalid, std::string(what) + ": " + e.what());
  }
}

Json interval_to_json(const DyadicInterval& i) { return Json::array({i.level, i.index}); }

DyadicInterval interval_from_json(const Json& j) {
  require(j.is_array() && j.size() == 2, ErrorCode::ConfigInvalid, "interval must be [level, index]");
  DyadicInterval i{j[0].get<int>(), j[1].get<std::int64_t>()};
  require(i.valid(), ErrorCode::OutOfTree, "interval [" + std::to_string(i.level) + ", " + std::to_string(i.index) + "]");
  return i;
}

void require_depth(int depth) {
  require(depth >= 0 && depth <= kMaxDepth, ErrorCode::ConfigInvalid, "depth out of range");
}

}  // namespace

Json matrix_to_json(const CMatrix& m) {
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json rr = Json::array(), ir = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      rr.push_back(m(i, k).real());
      ir.push_back(m(i, k).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ir));
  }
  return {{"d", m.rows()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

CMatrix matrix_from_json(const Json& j) {
  return guarded("matrix", [&] {
    const auto d = j.at("d").get<Eigen::Index>();
    require(d >= 1, ErrorCode::ConfigInvalid, "matrix dimension must be positive");
    const Json& re = j.at("re");
    const Json& im = j.contains("im") ? j.at("im") : Json();
    require(re.is_array() && static_cast<Eigen::Index>(re.size()) == d, ErrorCode::ConfigInvalid, "matrix rows");
    CMatrix m(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      require(re[i].is_array() && static_cast<Eigen::Index>(re[i].size()) == d, ErrorCode::ConfigInvalid,
              "matrix columns");
      for (Eigen::Index k = 0; k < d; ++k) {
        const double imag = im.is_null() ? 0.0 : im.at(i).at(k).get<double>();
        m(i, k) = Complex(re[i][k].get<double>(), imag);
      }
    }
    return m;
  });
}

Json vector_to_json(const CVector& v) {
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    re.push_back(v(i).real());
    im.push_back(v(i).imag());
  }
  return {{"re", std::move(re)}, {"im", std::move(im)}};
}

CVector vector_from_json(const Json& j) {
  return guarded("vector", [&] {
    const Json& re = j.at("re");
    require(re.is_array() && !re.empty(), ErrorCode::ConfigInvalid, "vector entries");
    CVector v(static_cast<Eigen::Index>(re.size()));
    for (std::size_t i = 0; i < re.size(); ++i) {
      const double imag = j.contains("im") ? j.at("im").at(i).get<double>() : 0.0;
      v(static_cast<Eigen::Index>(i)) = Complex(re[i].get<double>(), imag);
    }
    return v;
  });
}

Json weight_to_json(const MatrixWeight& w) {
  Json leaves = Json::array();
  for (const HpdMatrix& m : w.leaf_values()) leaves.push_back(matrix_to_json(m.matrix()));
  return {{"d", w.dim()}, {"depth", w.depth()}, {"leaves", std::move(leaves)}};
}

MatrixWeight weight_from_json(const Json& j) {
  return guarded("weight", [&] {
    const int d = j.at("d").get<int>();
    const int depth = j.at("depth").get<int>();
    require_depth(depth);
    const Json& leaves = j.at("leaves");
    require(leaves.is_array() && static_cast<std::int64_t>(leaves.size()) == leaf_count(depth),
            ErrorCode::ConfigInvalid, "weight needs 2^depth leaves");
    std::vector<HpdMatrix> out;
    out.reserve(leaves.size());
    for (const Json& leaf : leaves) {
      CMatrix m = matrix_from_json(leaf);
      require(m.rows() == d, ErrorCode::ShapeMismatch, "leaf dimension differs from d");
      out.emplace_back(std::move(m));
    }
    return MatrixWeight(depth, std::move(out));
  });
}

Json function_to_json(const GridFunction& f) {
  Json leaves = Json::array();
  for (std::int64_t t = 0; t < f.leaves(); ++t) leaves.push_back(vector_to_json(f.leaf(t)));
  return {{"d", f.dim()}, {"depth", f.depth()}, {"leaves", std::move(leaves)}};
}

GridFunction function_from_json(const Json& j) {
  return guarded("function", [&] {
    const int d = j.at("d").get<int>();
    const int depth = j.at("depth").get<int>();
    require_depth(depth);
    const Json& leaves = j.at("leaves");
    require(d >= 1 && leaves.is_array() && static_cast<std::int64_t>(leaves.size()) == leaf_count(depth),
            ErrorCode::ConfigInvalid, "function needs 2^depth leaves");
    GridFunction f(d, depth);
    for (std::int64_t t = 0; t < f.leaves(); ++t) {
      const CVector v = vector_from_json(leaves[static_cast<std::size_t>(t)]);
      require(v.size() == d, ErrorCode::ShapeMismatch, "leaf vector dimension differs from d");
      f.leaf(t) = v;
    }
    return f;
  });
}

Json shift_to_json(const HaarShiftSpec& s) {
  Json coeffs = Json::array();
  for (const ShiftBlock& b : s.blocks()) {
    const auto rows = b.anchor.descendants(s.m());
    const auto cols = b.anchor.descendants(s.n());
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const Complex v = b.coeffs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        if (v == Complex(0.0)) continue;
        coeffs.push_back({{"L", interval_to_json(b.anchor)},
                          {"I", interval_to_json(rows[r])},
                          {"J", interval_to_json(cols[c])},
                          {"re", v.real()},
                          {"im", v.imag()}});
      }
  }
  return {{"m", s.m()}, {"n", s.n()}, {"coeffs", std::move(coeffs)}};
}

HaarShiftSpec shift_from_json(const Json& j) {
  return guarded("shift", [&] {
    const int m = j.at("m").get<int>();
    const int n = j.at("n").get<int>();
    require(m >= 0 && n >= 0 && m < kMaxDepth && n < kMaxDepth, ErrorCode::ConfigInvalid, "shift parameters");
    std::map<DyadicInterval, CMatrix> blocks;
    for (const Json& c : j.at("coeffs")) {
      const DyadicInterval l = interval_from_json(c.at("L"));
      const DyadicInterval i = interval_from_json(c.at("I"));
      const DyadicInterval k = interval_from_json(c.at("J"));
      require(i.level == l.level + m && l.contains(i), ErrorCode::ConfigInvalid, "I must lie in D_m(L)");
      require(k.level == l.level + n && l.contains(k), ErrorCode::ConfigInvalid, "J must lie in D_n(L)");
      auto [it, inserted] = blocks.try_emplace(l, CMatrix::Zero(Eigen::Index{1} << m, Eigen::Index{1} << n));
      const Eigen::Index row = i.index - (l.index << m);
      const Eigen::Index col = k.index - (l.index << n);
      it->second(row, col) = Complex(c.at("re").get<double>(), c.value("im", 0.0));
    }
    std::vector<ShiftBlock> out;
    for (auto& [anchor, coeffs] : blocks) out.push_back({anchor, std::move(coeffs)});
    return HaarShiftSpec(m, n, std::move(out));
  });
}

Json symbol_to_json(const MartingaleSymbol& s) {
  Json sigma = Json::array();
  for (const CMatrix& m : s.sigma) sigma.push_back(matrix_to_json(m));
  return {{"d", s.dim}, {"depth", s.depth}, {"sigma", std::move(sigma)}};
}

MartingaleSymbol symbol_from_json(const Json& j) {
  return guarded("symbol", [&] {
    MartingaleSymbol s;
    s.dim = j.at("d").get<int>();
    s.depth = j.at("depth").get<int>();
    require_depth(s.depth);
    const Json& sigma = j.at("sigma");
    require(sigma.is_array() && sigma.size() == internal_count(s.depth), ErrorCode::ConfigInvalid,
            "symbol needs one matrix per internal node");
    for (const Json& m : sigma) s.sigma.push_back(matrix_from_json(m));
    return s;
  });
}

Json cube_weight_to_json(const CubeWeight& w) {
  Json leaves = Json::array();
  for (const HpdMatrix& m : w.leaves) leaves.push_back(matrix_to_json(m.matrix()));
  return {{"p", w.p}, {"d", w.dim()}, {"depth", w.depth}, {"leaves", std::move(leaves)}};
}

CubeWeight cube_weight_from_json(const Json& j) {
  return guarded("cube weight", [&] {
    CubeWeight w;
    w.p = j.at("p").get<int>();
    w.depth = j.at("depth").get<int>();
    const int d = j.at("d").get<int>();
    require(w.p >= 1 && w.depth >= 0 && w.p * w.depth <= 12, ErrorCode::BudgetExceeded, "cube grid too large");
    const Json& leaves = j.at("leaves");
    require(leaves.is_array() && leaves.size() == (std::size_t{1} << (w.p * w.depth)), ErrorCode::ConfigInvalid,
            "cube weight needs 2^(p depth) leaves");
    for (const Json& leaf : leaves) {
      CMatrix m = matrix_from_json(leaf);
      require(m.rows() == d, ErrorCode::ShapeMismatch, "leaf dimension differs from d");
      w.leaves.emplace_back(std::move(m));
    }
    return w;
  });
}

Json cube_function_to_json(const CubeFunction& f) {
  Json leaves = Json::array();
  for (Eigen::Index c = 0; c < f.values.cols(); ++c) leaves.push_back(vector_to_json(f.values.col(c)));
  return {{"p", f.p}, {"d", f.values.rows()}, {"depth", f.depth}, {"leaves", std::move(leaves)}};
}

CubeFunction cube_function_from_json(const Json& j) {
  return guarded("cube function", [&] {
    CubeFunction f;
    f.p = j.at("p").get<int>();
    f.depth = j.at("depth").get<int>();
    const int d = j.at("d").get<int>();
    require(f.p >= 1 && f.depth >= 0 && f.p * f.depth <= 12, ErrorCode::BudgetExceeded, "cube grid too large");
    const Json& leaves = j.at("leaves");
    require(d >= 1 && leaves.is_array() && leaves.size() == (std::size_t{1} << (f.p * f.depth)),
            ErrorCode::ConfigInvalid, "cube function needs 2^(p depth) leaves");
    f.values.resize(d, static_cast<Eigen::Index>(leaves.size()));
    for (std::size_t c = 0; c < leaves.size(); ++c) f.values.col(static_cast<Eigen::Index>(c)) = vector_from_json(leaves[c]);
    return f;
  });
}

Json herm_list_to_json(const std::vector<HermMatrix>& list) {
  Json out = Json::array();
  for (const HermMatrix& m : list) out.push_back(matrix_to_json(m.matrix()));
  return out;
}

std::vector<HermMatrix> herm_list_from_json(const Json& j) {
  return guarded("matrix list", [&] {
    std::vector<HermMatrix> out;
    for (const Json& m : j) out.emplace_back(matrix_from_json(m));
    return out;
  });
}

Json carleson_instance_to_json(const CarlesonInstance& inst) {
  return {{"weight", weight_to_json(inst.weight)},
          {"A", herm_list_to_json(inst.a)},
          {"f", function_to_json(inst.f)},
          {"t", inst.t}};
}

CarlesonInstance carleson_instance_from_json(const Json& j) {
  return guarded("Carleson instance", [&] {
    CarlesonInstance inst;
    inst.weight = weight_from_json(j.at("weight"));
    inst.a = herm_list_from_json(j.at("A"));
    inst.f = function_from_json(j.at("f"));
    inst.t = j.at("t").get<double>();
    return inst;
  });
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoError, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return Json::parse(buffer.str());
  } catch (const Json::exception& e) {
    fail(ErrorCode::ConfigInvalid, path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoError, "cannot write " + path);
  out << j.dump(2) << '\n';
  require(out.good(), ErrorCode::IoError, "write failed for " + path);
}

}  // namespace haarlab
