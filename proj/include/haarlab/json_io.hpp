#pragma once

// JSON encodings for matrices, weights, functions, shifts and cube data.
//
//   matrix    {"d": n, "re": [[...]], "im": [[...]]}              row-major
//   vector    {"re": [...], "im": [...]}
//   weight    {"d": d, "depth": L, "leaves": [matrix, ...]}        2^L leaves
//   function  {"d": d, "depth": L, "leaves": [vector, ...]}
//   shift     {"m": m, "n": n, "coeffs": [{"L": [l, i], "I": [l, i], "J": [l, i], "re": x, "im": y}, ...]}
//   cube      {"p": p, "d": d, "depth": D, "leaves": [...]}         row-major coordinates
//
// Malformed documents raise ConfigInvalid; unreadable/unwritable files raise IoError.

#include <string>
#include <vector>

#include <json.hpp>

#include "haarlab/carleson.hpp"
#include "haarlab/dyadic.hpp"
#include "haarlab/operators.hpp"
#include "haarlab/transfer.hpp"

namespace haarlab {

using Json = nlohmann::json;

Json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const Json& j);
Json vector_to_json(const CVector& v);
CVector vector_from_json(const Json& j);

Json weight_to_json(const MatrixWeight& w);
MatrixWeight weight_from_json(const Json& j);
Json function_to_json(const GridFunction& f);
GridFunction function_from_json(const Json& j);

Json shift_to_json(const HaarShiftSpec& s);
HaarShiftSpec shift_from_json(const Json& j);

Json symbol_to_json(const MartingaleSymbol& s);
MartingaleSymbol symbol_from_json(const Json& j);

Json cube_weight_to_json(const CubeWeight& w);
CubeWeight cube_weight_from_json(const Json& j);
Json cube_function_to_json(const CubeFunction& f);
CubeFunction cube_function_from_json(const Json& j);

Json herm_list_to_json(const std::vector<HermMatrix>& list);
std::vector<HermMatrix> herm_list_from_json(const Json& j);

Json carleson_instance_to_json(const CarlesonInstance& inst);
CarlesonInstance carleson_instance_from_json(const Json& j);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace haarlab
