#pragma once

// JSON encodings. A matrix is a list of rows, each entry a two-element list
// [re, im]; a vector is a flat list of [re, im] pairs.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "qpt/tomodata.hpp"

namespace qpt {

using Json = nlohmann::json;

Json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const Json& j);
Json vector_to_json(const CVector& v);
CVector vector_from_json(const Json& j);

Json dataset_to_json(const Dataset& ds);
Dataset dataset_from_json(const Json& j);

/// {dims: {d_A, d_B}, ordering: "input-output", matrix: ...}
Json choi_to_json(const CMatrix& choi, const ChannelDims& dims);
CMatrix choi_from_json(const Json& j, ChannelDims* dims = nullptr);

Json read_json(const std::filesystem::path& p);
void write_json(const std::filesystem::path& p, const Json& j);

Dataset read_dataset(const std::filesystem::path& p);
void write_dataset(const std::filesystem::path& p, const Dataset& ds);

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

}  // namespace qpt
