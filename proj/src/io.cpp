#include "qpt/io.hpp"

#include <fstream>

namespace qpt {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

cplx entry_from_json(const Json& e) {
  if (e.is_number()) return {e.get<double>(), 0.0};
  if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
    bad("matrix entries must be [re, im] pairs");
  }
  return {e[0].get<double>(), e[1].get<double>()};
}

}  // namespace

Json matrix_to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) bad("matrix must be a non-empty list of rows");
  const auto rows = j.size();
  const auto cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) bad("matrix rows must be non-empty lists");
  CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) bad("matrix rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = entry_from_json(j[r][c]);
    }
  }
  return m;
}

Json vector_to_json(const CVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
  return out;
}

CVector vector_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) bad("vector must be a non-empty list");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = entry_from_json(j[i]);
  return v;
}

std::string to_string(Scheme s) {
  return s == Scheme::PrepareMeasure ? "prepare-measure" : "ancilla-assisted";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "prepare-measure") return Scheme::PrepareMeasure;
  if (s == "ancilla-assisted") return Scheme::AncillaAssisted;
  bad("unknown scheme '" + s + "'");
}

Json dataset_to_json(const Dataset& ds) {
  Json j;
  j["scheme"] = to_string(ds.scheme);
  j["dims"] = {{"d_A", ds.dims.d_a}, {"d_B", ds.dims.d_b}};
  if (ds.scheme == Scheme::AncillaAssisted) {
    j["input_entangled"] = vector_to_json(ds.input_entangled);
    j["effect_ordering"] = "reference-output";
  }
  Json settings = Json::array();
  for (const auto& s : ds.settings) {
    Json sj;
    if (s.input) sj["input"] = matrix_to_json(*s.input);
    Json eff = Json::array();
    for (const auto& e : s.effects) eff.push_back(matrix_to_json(e));
    sj["effects"] = std::move(eff);
    sj["counts"] = s.counts;
    settings.push_back(std::move(sj));
  }
  j["settings"] = std::move(settings);
  return j;
}

Dataset dataset_from_json(const Json& j) {
  try {
    Dataset ds;
    ds.scheme = scheme_from_string(j.at("scheme").get<std::string>());
    ds.dims = ChannelDims(j.at("dims").at("d_A").get<int>(), j.at("dims").at("d_B").get<int>());
    if (ds.scheme == Scheme::AncillaAssisted) ds.input_entangled = vector_from_json(j.at("input_entangled"));
    for (const auto& sj : j.at("settings")) {
      Setting s;
      if (sj.contains("input")) s.input = matrix_from_json(sj["input"]);
      for (const auto& e : sj.at("effects")) s.effects.push_back(matrix_from_json(e));
      s.counts = sj.at("counts").get<std::vector<std::int64_t>>();
      ds.settings.push_back(std::move(s));
    }
    validate(ds);
    return ds;
  } catch (const Json::exception& e) {
    bad(std::string("dataset: ") + e.what());
  }
}

Json choi_to_json(const CMatrix& choi, const ChannelDims& dims) {
  return {{"dims", {{"d_A", dims.d_a}, {"d_B", dims.d_b}}},
          {"ordering", "input-output"},
          {"matrix", matrix_to_json(choi)}};
}

CMatrix choi_from_json(const Json& j, ChannelDims* dims) {
  try {
    const ChannelDims d(j.at("dims").at("d_A").get<int>(), j.at("dims").at("d_B").get<int>());
    if (j.value("ordering", "input-output") != "input-output") bad("only input-output ordering is supported");
    CMatrix m = matrix_from_json(j.at("matrix"));
    if (m.rows() != d.d_choi() || m.cols() != d.d_choi()) bad("Choi matrix size does not match dims");
    if (dims) *dims = d;
    return m;
  } catch (const Json::exception& e) {
    bad(std::string("choi: ") + e.what());
  }
}

Json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + p.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    bad(p.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& p, const Json& j) {
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + p.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + p.string());
}

Dataset read_dataset(const std::filesystem::path& p) { return dataset_from_json(read_json(p)); }

void write_dataset(const std::filesystem::path& p, const Dataset& ds) { write_json(p, dataset_to_json(ds)); }

}  // namespace qpt
