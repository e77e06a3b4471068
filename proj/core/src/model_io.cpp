#include "monolink/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "monolink/errors.hpp"

namespace monolink {
namespace {

using json = nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::VectorXd vec_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

// Rows and columns are given explicitly so empty matrices keep their shape.
Eigen::MatrixXd mat_from_json(const json& j, std::size_t rows, std::size_t cols) {
  if (!j.is_array() || j.size() != rows) throw ParseError("matrix has the wrong number of rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const json& row = j[i];
    if (!row.is_array() || row.size() != cols) throw ParseError("matrix has the wrong number of columns");
    for (std::size_t k = 0; k < cols; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k].get<double>();
    }
  }
  return m;
}

std::size_t rows_of(const json& j) { return j.is_array() ? j.size() : 0; }
std::size_t cols_of(const json& j) {
  return j.is_array() && !j.empty() && j[0].is_array() ? j[0].size() : 0;
}

json budget_to_json(AggregationBudget k) {
  return k.is_infinite() ? json("inf") : json(k.value());
}

AggregationBudget budget_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "inf") throw ParseError("aggregation must be an integer or \"inf\"");
    return AggregationBudget::infinite();
  }
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ParseError("aggregation must be a non-negative integer or \"inf\"");
  }
  return AggregationBudget::finite(j.get<std::size_t>());
}

json to_json(const Model& m) {
  json doc;
  doc["format"] = "monolink-model";
  doc["version"] = 1;
  doc["signature"] = {{"unary", m.signature.unary_predicates()},
                      {"binary", m.signature.binary_predicates()}};

  json gnn;
  gnn["dims"] = m.gnn.dims;
  gnn["message_direction"] = to_string(m.gnn.direction);
  gnn["layers"] = json::array();
  for (const auto& layer : m.gnn.layers) {
    json l;
    l["A"] = mat_to_json(layer.a);
    l["B"] = json::array();
    for (const auto& b : layer.b) l["B"].push_back(mat_to_json(b));
    l["bias"] = vec_to_json(layer.bias);
    l["activation"] = to_string(layer.activation);
    l["aggregation"] = budget_to_json(layer.budget);
    gnn["layers"].push_back(std::move(l));
  }
  doc["gnn"] = std::move(gnn);

  const auto& f = m.scoring;
  json sc;
  sc["kind"] = to_string(f.kind);
  sc["dim"] = f.dim;
  sc["threshold"] = f.threshold;
  json params;
  switch (f.kind) {
    case ScoringKind::kRescal:
      params["M"] = json::array();
      for (const auto& mat : f.matrices) params["M"].push_back(mat_to_json(mat));
      break;
    case ScoringKind::kDistMult:
      params["diag"] = json::array();
      for (const auto& v : f.vectors) params["diag"].push_back(vec_to_json(v));
      break;
    case ScoringKind::kTucker:
      params["relation_dim"] = f.core.size();
      params["W"] = json::array();
      for (const auto& mat : f.core) params["W"].push_back(mat_to_json(mat));
      params["r"] = json::array();
      for (const auto& v : f.vectors) params["r"].push_back(vec_to_json(v));
      break;
    case ScoringKind::kNam:
      params["r"] = json::array();
      for (const auto& v : f.vectors) params["r"].push_back(vec_to_json(v));
      params["layers"] = json::array();
      for (const auto& l : f.nam) {
        params["layers"].push_back({{"W", mat_to_json(l.weight)}, {"b", vec_to_json(l.bias)}});
      }
      break;
  }
  sc["params"] = std::move(params);
  doc["scoring"] = std::move(sc);
  return doc;
}

Model from_json(const json& doc) {
  Model m;
  m.signature = Signature(doc.at("signature").at("unary").get<std::vector<std::string>>(),
                          doc.at("signature").at("binary").get<std::vector<std::string>>());

  const json& g = doc.at("gnn");
  m.gnn.dims = g.at("dims").get<std::vector<std::size_t>>();
  m.gnn.direction = parse_message_direction(g.at("message_direction").get<std::string>());
  const json& layers = g.at("layers");
  if (layers.size() + 1 != m.gnn.dims.size()) throw ParseError("dims must have one more entry than layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const json& jl = layers[l];
    const std::size_t rows = m.gnn.dims[l + 1];
    const std::size_t cols = m.gnn.dims[l];
    GnnLayer layer;
    layer.a = mat_from_json(jl.at("A"), rows, cols);
    for (const auto& b : jl.at("B")) layer.b.push_back(mat_from_json(b, rows, cols));
    layer.bias = vec_from_json(jl.at("bias"));
    layer.activation = parse_activation(jl.at("activation").get<std::string>());
    layer.budget = budget_from_json(jl.at("aggregation"));
    m.gnn.layers.push_back(std::move(layer));
  }

  const json& sc = doc.at("scoring");
  auto& f = m.scoring;
  f.kind = parse_scoring_kind(sc.at("kind").get<std::string>());
  f.dim = sc.at("dim").get<std::size_t>();
  f.threshold = sc.at("threshold").get<double>();
  const json& p = sc.at("params");
  switch (f.kind) {
    case ScoringKind::kRescal:
      for (const auto& mat : p.at("M")) f.matrices.push_back(mat_from_json(mat, f.dim, f.dim));
      break;
    case ScoringKind::kDistMult:
      for (const auto& v : p.at("diag")) f.vectors.push_back(vec_from_json(v));
      break;
    case ScoringKind::kTucker:
      for (const auto& mat : p.at("W")) f.core.push_back(mat_from_json(mat, f.dim, f.dim));
      for (const auto& v : p.at("r")) f.vectors.push_back(vec_from_json(v));
      break;
    case ScoringKind::kNam: {
      for (const auto& v : p.at("r")) f.vectors.push_back(vec_from_json(v));
      const json& nl = p.at("layers");
      if (nl.size() != 3) throw ParseError("NAM needs exactly 3 layers");
      for (std::size_t l = 0; l < 3; ++l) {
        const json& w = nl[l].at("W");
        f.nam[l].weight = mat_from_json(w, rows_of(w), cols_of(w));
        f.nam[l].bias = vec_from_json(nl[l].at("b"));
      }
      break;
    }
  }
  m.check_consistency();
  return m;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string model_to_json(const Model& m) { return to_json(m).dump(1) + "\n"; }

Model model_from_json(std::string_view text) {
  try {
    return from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model document: ") + e.what());
  } catch (const json::exception& e) {
    throw ParseError(std::string("model document: ") + e.what());
  }
}

void save_model(const Model& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << model_to_json(m);
}

Model load_model(const std::filesystem::path& path) { return model_from_json(read_file(path)); }

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string model_hash(const Model& m) { return content_hash(to_json(m).dump()); }

}  // namespace monolink
