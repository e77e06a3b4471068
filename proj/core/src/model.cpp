#include "monolink/model.hpp"

#include "monolink/errors.hpp"

namespace monolink {

void Model::check_consistency() const {
  gnn.check_shapes();
  scoring.check_shapes();
  if (gnn.input_dim() != signature.unary_count()) {
    throw DataError("GNN input dimension " + std::to_string(gnn.input_dim()) +
                    " differs from the number of unary predicates " +
                    std::to_string(signature.unary_count()));
  }
  if (gnn.color_count() != signature.binary_count()) {
    throw DataError("GNN colour count differs from the number of binary predicates");
  }
  if (scoring.dim != gnn.output_dim()) {
    throw DataError("scoring dimension " + std::to_string(scoring.dim) +
                    " differs from GNN output dimension " + std::to_string(gnn.output_dim()));
  }
  if (scoring.relation_count() != signature.binary_count()) {
    throw DataError("scoring function has " + std::to_string(scoring.relation_count()) +
                    " relations, signature has " + std::to_string(signature.binary_count()));
  }
}

bool Model::is_monotonic() const {
  return validate_monotonic(gnn).ok() && validate_monotonic_scoring(scoring).ok();
}

std::vector<std::string> Model::monotonicity_issues() const {
  auto out = validate_monotonic(gnn).messages();
  for (auto& s : validate_monotonic_scoring(scoring).messages()) out.push_back("scoring " + s);
  return out;
}

Dataset apply_model(const Model& m, const Dataset& data,
                    const std::optional<std::vector<ConstPair>>& candidates) {
  const ColoredGraph graph = encode(data, m.signature);
  if (!candidates && graph.vertex_count() > kAllPairsLimit) {
    throw DataError("dataset has " + std::to_string(graph.vertex_count()) +
                    " constants; candidate pairs are required above " +
                    std::to_string(kAllPairsLimit));
  }
  const LayerTrace trace = forward(m.gnn, graph);
  return decode(trace.output(), m.scoring, graph, data, candidates);
}

std::vector<double> score_facts(const Model& m, const Dataset& data, std::span<const Fact> facts) {
  std::vector<ConstId> extra;
  for (const auto& f : facts) {
    extra.push_back(f.first);
    extra.push_back(f.second);
  }
  const ColoredGraph graph = encode(data, m.signature, extra);
  const LayerTrace trace = forward(m.gnn, graph);
  const Eigen::MatrixXd& out = trace.output();
  std::vector<double> scores;
  scores.reserve(facts.size());
  for (const auto& f : facts) {
    const Eigen::VectorXd h = out.row(graph.vertex_of(f.first)).transpose();
    const Eigen::VectorXd t = out.row(graph.vertex_of(f.second)).transpose();
    scores.push_back(score(m.scoring, f.predicate.index, h, t));
  }
  return scores;
}

}  // namespace monolink
