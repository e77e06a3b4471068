#include "monolink/encoder.hpp"

#include <algorithm>

#include "monolink/errors.hpp"
#include "monolink/scoring.hpp"

namespace monolink {

std::uint32_t ColoredGraph::vertex_of(ConstId c) const {
  return c < vertex_index.size() ? vertex_index[c] : kNoVertex;
}

ColoredGraph encode(const Dataset& data, const Signature& sig, std::span<const ConstId> extra) {
  ColoredGraph g;
  std::vector<ConstId> consts = data.constants();
  for (ConstId c : extra) {
    if (c >= data.constant_table_size()) throw DataError("constant id outside the table");
    consts.push_back(c);
  }
  std::sort(consts.begin(), consts.end());
  consts.erase(std::unique(consts.begin(), consts.end()), consts.end());
  std::sort(consts.begin(), consts.end(), [&](ConstId a, ConstId b) {
    return data.constant_name(a) < data.constant_name(b);
  });

  const std::size_t n = consts.size();
  g.constants = consts;
  g.vertex_index.assign(data.constant_table_size(), kNoVertex);
  for (std::uint32_t v = 0; v < n; ++v) {
    g.names.push_back(data.constant_name(consts[v]));
    g.vertex_index[consts[v]] = v;
  }

  const std::size_t colors = sig.binary_count();
  g.edges.assign(colors, {});
  g.successors.assign(colors, std::vector<std::vector<std::uint32_t>>(n));
  g.predecessors.assign(colors, std::vector<std::vector<std::uint32_t>>(n));
  g.labels = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                   static_cast<Eigen::Index>(sig.unary_count()));

  for (const auto& f : data.facts()) {
    const std::uint32_t a = g.vertex_index[f.first];
    if (f.predicate.arity == Arity::kUnary) {
      if (f.predicate.index >= sig.unary_count()) throw DataError("unary predicate outside signature");
      g.labels(a, f.predicate.index) = 1.0;
    } else {
      if (f.predicate.index >= colors) throw DataError("binary predicate outside signature");
      g.edges[f.predicate.index].emplace_back(a, g.vertex_index[f.second]);
    }
  }
  for (std::size_t c = 0; c < colors; ++c) {
    std::sort(g.edges[c].begin(), g.edges[c].end());
    for (const auto& [s, t] : g.edges[c]) {
      g.successors[c][s].push_back(t);
      g.predecessors[c][t].push_back(s);
    }
    for (auto& list : g.predecessors[c]) std::sort(list.begin(), list.end());
  }
  return g;
}

Dataset decode(const Eigen::MatrixXd& labels, const ScoringFunction& f, const ColoredGraph& graph,
               const Dataset& table, const std::optional<std::vector<ConstPair>>& candidates) {
  if (static_cast<std::size_t>(labels.cols()) != f.dim) {
    throw DataError("label dimension " + std::to_string(labels.cols()) +
                    " does not match scoring dimension " + std::to_string(f.dim));
  }
  if (static_cast<std::size_t>(labels.rows()) != graph.vertex_count()) {
    throw DataError("label rows do not match the vertex count");
  }
  Dataset out = table.empty_copy();
  const std::size_t relations = f.relation_count();
  const auto emit = [&](std::uint32_t a, std::uint32_t b) {
    const Eigen::VectorXd h = labels.row(a).transpose();
    const Eigen::VectorXd t = labels.row(b).transpose();
    for (std::size_t r = 0; r < relations; ++r) {
      if (score(f, r, h, t) >= f.threshold) {
        out.insert(Fact::binary(static_cast<std::uint32_t>(r), graph.constants[a],
                                graph.constants[b]));
      }
    }
  };
  if (candidates) {
    for (const auto& [ca, cb] : *candidates) {
      const std::uint32_t a = graph.vertex_of(ca);
      const std::uint32_t b = graph.vertex_of(cb);
      if (a == kNoVertex || b == kNoVertex) continue;
      emit(a, b);
    }
  } else {
    const auto n = static_cast<std::uint32_t>(graph.vertex_count());
    for (std::uint32_t a = 0; a < n; ++a) {
      for (std::uint32_t b = 0; b < n; ++b) emit(a, b);
    }
  }
  return out;
}

}  // namespace monolink
