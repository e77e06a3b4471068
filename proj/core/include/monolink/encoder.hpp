#pragma once

// Canonical encoding of a dataset as a vertex-labelled, edge-coloured graph.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "monolink/datalog.hpp"

namespace monolink {

inline constexpr std::uint32_t kNoVertex = static_cast<std::uint32_t>(-1);

struct ColoredGraph {
  // Vertex v stands for constant `constants[v]` of the source dataset's
  // table; vertices are ordered by constant name.
  std::vector<ConstId> constants;
  std::vector<std::string> names;
  // Per colour, sorted (source, target) vertex pairs.
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> edges;
  // Per colour and vertex: successors (targets of out-edges) and
  // predecessors, both ascending.
  std::vector<std::vector<std::vector<std::uint32_t>>> successors;
  std::vector<std::vector<std::vector<std::uint32_t>>> predecessors;
  Eigen::MatrixXd labels;  // |V| x delta

  std::size_t vertex_count() const { return constants.size(); }
  std::size_t color_count() const { return edges.size(); }
  // kNoVertex when the constant has no vertex.
  std::uint32_t vertex_of(ConstId c) const;

  // Index from constant id to vertex id, sized to the constant table.
  std::vector<std::uint32_t> vertex_index;
};

// One vertex per constant of con(D), plus one isolated vertex for every
// constant in `extra` that D does not mention.
ColoredGraph encode(const Dataset& data, const Signature& sig,
                    std::span<const ConstId> extra = {});

struct ScoringFunction;

using ConstPair = std::pair<ConstId, ConstId>;

// R^c(a,b) for every colour c and every candidate pair (all ordered pairs
// of vertices, a = b included, when `candidates` is absent) whose score
// meets the threshold. The result shares the constant table of `table`.
Dataset decode(const Eigen::MatrixXd& labels, const ScoringFunction& f, const ColoredGraph& graph,
               const Dataset& table, const std::optional<std::vector<ConstPair>>& candidates = {});

}  // namespace monolink
