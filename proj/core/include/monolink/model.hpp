#pragma once

// A GNN paired with a scoring function realises the dataset transformation
// T(D) = dec(N(enc(D))).

#include <optional>
#include <string>
#include <vector>

#include "monolink/datalog.hpp"
#include "monolink/encoder.hpp"
#include "monolink/gnn.hpp"
#include "monolink/scoring.hpp"

namespace monolink {

// Above this many constants all-pairs decoding is refused and callers must
// pass candidate pairs.
inline constexpr std::size_t kAllPairsLimit = 512;

struct Model {
  Signature signature;
  MaxSumGnn gnn;
  ScoringFunction scoring;

  // Throws DataError when the components disagree with each other or with
  // the signature.
  void check_consistency() const;

  bool is_monotonic() const;
  std::vector<std::string> monotonicity_issues() const;
};

Dataset apply_model(const Model& m, const Dataset& data,
                    const std::optional<std::vector<ConstPair>>& candidates = {});

// Scores of specific binary facts. Constants not mentioned by `data` are
// scored as isolated vertices.
std::vector<double> score_facts(const Model& m, const Dataset& data, std::span<const Fact> facts);

}  // namespace monolink
