#pragma once

// Aggregation capacities for monotonic max-sum GNNs with non-negative
// bilinear scoring: per-layer budgets C_l such that replacing k_l by C_l
// leaves the dataset transformation unchanged.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "monolink/gnn.hpp"
#include "monolink/scoring.hpp"

namespace monolink {

// What is known about X_{l,i}, the set of values dimension i can take after
// layer l over all datasets.
struct ValueBound {
  enum class Kind {
    kOnlyZero,  // X = {0}
    kPositive,  // every non-zero element is >= lower_bound > 0
    kUnknown,   // no positive lower bound could be established
  };
  Kind kind = Kind::kUnknown;
  double lower_bound = 0.0;
};

struct ValueBounds {
  std::vector<std::vector<ValueBound>> layers;  // layers[l][i], l = 0..L

  // Least lower bound over the indices of layer l; nullopt when some index
  // is unknown or every index is {0}.
  std::optional<double> epsilon(std::size_t layer) const;
  bool only_zero(std::size_t layer) const;
  bool any_unknown(std::size_t layer) const;
};

// Layer 0 is exactly 1. Layer 1 is exact (bounded knapsack over Boolean
// inputs). Deeper layers propagate lower bounds; a negative bias there
// yields kUnknown. Throws DataError for non-ReLU activations.
ValueBounds min_nonzero_bounds(const MaxSumGnn& gnn);

struct AlphaResult {
  std::optional<double> alpha;   // nullopt when epsilon at layer L is unknown
  std::vector<double> alpha_r;   // per relation, naturals
  std::vector<std::string> warnings;
};

AlphaResult compute_alpha(const MaxSumGnn& gnn, const BilinearView& f, double threshold,
                          const ValueBounds& bounds);

struct LayerCapacity {
  std::size_t layer = 0;  // 1-based
  std::optional<double> w, epsilon, alpha, beta, b;
  AggregationBudget capacity = AggregationBudget::finite(0);
  bool early_exit = false;  // set to 0 by the all-zero branch
  bool fallback = false;    // capacity kept at k_l for lack of bounds
};

struct CapacityResult {
  AlphaResult alpha;
  std::vector<LayerCapacity> layers;  // layers[l-1]
  AggregationBudget overall = AggregationBudget::finite(0);  // max_l C_l
  ValueBounds bounds;

  std::string report() const;
  std::string to_json() const;
};

// Throws InfeasibleError for scoring without a bilinear form and DataError
// for a non-monotonic model or non-ReLU activations.
CapacityResult compute_capacities(const MaxSumGnn& gnn, const ScoringFunction& f);
CapacityResult compute_capacities(const MaxSumGnn& gnn, const BilinearView& f, double threshold,
                                  const ValueBounds& bounds);

MaxSumGnn restrict_gnn(const MaxSumGnn& gnn, const CapacityResult& caps);

struct ValueOracleConfig {
  std::size_t max_constants = 3;
  // Enumerate every dataset when there are at most this many, else sample.
  std::size_t max_datasets = 1u << 15;
  std::uint64_t seed = 0;
};

// Least non-zero value observed per layer and index over small datasets;
// nullopt where only zero was observed.
std::vector<std::vector<std::optional<double>>> observed_min_nonzero(const MaxSumGnn& gnn,
                                                                     const ValueOracleConfig& cfg);

}  // namespace monolink
