#pragma once

// Max-sum GNNs: per layer
//   v_l = sigma_l(b_l + A_l v_{l-1} + sum_c B_l^c max-k_l-sum{u_{l-1} : u c-neighbour of v})
// with max-k-sum taken element-wise per dimension.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "monolink/encoder.hpp"

namespace monolink {

enum class Activation { kRelu, kIdentity };

std::string to_string(Activation a);
Activation parse_activation(std::string_view name);

// against_edges: v aggregates over u with (v,u) in E^c.
// along_edges:   v aggregates over u with (u,v) in E^c.
enum class MessageDirection { kAgainstEdges, kAlongEdges };

std::string to_string(MessageDirection d);
MessageDirection parse_message_direction(std::string_view name);

// k in N_0 or infinity. Infinity is an explicit state, never a large number.
class AggregationBudget {
 public:
  constexpr AggregationBudget() = default;
  static constexpr AggregationBudget finite(std::size_t k) { return AggregationBudget(false, k); }
  static constexpr AggregationBudget infinite() { return AggregationBudget(true, 0); }

  constexpr bool is_infinite() const { return infinite_; }
  // Requires !is_infinite().
  constexpr std::size_t value() const { return k_; }
  // min(k, n).
  constexpr std::size_t take(std::size_t n) const { return infinite_ || k_ > n ? n : k_; }

  constexpr bool operator==(const AggregationBudget&) const = default;

 private:
  constexpr AggregationBudget(bool inf, std::size_t k) : infinite_(inf), k_(k) {}
  bool infinite_ = true;
  std::size_t k_ = 0;
};

std::string to_string(AggregationBudget k);

// Sum of the min(k,|S|) largest values (with repetition); 0 for an empty
// selection. Values are summed in descending order, so the result depends
// only on the multiset and a budget that covers S gives the same bits as k=inf.
double max_k_sum(std::span<const double> values, AggregationBudget k);

struct GnnLayer {
  Eigen::MatrixXd a;               // dims[l] x dims[l-1]
  std::vector<Eigen::MatrixXd> b;  // one per colour, dims[l] x dims[l-1]
  Eigen::VectorXd bias;            // dims[l]
  Activation activation = Activation::kRelu;
  AggregationBudget budget = AggregationBudget::infinite();
};

struct MaxSumGnn {
  std::vector<std::size_t> dims;  // delta_0 .. delta_L
  std::vector<GnnLayer> layers;   // layers[l-1] is layer l
  MessageDirection direction = MessageDirection::kAgainstEdges;

  std::size_t layer_count() const { return layers.size(); }
  std::size_t input_dim() const { return dims.front(); }
  std::size_t output_dim() const { return dims.back(); }
  std::size_t color_count() const { return layers.empty() ? 0 : layers.front().b.size(); }
  std::size_t max_dim() const;

  // A zero-initialised network with the given shape.
  static MaxSumGnn zeros(std::vector<std::size_t> dims, std::size_t colors,
                         AggregationBudget budget, MessageDirection direction);

  // Throws DataError on inconsistent shapes.
  void check_shapes() const;
};

// labels[l] is |V| x dims[l]; pre_activations[l] (l >= 1) the argument of sigma_l.
struct LayerTrace {
  std::vector<Eigen::MatrixXd> labels;
  std::vector<Eigen::MatrixXd> pre_activations;

  const Eigen::MatrixXd& output() const { return labels.back(); }
};

// Neighbours of v whose labels v aggregates under `direction`.
const std::vector<std::uint32_t>& message_sources(const ColoredGraph& graph, std::size_t color,
                                                  std::uint32_t v, MessageDirection direction);

LayerTrace forward(const MaxSumGnn& gnn, const ColoredGraph& graph);

struct WeightViolation {
  std::size_t layer;  // 1-based
  std::string matrix; // "A" or "B^<colour>"
  std::size_t row;
  std::size_t col;
  double value;
};

struct GnnMonotonicityReport {
  std::vector<WeightViolation> weights;
  std::vector<std::size_t> activation_layers;  // layers with a non-conforming activation

  bool ok() const { return weights.empty() && activation_layers.empty(); }
  std::vector<std::string> messages() const;
};

GnnMonotonicityReport validate_monotonic(const MaxSumGnn& gnn);

}  // namespace monolink
