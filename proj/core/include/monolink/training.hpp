#pragma once

// Desk-scale training: BCE with logits, manual reverse-mode gradients
// through the GNN and the scoring function, Adam with weight decay,
// non-negativity clamping, threshold selection and evaluation metrics.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "monolink/kgdata.hpp"
#include "monolink/model.hpp"

namespace monolink {

// mean_i [ pw * y_i * softplus(-s_i) + (1 - y_i) * softplus(s_i) ].
double bce_logits_loss(std::span<const double> scores, std::span<const double> labels,
                       double positive_weight);

struct ParameterBlock {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;
  bool constrained = false;  // must stay non-negative for monotonicity
};

// Every trainable array of the model in a fixed order. GNN biases, NAM
// biases and the threshold are unconstrained; the threshold is not trained.
std::vector<ParameterBlock> parameter_blocks(Model& m);
Eigen::VectorXd flatten_parameters(const Model& m);
void assign_parameters(Model& m, const Eigen::VectorXd& flat);
std::vector<bool> constrained_mask(const Model& m);
// A copy of `m` with every parameter set to zero.
Model zeros_like(const Model& m);

struct Example {
  Fact fact;
  double label = 0.0;  // 1 positive, 0 negative
};

struct LossAndGradient {
  double loss = 0.0;
  Model gradient;  // same shapes as the model
};

// Loss of `examples` scored on `input` and its exact gradient. Max-k-sum
// routes gradient to the selected contributors (ties to the lowest vertex
// id); the ReLU derivative is 0 at 0.
LossAndGradient backward(const Model& m, const Dataset& input, std::span<const Example> examples,
                         double positive_weight);

struct TrainConfig {
  std::size_t epochs = 100;
  double learning_rate = 1e-3;
  double weight_decay = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::optional<double> positive_loss_weight;  // 50 with clamping, else 1
  std::size_t negatives_per_positive = 10;
  bool clamp_nonnegative = true;
  double holdout_fraction = 0.1;
  std::uint64_t seed = 0;
  // Assert both monotonicity validators after every clamped step.
  bool verify_monotonic = false;

  double positive_weight() const;
  // Throws DataError on invalid settings.
  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<double> losses;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Each epoch: split the training graph into input and held-out targets,
// add the split's separate targets, sample predicate-corruption negatives,
// take one Adam step on the whole batch and clamp. Throws DataError when
// the loss becomes NaN.
TrainResult train(Model init, const Split& split, const TrainConfig& cfg, const EpochCallback& log = {});

struct InitSpec {
  std::vector<std::size_t> hidden_dims;  // delta_1 .. delta_L; delta_L is the embedding dim
  ScoringKind scoring = ScoringKind::kRescal;
  std::size_t relation_dim = 0;  // TuckER d_r, defaults to the embedding dim
  AggregationBudget budget = AggregationBudget::finite(1);
  MessageDirection direction = MessageDirection::kAgainstEdges;
  Activation activation = Activation::kRelu;
};

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; with `nonnegative`
// they are then clamped at 0, the state a clamped run reaches from the
// default init. Biases zero.
Model random_model(const Signature& sig, const InitSpec& spec, bool nonnegative, std::uint64_t seed);

// The candidate score maximising accuracy with prediction s >= t; ties go
// to the largest candidate. Throws DataError when both sets are empty.
double select_threshold(std::span<const double> positive_scores, std::span<const double> negative_scores);
double select_threshold(const Model& m, const Dataset& input, std::span<const Fact> positives,
                        std::span<const Fact> negatives);

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auprc = 0.0;
  double final_epoch_loss = 0.0;

  std::string to_json() const;
};

// Average precision over distinct score thresholds (step interpolation).
double average_precision(std::span<const double> positive_scores, std::span<const double> negative_scores);

Metrics evaluate(std::span<const double> positive_scores, std::span<const double> negative_scores,
                 double threshold);
Metrics evaluate(const Model& m, const Dataset& input, std::span<const Fact> positives,
                 std::span<const Fact> negatives);

}  // namespace monolink
