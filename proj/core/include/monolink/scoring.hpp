#pragma once

// Monotonically increasing scoring functions: RESCAL, DistMult, TuckER, NAM.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace monolink {

enum class ScoringKind { kRescal, kDistMult, kTucker, kNam };

std::string to_string(ScoringKind k);
ScoringKind parse_scoring_kind(std::string_view name);

struct NamLayer {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

// Parameters by kind:
//   RESCAL   matrices[R] (d x d)
//   DistMult vectors[R]  (d), the diagonal of M_R
//   TuckER   core[j] (d x d) is the slice W[:, j, :]; vectors[R] (d_r)
//   NAM      vectors[R] (d); nam[0] d x 2d on [h; r_R], nam[1] and nam[2] d x d
// NAM: score = t . relu(W3 relu(W2 relu(W1 [h; r_R] + b1) + b2) + b3).
struct ScoringFunction {
  ScoringKind kind = ScoringKind::kRescal;
  std::size_t dim = 0;
  double threshold = 0.0;
  std::vector<Eigen::MatrixXd> matrices;
  std::vector<Eigen::VectorXd> vectors;
  std::vector<Eigen::MatrixXd> core;
  std::array<NamLayer, 3> nam;

  std::size_t relation_count() const;
  std::size_t relation_dim() const;  // d_r for TuckER, d otherwise

  static ScoringFunction zeros(ScoringKind kind, std::size_t dim, std::size_t relations,
                               std::size_t relation_dim = 0);
  void check_shapes() const;
};

double score(const ScoringFunction& f, std::size_t relation, const Eigen::Ref<const Eigen::VectorXd>& h,
             const Eigen::Ref<const Eigen::VectorXd>& t);

struct ParameterViolation {
  std::string parameter;  // e.g. "M[2]", "W1", "r[0]"
  std::size_t row;
  std::size_t col;
  double value;
};

struct ScoringMonotonicityReport {
  std::vector<ParameterViolation> violations;
  bool ok() const { return violations.empty(); }
  std::vector<std::string> messages() const;
};

// Constrained parameters: every relation parameter, TuckER's core, NAM
// weights. NAM biases are free.
ScoringMonotonicityReport validate_monotonic_scoring(const ScoringFunction& f);

// f(R,h,t) = h^T M_R t.
struct BilinearView {
  std::vector<Eigen::MatrixXd> matrices;

  double score(std::size_t relation, const Eigen::Ref<const Eigen::VectorXd>& h,
               const Eigen::Ref<const Eigen::VectorXd>& t) const;
};

bool has_bilinear_view(const ScoringFunction& f);
// Throws InfeasibleError for NAM.
BilinearView to_bilinear(const ScoringFunction& f);

struct MonotoneWitness {
  std::size_t relation;
  Eigen::VectorXd h, t, h_prime, t_prime;
  double score, score_prime;
};

// Random search for a monotonicity violation: 0 <= h <= h', 0 <= t <= t' with
// f(R,h,t) > f(R,h',t'). Returns the first witness found, if any.
std::optional<MonotoneWitness> scoring_monotone_check(const ScoringFunction& f, std::size_t trials,
                                                      std::uint64_t seed);

}  // namespace monolink
