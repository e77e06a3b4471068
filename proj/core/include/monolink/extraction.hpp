#pragma once

// Rule spaces (flat k-body rules and (p,o)-tree-like rules), sound-rule
// mining with subsumption pruning, and programs equivalent to a model.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "monolink/datalog.hpp"
#include "monolink/gnn.hpp"
#include "monolink/model.hpp"

namespace monolink {

inline constexpr std::uint64_t kDefaultSpaceCap = 10'000'000;

// Flat rules: head R(x,y); a body of k binary atoms in a fixed order whose
// terms are x, y or existential variables, each existential occurring at
// least twice. Bodies are canonical up to renaming of existentials.
// There are 5 one-atom and 52 two-atom term patterns per predicate tuple.
std::uint64_t flat_pattern_count(std::size_t body_atoms);
// Rules with exactly `body_atoms` atoms: |R| * |R|^k * patterns(k).
std::uint64_t flat_rule_count(const Signature& sig, std::size_t body_atoms);

// Rules with 1..max_body_atoms atoms, ordered by body size, head predicate,
// body predicates and pattern. Throws DataError unless max_body_atoms is 1
// or 2, InfeasibleError when the space exceeds `cap`.
std::vector<Rule> enumerate_flat_rules(const Signature& sig, std::size_t max_body_atoms,
                                       std::uint64_t cap = kDefaultSpaceCap);

struct TreeBudget {
  std::size_t p = 0;  // depth
  std::size_t o = 0;  // a depth-i variable has at most o*(p-i) children
  bool allow_inequalities = false;
  // Child atoms are R(x,y_i) for against_edges and R(y_i,x) for along_edges,
  // so messages travel from children to parents.
  MessageDirection direction = MessageDirection::kAgainstEdges;
};

// A tree-like formula phi(x). Children are grouped in blocks: a block is a
// colour plus a multiset of child formulas whose variables are pairwise
// unequal; a one-member block carries no inequality. Without inequalities
// every block has one member and blocks are distinct.
struct TreeFormula {
  struct Block {
    std::uint32_t color = 0;
    std::vector<std::uint32_t> members;  // ids at the previous height, ascending

    auto operator<=>(const Block&) const = default;
  };
  std::uint64_t unary = 0;    // bit p: U_p(x)
  std::vector<Block> blocks;  // ascending
  std::size_t atoms = 0;      // body atoms of the whole tree
  std::size_t fan_out = 0;    // children of the root
};

// Formulas by height h = p - depth: table[h] holds every formula of height
// at most h whose children come from table[h-1].
class TreeSpace {
 public:
  // Throws InfeasibleError when the rule count exceeds `cap` and DataError
  // when the signature has more than 64 unary predicates.
  TreeSpace(const Signature& sig, const TreeBudget& budget, std::uint64_t cap = kDefaultSpaceCap);

  // Counts without materialising (saturates at 2^63).
  static std::uint64_t count_formulas(const Signature& sig, const TreeBudget& budget);
  static std::uint64_t count_rules(const Signature& sig, const TreeBudget& budget);

  const TreeBudget& budget() const { return budget_; }
  const Signature& signature() const { return sig_; }
  std::size_t height() const { return budget_.p; }
  const std::vector<TreeFormula>& formulas(std::size_t h) const { return table_.at(h); }
  // Root formulas ordered by atom count, then id.
  const std::vector<std::uint32_t>& root_order() const { return order_; }
  std::uint64_t rule_count() const;

  // Appends the literals of formula `id` at height h rooted at `root`;
  // fresh variables are drawn from `counter`.
  void append_body(std::size_t h, std::uint32_t id, const std::string& root,
                   std::vector<Literal>& body, std::size_t& counter) const;
  Rule rule(std::uint32_t head, std::uint32_t fx, std::uint32_t fy) const;

  // phi <= psi when phi maps homomorphically into psi fixing the root, so
  // any rule built from psi is subsumed by the same rule built from phi.
  // Exact without inequalities, sufficient with them.
  bool leq(std::size_t h, std::uint32_t phi, std::uint32_t psi) const;

 private:
  bool leq_uncached(std::size_t h, std::uint32_t phi, std::uint32_t psi) const;

  Signature sig_;
  TreeBudget budget_;
  std::vector<std::vector<TreeFormula>> table_;
  std::vector<std::uint32_t> order_;
  mutable std::vector<std::vector<std::int8_t>> leq_cache_;
  mutable std::vector<std::unordered_map<std::uint64_t, bool>> leq_map_;
};

// Tree-like rules of the budget, ordered by head, then (fx, fy) along
// root_order(). Throws InfeasibleError above `cap`.
std::vector<Rule> enumerate_treelike(const TreeBudget& budget, const Signature& sig,
                                     std::uint64_t cap = kDefaultSpaceCap);

// Independent structural check: head R(x,y) over distinct variables; the
// body splits into variable-disjoint trees rooted at x and y whose edges
// point along the budget's direction, within the depth and fan-out bounds;
// inequalities only relate siblings.
bool is_treelike(const Rule& r, const TreeBudget& budget);

struct MiningStats {
  std::size_t candidates = 0;
  std::size_t checked = 0;
  std::size_t sound = 0;
  std::size_t pruned = 0;
};

struct MiningResult {
  Program program;
  MiningStats stats;
  std::string space;  // human-readable space description
};

struct MiningOptions {
  bool prune = true;
  std::size_t workers = 1;
};

// Sound rules of `space`, in space order. With pruning, a rule subsumed by an
// already mined sound rule is skipped unchecked and left out. Throws
// DataError for a non-monotonic model.
MiningResult mine_sound_rules(const Model& m, const std::vector<Rule>& space,
                              const MiningOptions& opts = {});

// Tree-like mining with structural pruning. For max GNNs and inequality-free
// spaces each formula's root embedding is computed once and a rule is sound
// iff its head scores at least the threshold on the two root embeddings.
MiningResult mine_treelike(const Model& m, const TreeSpace& space, const MiningOptions& opts = {});

struct EquivalenceOptions {
  std::uint64_t cap = kDefaultSpaceCap;
  std::size_t workers = 1;
};

struct EquivalenceResult {
  MiningResult mining;
  TreeBudget budget;
  std::optional<AggregationBudget> capacity;  // set on the max-sum path
};

// Max GNNs: the sound inequality-free (L, |Col| * delta_N)-tree-like rules.
// Otherwise the sound (L, |Col| * delta_N * C)-tree-like rules with
// inequalities, C from the capacity module. Throws InfeasibleError for
// scoring without a bilinear form, an unbounded capacity or a space above
// the cap.
EquivalenceResult equivalent_program(const Model& m, const EquivalenceOptions& opts = {});

// Program text preceded by a '#' header with the model hash, the space and
// the mining counts.
std::string format_mined_program(const MiningResult& result, const Signature& sig,
                                 const std::string& model_hash);

}  // namespace monolink
