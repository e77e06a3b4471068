#pragma once

// Exact rule soundness for monotonic models: a rule is sound iff its head
// is derived on every canonical instance D_mu of its body, plus rule
// composition through captured patterns.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "monolink/datalog.hpp"
#include "monolink/gnn.hpp"
#include "monolink/model.hpp"

namespace monolink {

struct CanonicalCheckInstance {
  // Variable -> constant name ("a_<var>"); every a_x is a constant of `data`.
  std::map<std::string, std::string> substitution;
  // A mu plus R(b_x, mu(x)) (or R(mu(x), b_x) for along_edges) for every
  // variable that occurs in no body atom.
  Dataset data;
  Fact head;  // H mu, over the constant table of `data`
};

// Substitutions of vars(r) into {a_x} that respect the body inequalities.
// With `dedup`, one substitution per set partition of the variables (block
// mapped to a_<first variable of the block>); otherwise all n^n maps.
std::vector<CanonicalCheckInstance> enumerate_check_instances(const Rule& r, const Signature& sig,
                                                              MessageDirection direction,
                                                              bool dedup = true);

struct CheckOptions {
  // With every k_l <= 1 the model is monotone under homomorphisms, so the
  // all-distinct instance dominates every other one and suffices.
  bool homomorphism_shortcut = true;
};

struct SoundnessVerdict {
  bool sound = false;
  std::optional<CanonicalCheckInstance> witness;  // first failing instance
  std::size_t instances_checked = 0;
};

// Head score of `instance` under `m`.
double instance_score(const Model& m, const CanonicalCheckInstance& instance);

// Throws DataError when the model is not monotonic or the head is unary.
SoundnessVerdict check_soundness(const Model& m, const Rule& r, const CheckOptions& opts = {});

// True when every layer aggregates with k <= 1.
bool is_max_gnn(const MaxSumGnn& gnn);

// Given sound A_i -> B_i and a captured rule B_1 & ... & B_n -> H, returns
// A_1 & ... & A_n -> H with the head variables of each A_i -> B_i unified
// with the terms of B_i. The capture premise is the caller's
// responsibility. Throws DataError when the heads do not unify.
Rule derive_from_capture(const std::vector<Rule>& sound_rules, const Rule& captured);

// Whether `r` arises from `pattern` by an injective replacement of the
// pattern's predicates by predicates of r's signature (and a renaming of
// variables). Predicates are compared by arity and signature position, so
// pattern and rule may come from different signatures.
bool conforms_to_pattern(const Rule& r, const Rule& pattern);

struct NamedPattern {
  std::string name;
  std::string text;  // over meta predicates M1, M2, M3
};

// Hierarchy, symmetry, inversion, intersection and composition.
const std::vector<NamedPattern>& standard_patterns();
Signature meta_signature();

}  // namespace monolink
