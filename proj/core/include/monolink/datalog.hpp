#pragma once

// Constant-free Datalog over a signature of unary and binary predicates:
// facts, datasets, rules with body inequalities, the immediate consequence
// operator and theta-subsumption.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <variant>
#include <vector>

namespace monolink {

enum class Arity : std::uint8_t { kUnary = 1, kBinary = 2 };

// A predicate is addressed by arity and its position in the signature:
// unary index p is U_p (a label dimension), binary index c is colour c.
struct PredicateId {
  Arity arity = Arity::kBinary;
  std::uint32_t index = 0;

  auto operator<=>(const PredicateId&) const = default;
};

class Signature {
 public:
  Signature() = default;
  Signature(std::vector<std::string> unary, std::vector<std::string> binary);

  const std::vector<std::string>& unary_predicates() const { return unary_; }
  const std::vector<std::string>& binary_predicates() const { return binary_; }
  std::size_t unary_count() const { return unary_.size(); }
  std::size_t binary_count() const { return binary_.size(); }

  std::optional<PredicateId> find(std::string_view name) const;
  const std::string& name(PredicateId id) const;

  // Appends a predicate; throws DataError if the name is already taken.
  PredicateId add_unary(std::string name);
  PredicateId add_binary(std::string name);

  bool operator==(const Signature&) const = default;

 private:
  std::vector<std::string> unary_;
  std::vector<std::string> binary_;
};

using ConstId = std::uint32_t;
inline constexpr ConstId kNoConstant = static_cast<ConstId>(-1);

// Ground atom. For unary facts `second` is kNoConstant.
struct Fact {
  PredicateId predicate;
  ConstId first = kNoConstant;
  ConstId second = kNoConstant;

  auto operator<=>(const Fact&) const = default;

  static Fact unary(std::uint32_t pred, ConstId a) {
    return {{Arity::kUnary, pred}, a, kNoConstant};
  }
  static Fact binary(std::uint32_t pred, ConstId a, ConstId b) {
    return {{Arity::kBinary, pred}, a, b};
  }
};

// A finite set of facts plus the table interning constant names to dense
// ids. Ids are assigned by first interning; con(D) is the set of constants
// actually mentioned by a fact, which may be smaller than the table.
class Dataset {
 public:
  ConstId intern(std::string_view name);
  std::optional<ConstId> find_constant(std::string_view name) const;
  const std::string& constant_name(ConstId id) const { return names_.at(id); }
  std::size_t constant_table_size() const { return names_.size(); }

  // Facts must reference interned constants.
  bool insert(const Fact& fact);
  bool erase(const Fact& fact) { return facts_.erase(fact) > 0; }
  bool contains(const Fact& fact) const { return facts_.count(fact) > 0; }

  // Convenience for tests and loaders: interns constants by name.
  bool add(const Signature& sig, std::string_view predicate, std::string_view a,
           std::string_view b = {});
  bool has(const Signature& sig, std::string_view predicate, std::string_view a,
           std::string_view b = {}) const;

  const std::set<Fact>& facts() const { return facts_; }
  std::size_t size() const { return facts_.size(); }
  bool empty() const { return facts_.empty(); }

  // con(D), ascending by id.
  std::vector<ConstId> constants() const;

  // A dataset with the same constant table and no facts.
  Dataset empty_copy() const;

  // Adds every fact of `other`, interning its constants by name.
  void merge(const Dataset& other);

  bool is_subset_of(const Dataset& other) const;

  // Name-level equality: two datasets are equal when they contain the same
  // facts after resolving constant ids to names.
  bool operator==(const Dataset& other) const;

  // Facts as (predicate, first, second) name triples, sorted; unary facts
  // have an empty `second`.
  std::vector<std::tuple<std::string, std::string, std::string>> to_named(
      const Signature& sig) const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, ConstId> ids_;
  std::set<Fact> facts_;
};

// Rule atoms carry variable names; arity is fixed by the predicate.
struct Atom {
  PredicateId predicate;
  std::string first;
  std::string second;  // empty for unary atoms

  std::size_t arity() const { return predicate.arity == Arity::kUnary ? 1 : 2; }
  auto operator<=>(const Atom&) const = default;
};

// t1 != t2; the two terms are syntactically different.
struct Inequality {
  std::string lhs;
  std::string rhs;

  auto operator<=>(const Inequality&) const = default;
};

using Literal = std::variant<Atom, Inequality>;

struct Rule {
  std::vector<Literal> body;
  Atom head;

  // Variables in order of first occurrence: body literals, then head.
  std::vector<std::string> variables() const;
  std::vector<Atom> body_atoms() const;
  std::vector<Inequality> body_inequalities() const;
  bool has_inequalities() const;

  bool operator==(const Rule&) const = default;
};

using Program = std::vector<Rule>;

// Throws DataError on an inequality with identical terms or an empty
// variable name.
void validate_rule(const Rule& rule);

// T_r(D). Head variables missing from the body range over con(D).
Dataset apply_rule(const Rule& rule, const Dataset& data);

// T_P(D) = union of T_r(D); a single application, no fixpoint.
Dataset apply_program(std::span<const Rule> program, const Dataset& data);

// Theta-subsumption: a substitution theta over the variables of `general`
// maps its head onto the head of `specific` and every body literal
// (inequalities included) onto a body literal of `specific`.
bool subsumes(const Rule& general, const Rule& specific);

// Renames variables to v0, v1, ... in order of first occurrence. Two rules
// that are equal up to variable renaming and have the same literal order
// map to the same canonical rule.
Rule rename_canonically(const Rule& rule);

// Text form, see rule_text.cpp for the grammar:
//   rule    := [literal ("," literal)*] "->" atom
//   literal := atom | term "!=" term
//   atom    := IDENT "(" term ["," term] ")"
Rule parse_rule(std::string_view text, const Signature& sig);
std::string to_string(const Rule& rule, const Signature& sig);

// One rule per line; '#' starts a comment; blank lines are skipped. Parse
// errors carry the 1-based line number.
Program parse_program(std::string_view text, const Signature& sig);
// As above, but predicates missing from `sig` are added with the arity of
// their first use.
Rule parse_rule_extending(std::string_view text, Signature& sig);
Program parse_program_extending(std::string_view text, Signature& sig);
std::string to_string(const Program& program, const Signature& sig);

std::string to_string(const Fact& fact, const Dataset& data, const Signature& sig);

}  // namespace monolink
