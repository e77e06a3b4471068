#include "monolink/datalog.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <unordered_set>

#include "monolink/errors.hpp"

namespace monolink {

Signature::Signature(std::vector<std::string> unary, std::vector<std::string> binary) {
  for (auto& name : unary) add_unary(std::move(name));
  for (auto& name : binary) add_binary(std::move(name));
}

std::optional<PredicateId> Signature::find(std::string_view name) const {
  for (std::size_t i = 0; i < unary_.size(); ++i) {
    if (unary_[i] == name) return PredicateId{Arity::kUnary, static_cast<std::uint32_t>(i)};
  }
  for (std::size_t i = 0; i < binary_.size(); ++i) {
    if (binary_[i] == name) return PredicateId{Arity::kBinary, static_cast<std::uint32_t>(i)};
  }
  return std::nullopt;
}

const std::string& Signature::name(PredicateId id) const {
  return id.arity == Arity::kUnary ? unary_.at(id.index) : binary_.at(id.index);
}

PredicateId Signature::add_unary(std::string name) {
  if (name.empty()) throw DataError("empty predicate name");
  if (find(name)) throw DataError("duplicate predicate name '" + name + "'");
  unary_.push_back(std::move(name));
  return {Arity::kUnary, static_cast<std::uint32_t>(unary_.size() - 1)};
}

PredicateId Signature::add_binary(std::string name) {
  if (name.empty()) throw DataError("empty predicate name");
  if (find(name)) throw DataError("duplicate predicate name '" + name + "'");
  binary_.push_back(std::move(name));
  return {Arity::kBinary, static_cast<std::uint32_t>(binary_.size() - 1)};
}

// ---------------------------------------------------------------------------
// Dataset

ConstId Dataset::intern(std::string_view name) {
  auto it = ids_.find(std::string(name));
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<ConstId>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<ConstId> Dataset::find_constant(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

bool Dataset::insert(const Fact& fact) {
  assert(fact.first < names_.size());
  assert(fact.predicate.arity == Arity::kUnary || fact.second < names_.size());
  return facts_.insert(fact).second;
}

bool Dataset::add(const Signature& sig, std::string_view predicate, std::string_view a,
                  std::string_view b) {
  auto pred = sig.find(predicate);
  if (!pred) throw DataError("unknown predicate '" + std::string(predicate) + "'");
  if ((pred->arity == Arity::kBinary) == b.empty()) {
    throw DataError("arity mismatch for predicate '" + std::string(predicate) + "'");
  }
  Fact fact{*pred, intern(a), kNoConstant};
  if (pred->arity == Arity::kBinary) fact.second = intern(b);
  return insert(fact);
}

bool Dataset::has(const Signature& sig, std::string_view predicate, std::string_view a,
                  std::string_view b) const {
  auto pred = sig.find(predicate);
  if (!pred) return false;
  auto ia = find_constant(a);
  if (!ia) return false;
  Fact fact{*pred, *ia, kNoConstant};
  if (pred->arity == Arity::kBinary) {
    auto ib = find_constant(b);
    if (!ib) return false;
    fact.second = *ib;
  }
  return contains(fact);
}

std::vector<ConstId> Dataset::constants() const {
  std::vector<bool> seen(names_.size(), false);
  for (const auto& f : facts_) {
    seen[f.first] = true;
    if (f.second != kNoConstant) seen[f.second] = true;
  }
  std::vector<ConstId> out;
  for (ConstId i = 0; i < seen.size(); ++i) {
    if (seen[i]) out.push_back(i);
  }
  return out;
}

Dataset Dataset::empty_copy() const {
  Dataset out;
  out.names_ = names_;
  out.ids_ = ids_;
  return out;
}

void Dataset::merge(const Dataset& other) {
  for (const auto& f : other.facts_) {
    Fact g = f;
    g.first = intern(other.constant_name(f.first));
    if (f.second != kNoConstant) g.second = intern(other.constant_name(f.second));
    facts_.insert(g);
  }
}

bool Dataset::is_subset_of(const Dataset& other) const {
  for (const auto& f : facts_) {
    auto a = other.find_constant(constant_name(f.first));
    if (!a) return false;
    Fact g{f.predicate, *a, kNoConstant};
    if (f.second != kNoConstant) {
      auto b = other.find_constant(constant_name(f.second));
      if (!b) return false;
      g.second = *b;
    }
    if (!other.contains(g)) return false;
  }
  return true;
}

bool Dataset::operator==(const Dataset& other) const {
  return size() == other.size() && is_subset_of(other);
}

std::vector<std::tuple<std::string, std::string, std::string>> Dataset::to_named(
    const Signature& sig) const {
  std::vector<std::tuple<std::string, std::string, std::string>> out;
  out.reserve(facts_.size());
  for (const auto& f : facts_) {
    out.emplace_back(sig.name(f.predicate), names_[f.first],
                     f.second == kNoConstant ? std::string() : names_[f.second]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Rules

std::vector<std::string> Rule::variables() const {
  std::vector<std::string> out;
  auto note = [&](const std::string& v) {
    if (!v.empty() && std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  };
  for (const auto& lit : body) {
    if (const auto* a = std::get_if<Atom>(&lit)) {
      note(a->first);
      note(a->second);
    } else {
      const auto& ineq = std::get<Inequality>(lit);
      note(ineq.lhs);
      note(ineq.rhs);
    }
  }
  note(head.first);
  note(head.second);
  return out;
}

std::vector<Atom> Rule::body_atoms() const {
  std::vector<Atom> out;
  for (const auto& lit : body) {
    if (const auto* a = std::get_if<Atom>(&lit)) out.push_back(*a);
  }
  return out;
}

std::vector<Inequality> Rule::body_inequalities() const {
  std::vector<Inequality> out;
  for (const auto& lit : body) {
    if (const auto* i = std::get_if<Inequality>(&lit)) out.push_back(*i);
  }
  return out;
}

bool Rule::has_inequalities() const {
  return std::any_of(body.begin(), body.end(),
                     [](const Literal& l) { return std::holds_alternative<Inequality>(l); });
}

void validate_rule(const Rule& rule) {
  auto check_atom = [](const Atom& a) {
    if (a.first.empty()) throw DataError("atom without terms");
    if ((a.predicate.arity == Arity::kBinary) == a.second.empty()) {
      throw DataError("atom arity does not match its predicate");
    }
  };
  check_atom(rule.head);
  for (const auto& lit : rule.body) {
    if (const auto* a = std::get_if<Atom>(&lit)) {
      check_atom(*a);
    } else {
      const auto& ineq = std::get<Inequality>(lit);
      if (ineq.lhs.empty() || ineq.rhs.empty()) throw DataError("inequality with empty term");
      if (ineq.lhs == ineq.rhs) {
        throw DataError("inequality '" + ineq.lhs + " != " + ineq.rhs +
                        "' mentions the same term twice");
      }
    }
  }
}

namespace {

// Per-predicate indexes over one dataset.
struct DatasetIndex {
  explicit DatasetIndex(const Dataset& data) : table_size(data.constant_table_size()) {
    domain = data.constants();
    for (const auto& f : data.facts()) {
      if (f.predicate.arity == Arity::kUnary) {
        unary[f.predicate.index].push_back(f.first);
      } else {
        auto& rel = binary[f.predicate.index];
        rel.out[f.first].push_back(f.second);
        rel.in[f.second].push_back(f.first);
        rel.pairs.emplace(f.first, f.second);
      }
    }
    for (auto& [_, v] : unary) std::sort(v.begin(), v.end());
    for (auto& [_, rel] : binary) {
      for (auto& [a, _2] : rel.out) rel.sources.push_back(a);
      for (auto& [b, _2] : rel.in) rel.targets.push_back(b);
      std::sort(rel.sources.begin(), rel.sources.end());
      std::sort(rel.targets.begin(), rel.targets.end());
      for (const auto& [a, b] : rel.pairs) {
        if (a == b) rel.loops.push_back(a);
      }
    }
  }

  struct Relation {
    std::map<ConstId, std::vector<ConstId>> out;
    std::map<ConstId, std::vector<ConstId>> in;
    std::set<std::pair<ConstId, ConstId>> pairs;
    std::vector<ConstId> sources;
    std::vector<ConstId> targets;
    std::vector<ConstId> loops;
  };

  bool holds_unary(std::uint32_t p, ConstId a) const {
    auto it = unary.find(p);
    return it != unary.end() && std::binary_search(it->second.begin(), it->second.end(), a);
  }
  bool holds_binary(std::uint32_t c, ConstId a, ConstId b) const {
    auto it = binary.find(c);
    return it != binary.end() && it->second.pairs.count({a, b}) > 0;
  }

  std::size_t table_size;
  std::vector<ConstId> domain;
  std::map<std::uint32_t, std::vector<ConstId>> unary;
  std::map<std::uint32_t, Relation> binary;
};

struct CompiledLiteral {
  bool is_atom = true;
  PredicateId predicate;
  int a = -1;
  int b = -1;  // -1 for unary atoms
};

// Existential evaluation of a rule body under a partial assignment. The
// unresolved literals are split into components over unbound variables,
// each solved independently; tree-shaped bodies therefore cost a product
// of per-branch searches instead of a product of domains.
class BodySolver {
 public:
  BodySolver(const DatasetIndex& index, std::vector<CompiledLiteral> literals, int var_count)
      : index_(index), literals_(std::move(literals)), var_count_(var_count) {}

  bool literal_holds(const CompiledLiteral& l, const std::vector<ConstId>& asg) const {
    if (!l.is_atom) return asg[l.a] != asg[l.b];
    if (l.predicate.arity == Arity::kUnary) return index_.holds_unary(l.predicate.index, asg[l.a]);
    return index_.holds_binary(l.predicate.index, asg[l.a], asg[l.b]);
  }

  bool bound(const CompiledLiteral& l, const std::vector<ConstId>& asg) const {
    return asg[l.a] != kNoConstant && (l.b < 0 || asg[l.b] != kNoConstant);
  }

  // Smallest candidate list for `var` implied by atoms mentioning it.
  const std::vector<ConstId>& candidates(int var, const std::vector<ConstId>& asg,
                                         std::span<const int> lits) const {
    const std::vector<ConstId>* best = &index_.domain;
    auto consider = [&](const std::vector<ConstId>* v) {
      if (v != nullptr && v->size() < best->size()) best = v;
    };
    static const std::vector<ConstId> kEmpty;
    for (int li : lits) {
      const auto& l = literals_[li];
      if (!l.is_atom) continue;
      if (l.predicate.arity == Arity::kUnary) {
        if (l.a != var) continue;
        auto it = index_.unary.find(l.predicate.index);
        consider(it == index_.unary.end() ? &kEmpty : &it->second);
        continue;
      }
      auto it = index_.binary.find(l.predicate.index);
      if (l.a != var && l.b != var) continue;
      if (it == index_.binary.end()) {
        consider(&kEmpty);
        continue;
      }
      const auto& rel = it->second;
      if (l.a == var && l.b == var) {
        consider(&rel.loops);
      } else if (l.a == var) {
        if (asg[l.b] != kNoConstant) {
          auto jt = rel.in.find(asg[l.b]);
          consider(jt == rel.in.end() ? &kEmpty : &jt->second);
        } else {
          consider(&rel.sources);
        }
      } else {
        if (asg[l.a] != kNoConstant) {
          auto jt = rel.out.find(asg[l.a]);
          consider(jt == rel.out.end() ? &kEmpty : &jt->second);
        } else {
          consider(&rel.targets);
        }
      }
    }
    return *best;
  }

  bool satisfiable(std::vector<ConstId>& asg, std::vector<int> lits) const {
    std::vector<int> open;
    for (int li : lits) {
      if (bound(literals_[li], asg)) {
        if (!literal_holds(literals_[li], asg)) return false;
      } else {
        open.push_back(li);
      }
    }
    if (open.empty()) return true;

    // Components over unbound variables.
    std::vector<int> parent(var_count_);
    for (int i = 0; i < var_count_; ++i) parent[i] = i;
    std::function<int(int)> root = [&](int v) { return parent[v] == v ? v : parent[v] = root(parent[v]); };
    for (int li : open) {
      const auto& l = literals_[li];
      if (l.b >= 0 && asg[l.a] == kNoConstant && asg[l.b] == kNoConstant) {
        parent[root(l.a)] = root(l.b);
      }
    }
    std::map<int, std::vector<int>> components;
    for (int li : open) {
      const auto& l = literals_[li];
      const int v = asg[l.a] == kNoConstant ? l.a : l.b;
      components[root(v)].push_back(li);
    }
    for (auto& [_, comp] : components) {
      if (!solve_component(asg, comp)) return false;
    }
    return true;
  }

  bool solve_component(std::vector<ConstId>& asg, const std::vector<int>& comp) const {
    // Branch on the variable with the fewest candidates.
    int best_var = -1;
    const std::vector<ConstId>* best = nullptr;
    for (int li : comp) {
      const auto& l = literals_[li];
      for (int v : {l.a, l.b}) {
        if (v < 0 || asg[v] != kNoConstant) continue;
        const auto& cand = candidates(v, asg, comp);
        if (best == nullptr || cand.size() < best->size()) {
          best = &cand;
          best_var = v;
        }
      }
    }
    assert(best_var >= 0);
    const std::vector<ConstId> options = *best;  // the index may be reused below
    for (ConstId c : options) {
      asg[best_var] = c;
      if (satisfiable(asg, comp)) {
        asg[best_var] = kNoConstant;
        return true;
      }
    }
    asg[best_var] = kNoConstant;
    return false;
  }

  const std::vector<CompiledLiteral>& literals() const { return literals_; }

 private:
  const DatasetIndex& index_;
  std::vector<CompiledLiteral> literals_;
  int var_count_;
};

}  // namespace

Dataset apply_rule(const Rule& rule, const Dataset& data) {
  validate_rule(rule);
  Dataset out = data.empty_copy();
  if (data.empty()) return out;

  const auto vars = rule.variables();
  auto var_index = [&](const std::string& v) {
    return static_cast<int>(std::find(vars.begin(), vars.end(), v) - vars.begin());
  };
  std::vector<CompiledLiteral> lits;
  for (const auto& lit : rule.body) {
    CompiledLiteral c;
    if (const auto* a = std::get_if<Atom>(&lit)) {
      c.predicate = a->predicate;
      c.a = var_index(a->first);
      c.b = a->second.empty() ? -1 : var_index(a->second);
    } else {
      const auto& ineq = std::get<Inequality>(lit);
      c.is_atom = false;
      c.a = var_index(ineq.lhs);
      c.b = var_index(ineq.rhs);
    }
    lits.push_back(c);
  }

  DatasetIndex index(data);
  BodySolver solver(index, lits, static_cast<int>(vars.size()));
  std::vector<int> all(lits.size());
  for (std::size_t i = 0; i < lits.size(); ++i) all[i] = static_cast<int>(i);

  const int h0 = var_index(rule.head.first);
  const int h1 = rule.head.second.empty() ? -1 : var_index(rule.head.second);

  std::vector<ConstId> asg(vars.size(), kNoConstant);
  const auto& cand0 = solver.candidates(h0, asg, all);
  const std::vector<ConstId> first_options = cand0;
  for (ConstId a : first_options) {
    asg[h0] = a;
    if (h1 < 0 || h1 == h0) {
      if (solver.satisfiable(asg, all)) {
        out.insert(h1 < 0 ? Fact{rule.head.predicate, a, kNoConstant}
                          : Fact{rule.head.predicate, a, a});
      }
      continue;
    }
    const std::vector<ConstId> second_options = solver.candidates(h1, asg, all);
    for (ConstId b : second_options) {
      asg[h1] = b;
      if (solver.satisfiable(asg, all)) out.insert(Fact{rule.head.predicate, a, b});
    }
    asg[h1] = kNoConstant;
  }
  return out;
}

Dataset apply_program(std::span<const Rule> program, const Dataset& data) {
  Dataset out = data.empty_copy();
  for (const auto& rule : program) {
    const Dataset derived = apply_rule(rule, data);
    for (const auto& f : derived.facts()) out.insert(f);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subsumption

namespace {

using VarMap = std::map<std::string, std::string>;

bool bind(VarMap& theta, const std::string& from, const std::string& to,
          std::vector<std::string>& trail) {
  auto it = theta.find(from);
  if (it != theta.end()) return it->second == to;
  theta.emplace(from, to);
  trail.push_back(from);
  return true;
}

void undo(VarMap& theta, std::vector<std::string>& trail, std::size_t mark) {
  while (trail.size() > mark) {
    theta.erase(trail.back());
    trail.pop_back();
  }
}

bool match_literal(const Literal& g, const Literal& s, VarMap& theta,
                   std::vector<std::string>& trail) {
  const std::size_t mark = trail.size();
  if (const auto* ga = std::get_if<Atom>(&g)) {
    const auto* sa = std::get_if<Atom>(&s);
    if (sa == nullptr || sa->predicate != ga->predicate) return false;
    if (bind(theta, ga->first, sa->first, trail) &&
        (ga->second.empty() || bind(theta, ga->second, sa->second, trail))) {
      return true;
    }
    undo(theta, trail, mark);
    return false;
  }
  const auto* si = std::get_if<Inequality>(&s);
  if (si == nullptr) return false;
  const auto& gi = std::get<Inequality>(g);
  return bind(theta, gi.lhs, si->lhs, trail) && bind(theta, gi.rhs, si->rhs, trail)
             ? true
             : (undo(theta, trail, mark), false);
}

bool match_body(const std::vector<Literal>& general, std::size_t at,
                const std::vector<Literal>& specific, VarMap& theta,
                std::vector<std::string>& trail) {
  if (at == general.size()) return true;
  const std::size_t mark = trail.size();
  for (const auto& s : specific) {
    if (match_literal(general[at], s, theta, trail)) {
      if (match_body(general, at + 1, specific, theta, trail)) return true;
      undo(theta, trail, mark);
    }
    // Inequalities are symmetric: also try the swapped orientation.
    if (const auto* gi = std::get_if<Inequality>(&general[at])) {
      if (const auto* si = std::get_if<Inequality>(&s)) {
        Literal swapped = Inequality{si->rhs, si->lhs};
        if (match_literal(*gi, swapped, theta, trail)) {
          if (match_body(general, at + 1, specific, theta, trail)) return true;
          undo(theta, trail, mark);
        }
      }
    }
  }
  return false;
}

}  // namespace

bool subsumes(const Rule& general, const Rule& specific) {
  if (general.head.predicate != specific.head.predicate) return false;
  VarMap theta;
  std::vector<std::string> trail;
  if (!bind(theta, general.head.first, specific.head.first, trail)) return false;
  if (!general.head.second.empty() &&
      !bind(theta, general.head.second, specific.head.second, trail)) {
    return false;
  }
  // Most constrained first: atoms before inequalities.
  std::vector<Literal> ordered;
  for (const auto& l : general.body) {
    if (std::holds_alternative<Atom>(l)) ordered.push_back(l);
  }
  for (const auto& l : general.body) {
    if (std::holds_alternative<Inequality>(l)) ordered.push_back(l);
  }
  return match_body(ordered, 0, specific.body, theta, trail);
}

Rule rename_canonically(const Rule& rule) {
  std::map<std::string, std::string> names;
  auto rename = [&](const std::string& v) -> std::string {
    if (v.empty()) return v;
    auto it = names.find(v);
    if (it != names.end()) return it->second;
    std::string fresh = "v" + std::to_string(names.size());
    names.emplace(v, fresh);
    return fresh;
  };
  Rule out;
  out.head = rule.head;
  out.head.first = rename(rule.head.first);
  out.head.second = rename(rule.head.second);
  for (const auto& lit : rule.body) {
    if (const auto* a = std::get_if<Atom>(&lit)) {
      Atom b = *a;
      b.first = rename(a->first);
      b.second = rename(a->second);
      out.body.emplace_back(std::move(b));
    } else {
      const auto& i = std::get<Inequality>(lit);
      std::string l = rename(i.lhs);
      std::string r = rename(i.rhs);
      out.body.emplace_back(Inequality{std::move(l), std::move(r)});
    }
  }
  return out;
}

std::string to_string(const Fact& fact, const Dataset& data, const Signature& sig) {
  std::string s = sig.name(fact.predicate) + "(" + data.constant_name(fact.first);
  if (fact.second != kNoConstant) s += "," + data.constant_name(fact.second);
  return s + ")";
}

}  // namespace monolink
