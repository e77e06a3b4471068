#include "monolink/soundness.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "monolink/errors.hpp"

namespace monolink {
namespace {

std::set<std::string> atom_variables(const Rule& r) {
  std::set<std::string> out;
  for (const auto& a : r.body_atoms()) {
    out.insert(a.first);
    if (!a.second.empty()) out.insert(a.second);
  }
  return out;
}

CanonicalCheckInstance build_instance(const Rule& r, const std::vector<std::string>& vars,
                                      const std::vector<std::size_t>& image,
                                      const std::set<std::string>& in_atoms,
                                      MessageDirection direction) {
  CanonicalCheckInstance inst;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    inst.substitution[vars[i]] = "a_" + vars[image[i]];
  }
  const auto mu = [&](const std::string& v) { return inst.data.intern(inst.substitution.at(v)); };
  for (const auto& a : r.body_atoms()) {
    if (a.predicate.arity == Arity::kUnary) {
      inst.data.insert(Fact::unary(a.predicate.index, mu(a.first)));
    } else {
      inst.data.insert(Fact::binary(a.predicate.index, mu(a.first), mu(a.second)));
    }
  }
  for (const auto& v : vars) {
    if (in_atoms.count(v)) continue;
    // The fresh constant receives messages from mu(v) but never sends any
    // to it, so it cannot raise mu(v)'s embedding.
    const ConstId b = inst.data.intern("b_" + v);
    const ConstId a = mu(v);
    inst.data.insert(direction == MessageDirection::kAgainstEdges ? Fact::binary(0, b, a)
                                                                  : Fact::binary(0, a, b));
  }
  inst.head = Fact::binary(r.head.predicate.index, mu(r.head.first), mu(r.head.second));
  return inst;
}

bool respects_inequalities(const Rule& r, const std::vector<std::string>& vars,
                           const std::vector<std::size_t>& image) {
  for (const auto& ineq : r.body_inequalities()) {
    const auto pos = [&](const std::string& v) {
      return static_cast<std::size_t>(std::find(vars.begin(), vars.end(), v) - vars.begin());
    };
    if (image[pos(ineq.lhs)] == image[pos(ineq.rhs)]) return false;
  }
  return true;
}

void check_rule_shape(const Rule& r, const Signature& sig) {
  if (r.head.predicate.arity != Arity::kBinary) throw DataError("rule head must be binary");
  const auto check = [&](const Atom& a) {
    const std::size_t count =
        a.predicate.arity == Arity::kUnary ? sig.unary_count() : sig.binary_count();
    if (a.predicate.index >= count) throw DataError("rule predicate outside the signature");
  };
  check(r.head);
  for (const auto& a : r.body_atoms()) check(a);
}

}  // namespace

std::vector<CanonicalCheckInstance> enumerate_check_instances(const Rule& r, const Signature& sig,
                                                              MessageDirection direction,
                                                              bool dedup) {
  check_rule_shape(r, sig);
  const std::vector<std::string> vars = r.variables();
  const std::set<std::string> in_atoms = atom_variables(r);
  if (sig.binary_count() == 0) throw DataError("signature has no binary predicate");
  const std::size_t n = vars.size();
  std::vector<CanonicalCheckInstance> out;
  std::vector<std::size_t> image(n, 0);

  if (dedup) {
    // Restricted growth strings: block[i] <= max(block[0..i-1]) + 1. Each
    // block maps to the constant of its first variable.
    std::vector<std::size_t> block(n, 0);
    std::vector<std::size_t> first_of_block;
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t blocks) {
      if (i == n) {
        for (std::size_t j = 0; j < n; ++j) image[j] = first_of_block[block[j]];
        if (respects_inequalities(r, vars, image)) {
          out.push_back(build_instance(r, vars, image, in_atoms, direction));
        }
        return;
      }
      for (std::size_t b = 0; b <= blocks; ++b) {
        block[i] = b;
        if (b == blocks) first_of_block.push_back(i);
        rec(i + 1, b == blocks ? blocks + 1 : blocks);
        if (b == blocks) first_of_block.pop_back();
      }
    };
    rec(0, 0);
  } else {
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == n) {
        if (respects_inequalities(r, vars, image)) {
          out.push_back(build_instance(r, vars, image, in_atoms, direction));
        }
        return;
      }
      for (std::size_t t = 0; t < n; ++t) {
        image[i] = t;
        rec(i + 1);
      }
    };
    rec(0);
  }
  return out;
}

double instance_score(const Model& m, const CanonicalCheckInstance& instance) {
  const Fact head[] = {instance.head};
  return score_facts(m, instance.data, head).front();
}

bool is_max_gnn(const MaxSumGnn& gnn) {
  return std::all_of(gnn.layers.begin(), gnn.layers.end(), [](const GnnLayer& l) {
    return !l.budget.is_infinite() && l.budget.value() <= 1;
  });
}

SoundnessVerdict check_soundness(const Model& m, const Rule& r, const CheckOptions& opts) {
  if (!m.is_monotonic()) {
    throw DataError("soundness checking requires a monotonic model: " +
                    m.monotonicity_issues().front());
  }
  check_rule_shape(r, m.signature);
  SoundnessVerdict verdict;
  if (opts.homomorphism_shortcut && is_max_gnn(m.gnn)) {
    const std::vector<std::string> vars = r.variables();
    std::vector<std::size_t> identity(vars.size());
    for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
    auto inst = build_instance(r, vars, identity, atom_variables(r), m.gnn.direction);
    verdict.instances_checked = 1;
    verdict.sound = instance_score(m, inst) >= m.scoring.threshold;
    if (!verdict.sound) verdict.witness = std::move(inst);
    return verdict;
  }
  for (auto& inst : enumerate_check_instances(r, m.signature, m.gnn.direction)) {
    ++verdict.instances_checked;
    if (instance_score(m, inst) < m.scoring.threshold) {
      verdict.witness = std::move(inst);
      return verdict;
    }
  }
  verdict.sound = true;
  return verdict;
}

Rule derive_from_capture(const std::vector<Rule>& sound_rules, const Rule& captured) {
  const std::vector<Atom> targets = captured.body_atoms();
  if (targets.empty() || captured.has_inequalities()) {
    throw DataError("captured rule must have a non-empty body of atoms only");
  }
  if (targets.size() != sound_rules.size()) {
    throw DataError("need one sound rule per body atom of the captured rule");
  }

  std::vector<std::string> order;  // variables in order of introduction
  std::map<std::string, std::string> parent;
  std::set<std::string> from_captured;
  const std::function<std::string(const std::string&)> find = [&](const std::string& v) {
    auto it = parent.find(v);
    if (it == parent.end()) {
      parent[v] = v;
      order.push_back(v);
      return v;
    }
    if (it->second == v) return v;
    const std::string root = find(it->second);
    parent[v] = root;
    return root;
  };
  const auto unite = [&](const std::string& a, const std::string& b) {
    const std::string ra = find(a);
    const std::string rb = find(b);
    if (ra != rb) parent[rb] = ra;
  };
  for (const auto& v : captured.variables()) {
    find(v);
    from_captured.insert(v);
  }

  std::vector<std::map<std::string, std::string>> renames(sound_rules.size());
  std::set<std::string> used(from_captured.begin(), from_captured.end());
  for (std::size_t i = 0; i < sound_rules.size(); ++i) {
    const Rule& s = sound_rules[i];
    if (s.has_inequalities()) throw DataError("sound rules must be inequality-free");
    if (s.head.predicate != targets[i].predicate) {
      throw DataError("head of sound rule " + std::to_string(i + 1) +
                      " does not match body atom " + std::to_string(i + 1) + " of the captured rule");
    }
    for (const auto& v : s.variables()) {
      std::string fresh = v + "_" + std::to_string(i + 1);
      while (used.count(fresh)) fresh += "_";
      used.insert(fresh);
      renames[i][v] = fresh;
      find(fresh);
    }
    unite(targets[i].first, renames[i].at(s.head.first));
    if (!targets[i].second.empty()) unite(targets[i].second, renames[i].at(s.head.second));
  }

  // Name each class after its earliest captured variable, else its earliest member.
  std::map<std::string, std::string> name_of;
  for (const auto& v : order) {
    const std::string root = find(v);
    auto it = name_of.find(root);
    if (it == name_of.end()) {
      name_of[root] = v;
    } else if (from_captured.count(v) && !from_captured.count(it->second)) {
      it->second = v;
    }
  }
  const auto resolve = [&](const std::string& v) { return name_of.at(find(v)); };

  Rule out;
  for (std::size_t i = 0; i < sound_rules.size(); ++i) {
    for (const auto& a : sound_rules[i].body_atoms()) {
      Atom b = a;
      b.first = resolve(renames[i].at(a.first));
      if (!a.second.empty()) b.second = resolve(renames[i].at(a.second));
      const Literal lit = b;
      if (std::find(out.body.begin(), out.body.end(), lit) == out.body.end()) out.body.push_back(lit);
    }
  }
  out.head = captured.head;
  out.head.first = resolve(captured.head.first);
  if (!captured.head.second.empty()) out.head.second = resolve(captured.head.second);
  return out;
}

namespace {

struct PatternMatcher {
  std::map<PredicateId, PredicateId> pred;      // pattern -> rule
  std::map<PredicateId, PredicateId> pred_inv;  // rule -> pattern
  std::map<std::string, std::string> var;
  std::map<std::string, std::string> var_inv;

  bool bind_pred(const PredicateId& p, const PredicateId& q) {
    if (p.arity != q.arity) return false;
    auto it = pred.find(p);
    if (it != pred.end()) return it->second == q;
    auto jt = pred_inv.find(q);
    if (jt != pred_inv.end()) return false;
    pred[p] = q;
    pred_inv[q] = p;
    return true;
  }

  bool bind_var(const std::string& v, const std::string& w) {
    auto it = var.find(v);
    if (it != var.end()) return it->second == w;
    if (var_inv.count(w)) return false;
    var[v] = w;
    var_inv[w] = v;
    return true;
  }

  bool match_atom(const Atom& p, const Atom& a) {
    return bind_pred(p.predicate, a.predicate) && bind_var(p.first, a.first) &&
           (p.second.empty() || bind_var(p.second, a.second));
  }
};

bool match_literals(const std::vector<Literal>& pattern, const std::vector<Literal>& body,
                    std::size_t at, std::vector<bool>& used, const PatternMatcher& state) {
  if (at == pattern.size()) return true;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (used[i]) continue;
    PatternMatcher next = state;
    bool ok = false;
    if (const auto* p = std::get_if<Atom>(&pattern[at])) {
      if (const auto* a = std::get_if<Atom>(&body[i])) ok = next.match_atom(*p, *a);
    } else if (const auto* b = std::get_if<Inequality>(&body[i])) {
      const auto& q = std::get<Inequality>(pattern[at]);
      PatternMatcher swapped = state;
      if (next.bind_var(q.lhs, b->lhs) && next.bind_var(q.rhs, b->rhs)) {
        ok = true;
      } else if (swapped.bind_var(q.lhs, b->rhs) && swapped.bind_var(q.rhs, b->lhs)) {
        next = swapped;
        ok = true;
      }
    }
    if (!ok) continue;
    used[i] = true;
    if (match_literals(pattern, body, at + 1, used, next)) return true;
    used[i] = false;
  }
  return false;
}

}  // namespace

bool conforms_to_pattern(const Rule& r, const Rule& pattern) {
  if (r.body.size() != pattern.body.size()) return false;
  PatternMatcher m;
  if (!m.match_atom(pattern.head, r.head)) return false;
  std::vector<bool> used(r.body.size(), false);
  return match_literals(pattern.body, r.body, 0, used, m);
}

const std::vector<NamedPattern>& standard_patterns() {
  static const std::vector<NamedPattern> patterns = {
      {"hierarchy", "M1(x,y) -> M2(x,y)"},
      {"symmetry", "M1(x,y) -> M1(y,x)"},
      {"inversion", "M1(x,y) -> M2(y,x)"},
      {"intersection", "M1(x,y), M2(x,y) -> M3(x,y)"},
      {"composition", "M1(x,z), M2(z,y) -> M3(x,y)"},
  };
  return patterns;
}

Signature meta_signature() { return Signature({}, {"M1", "M2", "M3"}); }

}  // namespace monolink
