#include "monolink/extraction.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "monolink/capacity.hpp"
#include "monolink/errors.hpp"
#include "monolink/soundness.hpp"

namespace monolink {
namespace {

using Term = std::string;
using TermPair = std::pair<Term, Term>;
using Pattern = std::vector<TermPair>;

// Existentials renamed z0, z1, ... in order of first occurrence.
Pattern canonical_pattern(const Pattern& p) {
  std::map<Term, Term> names{{"x", "x"}, {"y", "y"}};
  Pattern out;
  for (const auto& [a, b] : p) {
    for (const Term* t : {&a, &b}) {
      if (!names.count(*t)) names[*t] = "z" + std::to_string(names.size() - 2);
    }
    out.emplace_back(names[a], names[b]);
  }
  return out;
}

std::vector<Pattern> build_flat_patterns(std::size_t k) {
  std::vector<Term> terms{"x", "y"};
  for (std::size_t i = 0; i < 2 * k; ++i) terms.push_back("e" + std::to_string(i));
  std::set<Pattern> seen;
  Pattern cur(k);
  const std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == k) {
      std::map<Term, std::size_t> occ;
      for (const auto& [a, b] : cur) {
        ++occ[a];
        ++occ[b];
      }
      for (const auto& [t, n] : occ) {
        if (t != "x" && t != "y" && n < 2) return;
      }
      seen.insert(canonical_pattern(cur));
      return;
    }
    for (const auto& a : terms) {
      for (const auto& b : terms) {
        cur[i] = {a, b};
        rec(i + 1);
      }
    }
  };
  rec(0);
  const auto rank = [](const Term& t) {
    return t == "x" ? -2 : t == "y" ? -1 : std::stoi(t.substr(1));
  };
  std::vector<Pattern> out(seen.begin(), seen.end());
  std::sort(out.begin(), out.end(), [&](const Pattern& l, const Pattern& r) {
    for (std::size_t i = 0; i < l.size(); ++i) {
      const auto a = std::make_pair(rank(l[i].first), rank(l[i].second));
      const auto b = std::make_pair(rank(r[i].first), rank(r[i].second));
      if (a != b) return a < b;
    }
    return false;
  });
  return out;
}

const std::vector<Pattern>& flat_patterns(std::size_t k) {
  static const std::vector<Pattern> one = build_flat_patterns(1);
  static const std::vector<Pattern> two = build_flat_patterns(2);
  if (k == 1) return one;
  if (k == 2) return two;
  throw DataError("flat rule bodies have 1 or 2 atoms");
}

std::uint64_t saturating(long double v) {
  constexpr long double kMax = 9.2e18L;
  return v >= kMax ? static_cast<std::uint64_t>(kMax) : static_cast<std::uint64_t>(v);
}

long double binom(long double n, std::size_t k) {
  if (static_cast<long double>(k) > n) return 0.0L;
  long double r = 1.0L;
  for (std::size_t i = 0; i < k; ++i) r = r * (n - static_cast<long double>(i)) / static_cast<long double>(i + 1);
  return r;
}

std::vector<long double> count_by_height(const Signature& sig, const TreeBudget& budget) {
  const long double colors = static_cast<long double>(sig.binary_count());
  const long double masks = std::ldexp(1.0L, static_cast<int>(sig.unary_count()));
  std::vector<long double> n{masks};
  for (std::size_t h = 1; h <= budget.p; ++h) {
    const std::size_t k = budget.o * h;
    const long double prev = n.back();
    long double sets = 0.0L;
    if (!budget.allow_inequalities) {
      for (std::size_t s = 0; s <= k; ++s) sets += binom(colors * prev, s);
    } else {
      // Prod over block sizes m of (1 + z^m)^{B_m}, truncated at degree k.
      std::vector<long double> poly(k + 1, 0.0L);
      poly[0] = 1.0L;
      for (std::size_t m = 1; m <= k; ++m) {
        const long double blocks = colors * binom(prev + static_cast<long double>(m) - 1.0L, m);
        std::vector<long double> next(k + 1, 0.0L);
        for (std::size_t d = 0; d <= k; ++d) {
          if (poly[d] == 0.0L) continue;
          for (std::size_t j = 0; d + j * m <= k; ++j) next[d + j * m] += poly[d] * binom(blocks, j);
        }
        poly = std::move(next);
      }
      for (long double c : poly) sets += c;
    }
    n.push_back(masks * sets);
  }
  return n;
}

std::uint64_t predicate_bit(const PredicateId& p, const Signature& sig) {
  return p.arity == Arity::kUnary ? p.index : sig.unary_count() + p.index;
}

using Mask = std::vector<std::uint64_t>;

Mask predicate_mask(const Rule& r, const Signature& sig) {
  Mask m((sig.unary_count() + sig.binary_count() + 63) / 64 + 1, 0);
  for (const auto& a : r.body_atoms()) {
    const std::uint64_t b = predicate_bit(a.predicate, sig);
    m[b / 64] |= std::uint64_t{1} << (b % 64);
  }
  return m;
}

bool mask_subset(const Mask& a, const Mask& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] & ~b[i]) != 0) return false;
  }
  return true;
}

void require_monotonic(const Model& m) {
  if (!m.is_monotonic()) {
    throw DataError("rule mining requires a monotonic model: " + m.monotonicity_issues().front());
  }
}

Atom child_atom(std::uint32_t color, const std::string& parent, const std::string& child,
                MessageDirection direction) {
  Atom a{{Arity::kBinary, color}, parent, child};
  if (direction == MessageDirection::kAlongEdges) std::swap(a.first, a.second);
  return a;
}

std::string describe(const TreeBudget& b) {
  std::ostringstream os;
  os << "treelike p=" << b.p << " o=" << b.o
     << " inequalities=" << (b.allow_inequalities ? "yes" : "no")
     << " direction=" << to_string(b.direction);
  return os.str();
}

}  // namespace

std::uint64_t flat_pattern_count(std::size_t body_atoms) { return flat_patterns(body_atoms).size(); }

std::uint64_t flat_rule_count(const Signature& sig, std::size_t body_atoms) {
  long double n = static_cast<long double>(sig.binary_count());
  long double total = n * static_cast<long double>(flat_pattern_count(body_atoms));
  for (std::size_t i = 0; i < body_atoms; ++i) total *= n;
  return saturating(total);
}

std::vector<Rule> enumerate_flat_rules(const Signature& sig, std::size_t max_body_atoms,
                                       std::uint64_t cap) {
  if (max_body_atoms != 1 && max_body_atoms != 2) throw DataError("flat rule bodies have 1 or 2 atoms");
  std::uint64_t total = 0;
  for (std::size_t k = 1; k <= max_body_atoms; ++k) total += flat_rule_count(sig, k);
  if (total > cap) {
    throw InfeasibleError("flat space has " + std::to_string(total) + " rules, above the cap of " +
                          std::to_string(cap));
  }
  const auto r = static_cast<std::uint32_t>(sig.binary_count());
  std::vector<Rule> out;
  out.reserve(total);
  for (std::size_t k = 1; k <= max_body_atoms; ++k) {
    const auto& patterns = flat_patterns(k);
    for (std::uint32_t head = 0; head < r; ++head) {
      std::vector<std::uint32_t> preds(k, 0);
      while (true) {
        for (const auto& pattern : patterns) {
          Rule rule;
          rule.head = Atom{{Arity::kBinary, head}, "x", "y"};
          for (std::size_t i = 0; i < k; ++i) {
            rule.body.emplace_back(Atom{{Arity::kBinary, preds[i]}, pattern[i].first, pattern[i].second});
          }
          out.push_back(std::move(rule));
        }
        std::size_t i = k;
        while (i > 0 && ++preds[i - 1] == r) preds[--i] = 0;
        if (i == 0) break;
      }
    }
  }
  return out;
}

std::uint64_t TreeSpace::count_formulas(const Signature& sig, const TreeBudget& budget) {
  return saturating(count_by_height(sig, budget).back());
}

std::uint64_t TreeSpace::count_rules(const Signature& sig, const TreeBudget& budget) {
  const long double n = count_by_height(sig, budget).back();
  return saturating(static_cast<long double>(sig.binary_count()) * n * n);
}

TreeSpace::TreeSpace(const Signature& sig, const TreeBudget& budget, std::uint64_t cap)
    : sig_(sig), budget_(budget) {
  if (sig.unary_count() > 63) throw DataError("tree-like spaces support at most 63 unary predicates");
  const std::uint64_t rules = count_rules(sig, budget);
  if (rules > cap) {
    throw InfeasibleError("tree-like space (" + describe(budget) + ") has " + std::to_string(rules) +
                          " rules, above the cap of " + std::to_string(cap));
  }
  const std::uint64_t masks = std::uint64_t{1} << sig.unary_count();
  const auto colors = static_cast<std::uint32_t>(sig.binary_count());

  std::vector<TreeFormula> base;
  for (std::uint64_t u = 0; u < masks; ++u) {
    TreeFormula f;
    f.unary = u;
    f.atoms = static_cast<std::size_t>(std::popcount(u));
    base.push_back(std::move(f));
  }
  table_.push_back(std::move(base));

  for (std::size_t h = 1; h <= budget.p; ++h) {
    const auto& prev = table_.back();
    const std::size_t k = budget.o * h;
    std::vector<TreeFormula::Block> blocks;
    for (std::uint32_t c = 0; c < colors; ++c) {
      const std::size_t max_members = budget.allow_inequalities ? k : std::min<std::size_t>(k, 1);
      std::vector<std::uint32_t> members;
      const std::function<void(std::uint32_t)> rec = [&](std::uint32_t from) {
        if (!members.empty()) blocks.push_back({c, members});
        if (members.size() == max_members) return;
        for (std::uint32_t id = from; id < prev.size(); ++id) {
          members.push_back(id);
          rec(id);
          members.pop_back();
        }
      };
      rec(0);
    }
    std::sort(blocks.begin(), blocks.end());

    std::vector<TreeFormula> level;
    std::vector<std::size_t> chosen;
    const std::function<void(std::size_t, std::size_t)> pick = [&](std::size_t from, std::size_t used) {
      TreeFormula shape;
      shape.fan_out = used;
      std::size_t child_atoms = 0;
      for (std::size_t i : chosen) {
        shape.blocks.push_back(blocks[i]);
        for (std::uint32_t m : blocks[i].members) child_atoms += 1 + prev[m].atoms;
      }
      for (std::uint64_t u = 0; u < masks; ++u) {
        TreeFormula f = shape;
        f.unary = u;
        f.atoms = child_atoms + static_cast<std::size_t>(std::popcount(u));
        level.push_back(std::move(f));
      }
      for (std::size_t i = from; i < blocks.size(); ++i) {
        const std::size_t size = blocks[i].members.size();
        if (used + size > k) continue;
        chosen.push_back(i);
        pick(i + 1, used + size);
        chosen.pop_back();
      }
    };
    pick(0, 0);
    table_.push_back(std::move(level));
  }

  const auto& top = table_.back();
  order_.resize(top.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return top[a].atoms < top[b].atoms; });

  leq_cache_.resize(table_.size());
  leq_map_.resize(table_.size());
  for (std::size_t h = 0; h < table_.size(); ++h) {
    const std::size_t n = table_[h].size();
    if (n <= 4096) leq_cache_[h].assign(n * n, -1);
  }
}

std::uint64_t TreeSpace::rule_count() const {
  const std::uint64_t n = table_.back().size();
  return sig_.binary_count() * n * n;
}

void TreeSpace::append_body(std::size_t h, std::uint32_t id, const std::string& root,
                            std::vector<Literal>& body, std::size_t& counter) const {
  const TreeFormula& f = table_.at(h).at(id);
  for (std::uint32_t p = 0; p < sig_.unary_count(); ++p) {
    if ((f.unary >> p) & 1U) body.emplace_back(Atom{{Arity::kUnary, p}, root, ""});
  }
  for (const auto& block : f.blocks) {
    std::vector<std::string> vars;
    for (std::uint32_t member : block.members) {
      const std::string v = "v" + std::to_string(counter++);
      vars.push_back(v);
      body.emplace_back(child_atom(block.color, root, v, budget_.direction));
      append_body(h - 1, member, v, body, counter);
    }
    for (std::size_t i = 0; i < vars.size(); ++i) {
      for (std::size_t j = i + 1; j < vars.size(); ++j) body.emplace_back(Inequality{vars[i], vars[j]});
    }
  }
}

Rule TreeSpace::rule(std::uint32_t head, std::uint32_t fx, std::uint32_t fy) const {
  Rule r;
  std::size_t counter = 1;
  append_body(budget_.p, fx, "x", r.body, counter);
  append_body(budget_.p, fy, "y", r.body, counter);
  r.head = Atom{{Arity::kBinary, head}, "x", "y"};
  return r;
}

bool TreeSpace::leq(std::size_t h, std::uint32_t phi, std::uint32_t psi) const {
  if (phi == psi) return true;
  const std::size_t n = table_[h].size();
  if (!leq_cache_[h].empty()) {
    std::int8_t& slot = leq_cache_[h][static_cast<std::size_t>(phi) * n + psi];
    if (slot < 0) slot = leq_uncached(h, phi, psi) ? 1 : 0;
    return slot == 1;
  }
  const std::uint64_t key = static_cast<std::uint64_t>(phi) * n + psi;
  auto it = leq_map_[h].find(key);
  if (it != leq_map_[h].end()) return it->second;
  const bool v = leq_uncached(h, phi, psi);
  leq_map_[h].emplace(key, v);
  return v;
}

bool TreeSpace::leq_uncached(std::size_t h, std::uint32_t phi, std::uint32_t psi) const {
  const TreeFormula& a = table_[h][phi];
  const TreeFormula& b = table_[h][psi];
  if ((a.unary & ~b.unary) != 0) return false;
  for (const auto& ga : a.blocks) {
    bool mapped = false;
    for (const auto& gb : b.blocks) {
      if (gb.color != ga.color || gb.members.size() < ga.members.size()) continue;
      if (ga.members.size() == 1) {
        mapped = std::any_of(gb.members.begin(), gb.members.end(),
                             [&](std::uint32_t m) { return leq(h - 1, ga.members[0], m); });
      } else {
        // Pairwise unequal members must land on pairwise unequal members.
        std::vector<bool> used(gb.members.size(), false);
        const std::function<bool(std::size_t)> match = [&](std::size_t i) {
          if (i == ga.members.size()) return true;
          for (std::size_t j = 0; j < gb.members.size(); ++j) {
            if (used[j] || !leq(h - 1, ga.members[i], gb.members[j])) continue;
            used[j] = true;
            if (match(i + 1)) return true;
            used[j] = false;
          }
          return false;
        };
        mapped = match(0);
      }
      if (mapped) break;
    }
    if (!mapped) return false;
  }
  return true;
}

std::vector<Rule> enumerate_treelike(const TreeBudget& budget, const Signature& sig, std::uint64_t cap) {
  const TreeSpace space(sig, budget, cap);
  std::vector<Rule> out;
  out.reserve(space.rule_count());
  for (std::uint32_t head = 0; head < sig.binary_count(); ++head) {
    for (std::uint32_t fx : space.root_order()) {
      for (std::uint32_t fy : space.root_order()) out.push_back(space.rule(head, fx, fy));
    }
  }
  return out;
}

bool is_treelike(const Rule& r, const TreeBudget& budget) {
  const Atom& head = r.head;
  if (head.predicate.arity != Arity::kBinary || head.first.empty() || head.second.empty() ||
      head.first == head.second) {
    return false;
  }
  std::map<std::string, std::string> parent;
  std::map<std::string, std::vector<std::string>> children;
  std::set<std::string> mentioned{head.first, head.second};
  for (const auto& a : r.body_atoms()) {
    if (a.predicate.arity == Arity::kUnary) {
      mentioned.insert(a.first);
      continue;
    }
    std::string p = a.first;
    std::string c = a.second;
    if (budget.direction == MessageDirection::kAlongEdges) std::swap(p, c);
    if (p == c || parent.count(c)) return false;
    parent[c] = p;
    children[p].push_back(c);
    mentioned.insert(p);
    mentioned.insert(c);
  }
  if (parent.count(head.first) || parent.count(head.second)) return false;

  std::set<std::string> reached;
  const std::function<bool(const std::string&, std::size_t)> walk = [&](const std::string& v,
                                                                        std::size_t depth) {
    if (depth > budget.p || !reached.insert(v).second) return false;
    const auto it = children.find(v);
    const std::size_t fan_out = it == children.end() ? 0 : it->second.size();
    if (fan_out > budget.o * (budget.p - depth)) return false;
    if (it == children.end()) return true;
    return std::all_of(it->second.begin(), it->second.end(),
                       [&](const std::string& c) { return walk(c, depth + 1); });
  };
  if (!walk(head.first, 0) || !walk(head.second, 0)) return false;
  if (reached != mentioned) return false;

  for (const auto& ineq : r.body_inequalities()) {
    if (!budget.allow_inequalities) return false;
    const auto a = parent.find(ineq.lhs);
    const auto b = parent.find(ineq.rhs);
    if (a == parent.end() || b == parent.end() || a->second != b->second || ineq.lhs == ineq.rhs) {
      return false;
    }
  }
  return true;
}

MiningResult mine_sound_rules(const Model& m, const std::vector<Rule>& space, const MiningOptions& opts) {
  require_monotonic(m);
  const std::size_t n = space.size();
  std::vector<Mask> masks(n);
  for (std::size_t i = 0; i < n; ++i) masks[i] = predicate_mask(space[i], m.signature);

  enum class Status : std::uint8_t { kUnsound, kSound, kPruned };
  std::vector<Status> status(n, Status::kUnsound);
  // Append-only list of sound rule indices; readers see a published prefix.
  std::vector<std::size_t> mined(n);
  std::atomic<std::size_t> published{0};
  std::mutex append;
  std::atomic<std::size_t> next{0};

  const auto subsumed = [&](std::size_t i) {
    const std::size_t count = published.load(std::memory_order_acquire);
    for (std::size_t j = 0; j < count; ++j) {
      const Rule& g = space[mined[j]];
      if (g.head.predicate != space[i].head.predicate || !mask_subset(masks[mined[j]], masks[i])) continue;
      if (subsumes(g, space[i])) return true;
    }
    return false;
  };
  const auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      if (opts.prune && subsumed(i)) {
        status[i] = Status::kPruned;
        continue;
      }
      if (check_soundness(m, space[i]).sound) {
        status[i] = Status::kSound;
        std::lock_guard lock(append);
        const std::size_t at = published.load(std::memory_order_relaxed);
        mined[at] = i;
        published.store(at + 1, std::memory_order_release);
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, opts.workers);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  MiningResult out;
  out.space = "explicit rule list";
  out.stats.candidates = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (status[i] == Status::kPruned) {
      ++out.stats.pruned;
      continue;
    }
    ++out.stats.checked;
    if (status[i] == Status::kSound) {
      ++out.stats.sound;
      out.program.push_back(space[i]);
    }
  }
  return out;
}

MiningResult mine_treelike(const Model& m, const TreeSpace& space, const MiningOptions& opts) {
  require_monotonic(m);
  const TreeBudget& budget = space.budget();
  if (budget.direction != m.gnn.direction) {
    throw DataError("tree-like space direction does not match the model's message direction");
  }
  if (!(space.signature() == m.signature)) throw DataError("tree-like space signature does not match the model");
  const std::size_t p = budget.p;
  const auto& order = space.root_order();
  const bool fast = is_max_gnn(m.gnn) && !budget.allow_inequalities;

  // Root embedding of every top-level formula on its own canonical tree.
  std::vector<Eigen::VectorXd> root_label;
  if (fast) {
    root_label.resize(space.formulas(p).size());
    for (std::uint32_t id = 0; id < root_label.size(); ++id) {
      std::vector<Literal> body;
      std::size_t counter = 1;
      space.append_body(p, id, "x", body, counter);
      Dataset data;
      const ConstId x = data.intern("x");
      for (const auto& lit : body) {
        const Atom& a = std::get<Atom>(lit);
        if (a.predicate.arity == Arity::kUnary) {
          data.insert(Fact::unary(a.predicate.index, data.intern(a.first)));
        } else {
          data.insert(Fact::binary(a.predicate.index, data.intern(a.first), data.intern(a.second)));
        }
      }
      const ConstId extra[] = {x};
      const ColoredGraph g = encode(data, m.signature, extra);
      root_label[id] = forward(m.gnn, g).output().row(g.vertex_of(x)).transpose();
    }
  }

  MiningResult out;
  out.space = describe(budget);
  for (std::uint32_t head = 0; head < m.signature.binary_count(); ++head) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> mined;
    for (std::uint32_t fx : order) {
      std::vector<std::uint32_t> gy;  // fy of mined rules whose fx is below this one
      for (const auto& [a, b] : mined) {
        if (space.leq(p, a, fx)) gy.push_back(b);
      }
      for (std::uint32_t fy : order) {
        ++out.stats.candidates;
        if (opts.prune && std::any_of(gy.begin(), gy.end(), [&](std::uint32_t g) { return space.leq(p, g, fy); })) {
          ++out.stats.pruned;
          continue;
        }
        ++out.stats.checked;
        bool sound = false;
        if (fast) {
          sound = score(m.scoring, head, root_label[fx], root_label[fy]) >= m.scoring.threshold;
        } else {
          sound = check_soundness(m, space.rule(head, fx, fy)).sound;
        }
        if (!sound) continue;
        ++out.stats.sound;
        mined.emplace_back(fx, fy);
        gy.push_back(fy);
        out.program.push_back(space.rule(head, fx, fy));
      }
    }
  }
  return out;
}

EquivalenceResult equivalent_program(const Model& m, const EquivalenceOptions& opts) {
  require_monotonic(m);
  m.check_consistency();
  const std::size_t delta = m.gnn.max_dim();
  const std::size_t colors = m.signature.binary_count();
  EquivalenceResult out;
  out.budget.p = m.gnn.layer_count();
  out.budget.direction = m.gnn.direction;
  if (is_max_gnn(m.gnn)) {
    out.budget.o = colors * delta;
    out.budget.allow_inequalities = false;
  } else {
    const CapacityResult caps = compute_capacities(m.gnn, m.scoring);
    if (caps.overall.is_infinite()) {
      throw InfeasibleError("aggregation capacity is unbounded; no finite tree-like space applies");
    }
    out.capacity = caps.overall;
    out.budget.o = colors * delta * caps.overall.value();
    out.budget.allow_inequalities = true;
  }
  const TreeSpace space(m.signature, out.budget, opts.cap);
  out.mining = mine_treelike(m, space, {true, opts.workers});
  return out;
}

std::string format_mined_program(const MiningResult& result, const Signature& sig,
                                 const std::string& model_hash) {
  std::ostringstream os;
  os << "# model " << model_hash << "\n"
     << "# space " << result.space << "\n"
     << "# candidates " << result.stats.candidates << " checked " << result.stats.checked
     << " sound " << result.stats.sound << " pruned " << result.stats.pruned << "\n";
  os << to_string(result.program, sig);
  return os.str();
}

}  // namespace monolink
