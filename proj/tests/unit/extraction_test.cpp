#include <gtest/gtest.h>

#include <set>

#include "monolink/errors.hpp"
#include "monolink/extraction.hpp"
#include "monolink/soundness.hpp"
#include "test_support.hpp"

namespace monolink {
namespace {

std::set<std::string> texts(const Program& p, const Signature& sig) {
  std::set<std::string> out;
  for (const auto& r : p) out.insert(to_string(r, sig));
  return out;
}

bool equivalent(const Rule& a, const Rule& b) { return subsumes(a, b) && subsumes(b, a); }

TEST(Flat, PatternAndRuleCounts) {
  EXPECT_EQ(flat_pattern_count(1), 5u);
  EXPECT_EQ(flat_pattern_count(2), 52u);
  const auto sig = testing::make_signature(0, 11);
  EXPECT_EQ(flat_rule_count(sig, 1), 605u);
  EXPECT_EQ(flat_rule_count(sig, 2), 11u * 11u * 11u * 52u);
  const auto small = testing::make_signature(1, 2);
  EXPECT_EQ(enumerate_flat_rules(small, 1).size(), flat_rule_count(small, 1));
  EXPECT_EQ(enumerate_flat_rules(small, 2).size(), flat_rule_count(small, 1) + flat_rule_count(small, 2));
  EXPECT_THROW(enumerate_flat_rules(small, 3), DataError);
  EXPECT_THROW(enumerate_flat_rules(sig, 2, 1000), InfeasibleError);
}

TEST(Flat, OneBinaryPredicateIsDuplicateFree) {
  const auto sig = testing::make_signature(0, 1);
  const auto one = enumerate_flat_rules(sig, 1);
  EXPECT_FALSE(one.empty());
  for (std::size_t i = 0; i < one.size(); ++i) {
    for (std::size_t j = i + 1; j < one.size(); ++j) EXPECT_FALSE(equivalent(one[i], one[j]));
  }
}

TEST(Flat, DuplicateFreeUpToRenaming) {
  const auto sig = testing::make_signature(0, 2);
  std::set<std::string> seen;
  for (const auto& r : enumerate_flat_rules(sig, 2)) {
    EXPECT_TRUE(seen.insert(to_string(rename_canonically(r), sig)).second) << to_string(r, sig);
    EXPECT_EQ(r.head.first, "x");
    EXPECT_EQ(r.head.second, "y");
    std::map<std::string, int> occ;
    for (const auto& a : r.body_atoms()) {
      EXPECT_EQ(a.predicate.arity, Arity::kBinary);
      ++occ[a.first];
      ++occ[a.second];
    }
    for (const auto& [v, n] : occ) {
      if (v != "x" && v != "y") {
        EXPECT_GE(n, 2) << to_string(r, sig);
      }
    }
  }
}

TEST(Tree, DepthZero) {
  const auto sig = testing::make_signature(1, 1);
  const TreeBudget budget{0, 3, false, MessageDirection::kAgainstEdges};
  const auto rules = enumerate_treelike(budget, sig);
  EXPECT_EQ(texts(rules, sig), (std::set<std::string>{"-> P1(x,y)", "U1(x) -> P1(x,y)", "U1(y) -> P1(x,y)",
                                                     "U1(x), U1(y) -> P1(x,y)"}));
  EXPECT_EQ(texts(enumerate_treelike(budget, testing::make_signature(0, 2)), testing::make_signature(0, 2)),
            (std::set<std::string>{"-> P1(x,y)", "-> P2(x,y)"}));
}

TEST(Tree, DepthOneFanOutOneHandList) {
  const auto sig = testing::make_signature(1, 1);
  const TreeBudget budget{1, 1, false, MessageDirection::kAgainstEdges};
  const auto rules = enumerate_treelike(budget, sig);
  const std::vector<std::string> x_side{"", "U1(x)", "P1(x,u)", "P1(x,u), U1(u)", "U1(x), P1(x,u)",
                                        "U1(x), P1(x,u), U1(u)"};
  std::vector<Rule> expected;
  for (const auto& bx : x_side) {
    for (auto by : x_side) {
      for (std::size_t at; (at = by.find('x')) != std::string::npos;) by[at] = 'y';
      for (std::size_t at; (at = by.find('u')) != std::string::npos;) by[at] = 'w';
      std::string body = bx;
      if (!bx.empty() && !by.empty()) body += ", ";
      body += by;
      expected.push_back(parse_rule(body + " -> P1(x,y)", sig));
    }
  }
  ASSERT_EQ(rules.size(), expected.size());
  std::vector<bool> hit(expected.size(), false);
  for (const auto& r : rules) {
    std::size_t matches = 0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (r.body.size() == expected[i].body.size() && equivalent(r, expected[i])) {
        ++matches;
        hit[i] = true;
      }
    }
    EXPECT_EQ(matches, 1u) << to_string(r, sig);
  }
  EXPECT_TRUE(std::all_of(hit.begin(), hit.end(), [](bool b) { return b; }));
}

std::vector<TreeBudget> small_budgets() {
  std::vector<TreeBudget> out;
  for (std::size_t p = 0; p <= 2; ++p) {
    for (std::size_t o = 0; o <= 2; ++o) {
      for (bool ineq : {false, true}) {
        for (auto dir : {MessageDirection::kAgainstEdges, MessageDirection::kAlongEdges}) {
          if (p == 2 && o == 2) continue;
          out.push_back({p, o, ineq, dir});
        }
      }
    }
  }
  return out;
}

TEST(Tree, CountsGeneratorAndValidatorAgree) {
  for (const auto& sig : {testing::make_signature(1, 2), testing::make_signature(1, 1), testing::make_signature(0, 2)}) {
    for (const auto& budget : small_budgets()) {
      if (TreeSpace::count_rules(sig, budget) > 20000) continue;
      const auto rules = enumerate_treelike(budget, sig);
      EXPECT_EQ(rules.size(), TreeSpace::count_rules(sig, budget));
      std::set<std::string> seen;
      for (const auto& r : rules) {
        EXPECT_TRUE(is_treelike(r, budget)) << to_string(r, sig);
        EXPECT_TRUE(seen.insert(to_string(rename_canonically(r), sig)).second) << to_string(r, sig);
      }
    }
  }
}

TEST(Tree, ValidatorRejects) {
  const auto sig = testing::make_signature(1, 2);
  const TreeBudget b{1, 1, false, MessageDirection::kAgainstEdges};
  for (const char* text : {"P1(x,y) -> P2(x,y)", "P1(x,z), P2(z,y) -> P1(x,y)", "P1(x,u), P1(x,w) -> P1(x,y)",
                           "P1(x,u), P1(u,w) -> P1(x,y)", "P1(u,x) -> P1(x,y)", "U1(z) -> P1(x,y)",
                           "P1(x,u), P1(x,w), u != w -> P1(x,y)", "P1(x,x) -> P1(x,y)"}) {
    EXPECT_FALSE(is_treelike(parse_rule(text, sig), b)) << text;
  }
  EXPECT_TRUE(is_treelike(parse_rule("P1(x,u), U1(u), P2(y,w) -> P1(x,y)", sig), b));
  EXPECT_TRUE(is_treelike(parse_rule("P1(x,u), P1(x,w), u != w -> P1(x,y)", sig), {1, 2, true, b.direction}));
  EXPECT_TRUE(is_treelike(parse_rule("P1(u,x) -> P1(x,y)", sig), {1, 1, false, MessageDirection::kAlongEdges}));
}

TEST(Tree, CapIsEnforced) {
  const auto sig = testing::make_signature(2, 3);
  const TreeBudget b{2, 3, true, MessageDirection::kAgainstEdges};
  EXPECT_THROW(TreeSpace(sig, b, 1000), InfeasibleError);
  EXPECT_GT(TreeSpace::count_rules(sig, b), 1000u);
}

TEST(Tree, LeqMatchesSubsumption) {
  const auto sig = testing::make_signature(1, 1);
  for (bool ineq : {false, true}) {
    const TreeSpace space(sig, {2, 1, ineq, MessageDirection::kAgainstEdges});
    const auto& top = space.formulas(2);
    for (std::uint32_t a = 0; a < top.size(); ++a) {
      for (std::uint32_t b = 0; b < top.size(); ++b) {
        const bool sub = subsumes(space.rule(0, a, 0), space.rule(0, b, 0));
        if (space.leq(2, a, b)) {
          EXPECT_TRUE(sub);
        }
        if (!ineq) {
          EXPECT_EQ(space.leq(2, a, b), sub);
        }
      }
    }
  }
}

Model max_model(const Signature& sig, Rng& rng, MessageDirection dir, std::size_t layers = 1) {
  testing::RandomModelSpec spec;
  spec.layers = layers;
  spec.max_dim = 2;
  spec.budget = AggregationBudget::finite(1);
  spec.direction = dir;
  return testing::random_monotonic_model(sig, spec, rng);
}

TEST(Mining, ZeroModelGivesEmptyProgram) {
  const auto sig = testing::make_signature(1, 2);
  Model m;
  m.signature = sig;
  m.gnn = MaxSumGnn::zeros({1, 1}, 2, AggregationBudget::finite(1), MessageDirection::kAgainstEdges);
  m.scoring = ScoringFunction::zeros(ScoringKind::kRescal, 1, 2);
  m.scoring.threshold = 0.5;
  EXPECT_TRUE(mine_sound_rules(m, enumerate_flat_rules(sig, 2)).program.empty());
  EXPECT_TRUE(equivalent_program(m).mining.program.empty());
}

TEST(Mining, FastPathMatchesCheckSoundness) {
  Rng rng = make_rng(1, "fast-path");
  for (int trial = 0; trial < 12; ++trial) {
    const auto dir = trial % 2 ? MessageDirection::kAlongEdges : MessageDirection::kAgainstEdges;
    const std::size_t layers = 1 + (trial / 2) % 2;
    const auto sig = layers == 1 ? testing::make_signature(1, 2) : testing::make_signature(1, 1);
    const Model m = max_model(sig, rng, dir, layers);
    const TreeBudget budget{layers, layers == 1 ? 2u : 1u, false, dir};
    const TreeSpace space(sig, budget);
    const auto fast = mine_treelike(m, space, {false, 1});
    const auto slow = mine_sound_rules(m, enumerate_treelike(budget, sig), {false, 1});
    EXPECT_EQ(texts(fast.program, sig), texts(slow.program, sig));
    EXPECT_EQ(fast.stats.sound, slow.stats.sound);
  }
}

TEST(Mining, PruningPreservesSemantics) {
  const auto sig = testing::make_signature(1, 2);
  Rng rng = make_rng(2, "pruning");
  for (int trial = 0; trial < 50; ++trial) {
    testing::RandomModelSpec spec;
    spec.max_dim = 2;
    spec.budget = trial % 2 ? AggregationBudget::infinite() : AggregationBudget::finite(1);
    spec.kind = static_cast<ScoringKind>(trial % 4);
    const Model m = testing::random_monotonic_model(sig, spec, rng);
    const auto space = trial % 5 == 0 ? enumerate_flat_rules(sig, 2) : enumerate_flat_rules(sig, 1);
    const auto pruned = mine_sound_rules(m, space, {true, static_cast<std::size_t>(1 + trial % 3)});
    const auto full = mine_sound_rules(m, space, {false, 1});
    const auto in_pruned = texts(pruned.program, sig);
    for (const auto& r : full.program) {
      const bool covered = in_pruned.count(to_string(r, sig)) > 0 ||
                           std::any_of(pruned.program.begin(), pruned.program.end(),
                                       [&](const Rule& g) { return subsumes(g, r); });
      EXPECT_TRUE(covered) << to_string(r, sig);
    }
    for (const auto& r : pruned.program) EXPECT_TRUE(texts(full.program, sig).count(to_string(r, sig)));
    EXPECT_EQ(pruned.stats.candidates, space.size());
    EXPECT_EQ(pruned.stats.checked + pruned.stats.pruned, space.size());
    for (int d = 0; d < 5; ++d) {
      const Dataset data = testing::random_dataset(sig, 3, 0.3, rng);
      EXPECT_EQ(apply_program(pruned.program, data), apply_program(full.program, data));
    }
  }
}

TEST(Mining, ThresholdBelowMinimumMinesTheRule) {
  const auto sig = testing::make_signature(1, 2);
  Rng rng = make_rng(3, "mine-constructed");
  const Rule r = parse_rule("P1(x,z0), P2(z0,y) -> P2(x,y)", sig);
  Model m = testing::random_monotonic_model(sig, {}, rng);
  double least = 1e300;
  for (const auto& inst : enumerate_check_instances(r, sig, m.gnn.direction)) {
    least = std::min(least, instance_score(m, inst));
  }
  m.scoring.threshold = least;
  const auto mined = mine_sound_rules(m, enumerate_flat_rules(sig, 2), {false, 2});
  EXPECT_TRUE(texts(mined.program, sig).count(to_string(r, sig)));
}

TEST(Mining, RejectsNonMonotonicModel) {
  const auto sig = testing::make_signature(1, 1);
  Model m;
  m.signature = sig;
  m.gnn = MaxSumGnn::zeros({1, 1}, 1, AggregationBudget::finite(1), MessageDirection::kAgainstEdges);
  m.scoring = ScoringFunction::zeros(ScoringKind::kRescal, 1, 1);
  m.scoring.matrices[0](0, 0) = -1;
  EXPECT_THROW(mine_sound_rules(m, enumerate_flat_rules(sig, 1)), DataError);
}

TEST(Equivalence, SingleColourRescal) {
  const auto sig = testing::make_signature(1, 1);
  Rng rng = make_rng(4, "equiv-small");
  for (int trial = 0; trial < 5; ++trial) {
    testing::RandomModelSpec spec;
    spec.max_dim = 1;
    const Model m = testing::random_monotonic_model(sig, spec, rng);
    const auto eq = equivalent_program(m);
    EXPECT_EQ(eq.budget.p, 1u);
    EXPECT_EQ(eq.budget.o, 1u);
    EXPECT_FALSE(eq.budget.allow_inequalities);
    for (int d = 0; d < 100; ++d) {
      const Dataset data = testing::random_dataset(sig, 1 + d % 4, 0.35, rng);
      EXPECT_EQ(apply_program(eq.mining.program, data), apply_model(m, data));
    }
  }
}

TEST(Equivalence, CompositionIsSubsumedByMinedRule) {
  const auto sig = testing::make_signature(1, 2);
  Rng rng = make_rng(5, "composition");
  std::size_t sound_compositions = 0;
  for (int trial = 0; trial < 30; ++trial) {
    Model m = max_model(sig, rng, MessageDirection::kAgainstEdges);
    const auto eq = equivalent_program(m);
    for (const char* text : {"P1(x,z), P2(z,y) -> P1(x,y)", "P2(x,z), P1(z,y) -> P2(x,y)",
                             "P1(x,z), P1(z,y) -> P2(x,y)"}) {
      const Rule r = parse_rule(text, sig);
      if (!check_soundness(m, r).sound) continue;
      ++sound_compositions;
      EXPECT_TRUE(std::any_of(eq.mining.program.begin(), eq.mining.program.end(),
                              [&](const Rule& g) { return subsumes(g, r); }))
          << text;
    }
  }
  EXPECT_GT(sound_compositions, 0u);
}

TEST(Equivalence, NamWithSumAggregationIsInfeasible) {
  const auto sig = testing::make_signature(1, 1);
  Rng rng = make_rng(6, "nam-sum");
  testing::RandomModelSpec spec;
  spec.kind = ScoringKind::kNam;
  spec.budget = AggregationBudget::infinite();
  const Model m = testing::random_monotonic_model(sig, spec, rng);
  try {
    equivalent_program(m);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("bilinear"), std::string::npos);
  }
}

TEST(Format, Header) {
  const auto sig = testing::make_signature(0, 1);
  MiningResult r;
  r.space = "flat1";
  r.stats = {5, 4, 1, 1};
  r.program.push_back(parse_rule("P1(y,x) -> P1(x,y)", sig));
  EXPECT_EQ(format_mined_program(r, sig, "abc"),
            "# model abc\n# space flat1\n# candidates 5 checked 4 sound 1 pruned 1\nP1(y,x) -> P1(x,y)\n");
}

}  // namespace
}  // namespace monolink
