#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "monolink/errors.hpp"
#include "monolink/training.hpp"
#include "test_support.hpp"

namespace monolink {
namespace {

TEST(Loss, Examples) {
  const double zero[] = {0.0};
  const double one[] = {1.0};
  EXPECT_NEAR(bce_logits_loss(zero, one, 1.0), std::log(2.0), 1e-12);
  EXPECT_NEAR(bce_logits_loss(zero, one, 50.0), 50.0 * std::log(2.0), 1e-10);
  const double big[] = {30.0};
  EXPECT_NEAR(bce_logits_loss(big, one, 1.0), 0.0, 1e-12);
  const double huge[] = {1e6, -1e6};
  const double labels[] = {0.0, 1.0};
  EXPECT_TRUE(std::isfinite(bce_logits_loss(huge, labels, 1.0)));
  EXPECT_THROW(bce_logits_loss(zero, labels, 1.0), DataError);
}

TEST(Loss, PositiveWeightScalesPositiveTermsOnly) {
  Rng rng = make_rng(1, "pw");
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(10);
    std::vector<double> y(10);
    std::vector<double> pos_s;
    std::vector<double> neg_s;
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = n(rng);
      y[i] = rng() % 2;
      (y[i] == 1.0 ? pos_s : neg_s).push_back(s[i]);
    }
    const std::vector<double> ones(pos_s.size(), 1.0);
    const std::vector<double> zeros(neg_s.size(), 0.0);
    const double pos = bce_logits_loss(pos_s, ones, 1.0) * static_cast<double>(pos_s.size());
    const double neg = bce_logits_loss(neg_s, zeros, 1.0) * static_cast<double>(neg_s.size());
    EXPECT_NEAR(bce_logits_loss(s, y, 50.0) * 10.0, 50.0 * pos + neg, 1e-9);
  }
}

std::vector<Example> random_examples(const Dataset& d, std::size_t binary, Rng& rng, std::size_t count) {
  const auto cs = d.constants();
  std::vector<Example> out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto pred = static_cast<std::uint32_t>(rng() % binary);
    out.push_back({Fact::binary(pred, cs[rng() % cs.size()], cs[rng() % cs.size()]), static_cast<double>(rng() % 2)});
  }
  return out;
}

TEST(Backward, MatchesFiniteDifferences) {
  const auto sig = testing::make_signature(1, 2);
  Rng rng = make_rng(2, "gradient");
  for (ScoringKind kind : {ScoringKind::kRescal, ScoringKind::kDistMult, ScoringKind::kTucker, ScoringKind::kNam}) {
    for (AggregationBudget k : {AggregationBudget::finite(1), AggregationBudget::infinite()}) {
      for (int rep = 0; rep < 5; ++rep) {
        const Model m = testing::random_gradient_model(sig, kind, k, rng);
        Dataset d = testing::random_dataset(sig, 4, 0.4, rng);
        d.add(sig, "U1", "c0");
        const auto ex = random_examples(d, 2, rng, 6);
        const auto check = testing::check_gradient(m, d, ex, 3.0);
        EXPECT_LE(check.worst, 1e-4) << to_string(kind) << " k=" << to_string(k) << " at " << check.parameter;
      }
    }
  }
}

TEST(Backward, ZeroWeightGivesZeroGradient) {
  const auto sig = testing::make_signature(1, 2);
  Rng rng = make_rng(3, "zero-grad");
  const Model m = testing::random_gradient_model(sig, ScoringKind::kRescal, AggregationBudget::infinite(), rng);
  const Dataset d = testing::random_dataset(sig, 3, 0.5, rng);
  std::vector<Example> positives;
  for (const auto& e : random_examples(d, 2, rng, 5)) positives.push_back({e.fact, 1.0});
  const auto lg = backward(m, d, positives, 0.0);
  EXPECT_EQ(lg.loss, 0.0);
  EXPECT_TRUE(flatten_parameters(lg.gradient).isZero(0.0));
  EXPECT_TRUE(flatten_parameters(backward(m, d, {}, 1.0).gradient).isZero(0.0));
}

TEST(Backward, DeadPathHasZeroGradient) {
  // Colour 1 never occurs, so B^1 receives no gradient.
  const auto sig = testing::make_signature(1, 2);
  Rng rng = make_rng(4, "dead-path");
  const Model m = testing::random_gradient_model(sig, ScoringKind::kRescal, AggregationBudget::finite(1), rng);
  Dataset d;
  d.add(sig, "P1", "a", "b");
  d.add(sig, "U1", "b");
  const std::vector<Example> ex{{Fact::binary(0, 0, 1), 1.0}, {Fact::binary(1, 1, 0), 0.0}};
  const auto lg = backward(m, d, ex, 1.0);
  for (const auto& layer : lg.gradient.gnn.layers) EXPECT_TRUE(layer.b[1].isZero(0.0));
}

TEST(Parameters, FlattenAssignRoundTrip) {
  const auto sig = testing::make_signature(2, 2);
  Rng rng = make_rng(5, "flatten");
  for (ScoringKind kind : {ScoringKind::kRescal, ScoringKind::kDistMult, ScoringKind::kTucker, ScoringKind::kNam}) {
    testing::RandomModelSpec spec;
    spec.kind = kind;
    const Model m = testing::random_monotonic_model(sig, spec, rng);
    Model z = zeros_like(m);
    EXPECT_TRUE(flatten_parameters(z).isZero(0.0));
    assign_parameters(z, flatten_parameters(m));
    EXPECT_EQ(flatten_parameters(z), flatten_parameters(m));
    EXPECT_EQ(constrained_mask(m).size(), static_cast<std::size_t>(flatten_parameters(m).size()));
    EXPECT_THROW(assign_parameters(z, Eigen::VectorXd::Zero(1)), DataError);
  }
}

Split toy_split(const Signature& sig, std::size_t facts, Rng& rng) {
  Split s;
  std::uniform_int_distribution<int> c(0, 7);
  while (s.train_input.size() < facts) {
    s.train_input.add(sig, rng() % 2 ? "P1" : "P2", "e" + std::to_string(c(rng)), "e" + std::to_string(c(rng)));
  }
  for (const auto& f : s.train_input.facts()) {
    if (s.valid_positives.size() < 5) s.valid_positives.push_back(f);
  }
  return s;
}

TEST(Train, UnclampedLossDecreases) {
  Signature sig = testing::make_signature(0, 2);
  Rng rng = make_rng(6, "toy");
  Split split = toy_split(sig, 20, rng);
  add_dummy_unary(split.train_input, sig);
  InitSpec init;
  init.hidden_dims = {4, 4};
  const Model m = random_model(sig, init, false, 1);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 0.01;
  cfg.clamp_nonnegative = false;
  cfg.seed = 3;
  const auto r = train(m, split, cfg);
  ASSERT_EQ(r.losses.size(), 200u);
  EXPECT_LT(r.losses.back(), r.losses.front());
}

TEST(Train, ClampedKeepsMonotonicityAndIsDeterministic) {
  Signature sig = testing::make_signature(0, 2);
  Rng rng = make_rng(7, "toy-clamp");
  Split split = toy_split(sig, 20, rng);
  add_dummy_unary(split.train_input, sig);
  for (ScoringKind kind : {ScoringKind::kRescal, ScoringKind::kTucker, ScoringKind::kNam}) {
    InitSpec init;
    init.hidden_dims = {3};
    init.scoring = kind;
    init.budget = AggregationBudget::infinite();
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.learning_rate = 0.05;
    cfg.seed = 11;
    cfg.verify_monotonic = true;
    std::size_t epochs_seen = 0;
    const auto a = train(random_model(sig, init, true, 2), split, cfg, [&](const EpochLog& log) {
      ++epochs_seen;
      EXPECT_EQ(log.epoch, epochs_seen);
    });
    EXPECT_EQ(epochs_seen, 30u);
    EXPECT_TRUE(a.model.is_monotonic());
    const auto b = train(random_model(sig, init, true, 2), split, cfg);
    EXPECT_EQ(a.losses, b.losses);
    EXPECT_EQ(flatten_parameters(a.model), flatten_parameters(b.model));
  }
}

TEST(Train, ConfigValidation) {
  TrainConfig cfg;
  EXPECT_EQ(cfg.positive_weight(), 50.0);
  cfg.clamp_nonnegative = false;
  EXPECT_EQ(cfg.positive_weight(), 1.0);
  cfg.holdout_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), DataError);
  cfg.holdout_fraction = 0.1;
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), DataError);
}

TEST(Threshold, Examples) {
  const double pos[] = {3.0, 4.0};
  const double neg[] = {1.0, 2.0};
  const double t = select_threshold(pos, neg);
  EXPECT_EQ(evaluate(pos, neg, t).accuracy, 1.0);
  EXPECT_EQ(t, 3.0);

  const double p1[] = {2.0};
  const double n1[] = {1.0};
  EXPECT_EQ(select_threshold(p1, n1), 2.0);

  const double same_pos[] = {1.0, 1.0, 1.0};
  const double same_neg[] = {1.0};
  const double ts = select_threshold(same_pos, same_neg);
  EXPECT_EQ(ts, 1.0);
  EXPECT_EQ(evaluate(same_pos, same_neg, ts).accuracy, 0.75);
  EXPECT_THROW(select_threshold(std::span<const double>{}, std::span<const double>{}), DataError);
}

TEST(Metrics, Examples) {
  const double pos[] = {3.0, 4.0};
  const double neg[] = {1.0, 2.0};
  const Metrics m = evaluate(pos, neg, 3.0);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.f1, 1.0);
  EXPECT_EQ(m.auprc, 1.0);
  const Metrics none = evaluate(pos, neg, 10.0);
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.accuracy, 0.5);
  EXPECT_NE(m.to_json().find("\"auprc\""), std::string::npos);
}

TEST(Metrics, RandomScoresHaveHalfPrecision) {
  Rng rng = make_rng(8, "auprc");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> pos(1000);
  std::vector<double> neg(1000);
  for (double& s : pos) s = u(rng);
  for (double& s : neg) s = u(rng);
  EXPECT_NEAR(average_precision(pos, neg), 0.5, 0.1);
}

TEST(Init, Distribution) {
  const auto sig = testing::make_signature(2, 2);
  InitSpec spec;
  spec.hidden_dims = {3, 4};
  const Model m = random_model(sig, spec, true, 5);
  EXPECT_TRUE(m.is_monotonic());
  EXPECT_EQ(m.gnn.output_dim(), 4u);
  EXPECT_LE(m.gnn.layers[1].a.maxCoeff(), 1.0 / std::sqrt(3.0));
  EXPECT_GT(m.gnn.layers[1].a.maxCoeff(), 0.0);
  EXPECT_EQ(m.gnn.layers[1].a.minCoeff(), 0.0);
  EXPECT_TRUE(m.gnn.layers[0].bias.isZero(0.0));
  EXPECT_EQ(flatten_parameters(random_model(sig, spec, true, 5)), flatten_parameters(m));
  EXPECT_LT(random_model(sig, spec, false, 5).gnn.layers[0].a.minCoeff(), 0.0);
}

}  // namespace
}  // namespace monolink
