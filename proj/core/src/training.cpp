#include "monolink/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"
#include "monolink/errors.hpp"
#include "monolink/random.hpp"

namespace monolink {
namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void add_block(std::vector<ParameterBlock>& out, std::string name, Eigen::MatrixXd& m, bool constrained) {
  out.push_back({std::move(name), m.data(), static_cast<std::size_t>(m.size()), constrained});
}

void add_block(std::vector<ParameterBlock>& out, std::string name, Eigen::VectorXd& v, bool constrained) {
  out.push_back({std::move(name), v.data(), static_cast<std::size_t>(v.size()), constrained});
}

// Adds g * d score / d theta to `grad` and g * d score / d(h,t) to dh, dt.
void score_backward(const ScoringFunction& f, std::size_t rel, const Eigen::VectorXd& h,
                    const Eigen::VectorXd& t, double g, ScoringFunction& grad, Eigen::VectorXd& dh,
                    Eigen::VectorXd& dt) {
  switch (f.kind) {
    case ScoringKind::kRescal: {
      const auto& m = f.matrices[rel];
      grad.matrices[rel] += g * h * t.transpose();
      dh += g * (m * t);
      dt += g * (m.transpose() * h);
      return;
    }
    case ScoringKind::kDistMult: {
      const auto& r = f.vectors[rel];
      grad.vectors[rel] += g * h.cwiseProduct(t);
      dh += g * r.cwiseProduct(t);
      dt += g * r.cwiseProduct(h);
      return;
    }
    case ScoringKind::kTucker: {
      const auto& r = f.vectors[rel];
      for (std::size_t j = 0; j < f.core.size(); ++j) {
        const auto J = static_cast<Eigen::Index>(j);
        const auto& w = f.core[j];
        grad.vectors[rel][J] += g * h.dot(w * t);
        grad.core[j] += (g * r[J]) * h * t.transpose();
        dh += (g * r[J]) * (w * t);
        dt += (g * r[J]) * (w.transpose() * h);
      }
      return;
    }
    case ScoringKind::kNam: {
      const auto d = static_cast<Eigen::Index>(f.dim);
      Eigen::VectorXd x(2 * d);
      x << h, f.vectors[rel];
      std::array<Eigen::VectorXd, 4> z;  // z[0] = x, z[i] = relu(a_i)
      std::array<Eigen::VectorXd, 3> a;
      z[0] = x;
      for (std::size_t l = 0; l < 3; ++l) {
        a[l] = f.nam[l].weight * z[l] + f.nam[l].bias;
        z[l + 1] = a[l].cwiseMax(0.0);
      }
      dt += g * z[3];
      Eigen::VectorXd dz = g * t;
      for (std::size_t l = 3; l-- > 0;) {
        const Eigen::VectorXd da = dz.cwiseProduct((a[l].array() > 0.0).cast<double>().matrix());
        grad.nam[l].weight += da * z[l].transpose();
        grad.nam[l].bias += da;
        dz = f.nam[l].weight.transpose() * da;
      }
      dh += dz.head(d);
      grad.vectors[rel] += dz.tail(d);
      return;
    }
  }
}

// Sources of v selected by max-k-sum in dimension j: largest values first,
// ties to the lowest vertex id.
void select_top(const std::vector<std::uint32_t>& sources, const Eigen::MatrixXd& prev, Eigen::Index j,
                AggregationBudget k, std::vector<std::uint32_t>& out) {
  out = sources;
  const std::size_t take = k.take(out.size());
  std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(take), out.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      if (prev(a, j) != prev(b, j)) return prev(a, j) > prev(b, j);
                      return a < b;
                    });
  out.resize(take);
}

std::vector<double> scores_of(const Model& m, const Dataset& input, std::span<const Fact> facts) {
  if (facts.empty()) return {};
  return score_facts(m, input, facts);
}

}  // namespace

double bce_logits_loss(std::span<const double> scores, std::span<const double> labels, double positive_weight) {
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  if (scores.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double y = labels[i];
    total += positive_weight * y * softplus(-scores[i]) + (1.0 - y) * softplus(scores[i]);
  }
  return total / static_cast<double>(scores.size());
}

std::vector<ParameterBlock> parameter_blocks(Model& m) {
  std::vector<ParameterBlock> out;
  for (std::size_t l = 0; l < m.gnn.layers.size(); ++l) {
    auto& layer = m.gnn.layers[l];
    const std::string p = "layer" + std::to_string(l + 1) + ".";
    add_block(out, p + "A", layer.a, true);
    for (std::size_t c = 0; c < layer.b.size(); ++c) add_block(out, p + "B" + std::to_string(c), layer.b[c], true);
    add_block(out, p + "bias", layer.bias, false);
  }
  auto& f = m.scoring;
  for (std::size_t r = 0; r < f.matrices.size(); ++r) add_block(out, "M" + std::to_string(r), f.matrices[r], true);
  for (std::size_t r = 0; r < f.vectors.size(); ++r) add_block(out, "r" + std::to_string(r), f.vectors[r], true);
  for (std::size_t j = 0; j < f.core.size(); ++j) add_block(out, "W" + std::to_string(j), f.core[j], true);
  if (f.kind == ScoringKind::kNam) {
    for (std::size_t l = 0; l < 3; ++l) {
      add_block(out, "nam" + std::to_string(l + 1) + ".W", f.nam[l].weight, true);
      add_block(out, "nam" + std::to_string(l + 1) + ".b", f.nam[l].bias, false);
    }
  }
  return out;
}

Eigen::VectorXd flatten_parameters(const Model& m) {
  Model copy = m;
  const auto blocks = parameter_blocks(copy);
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.size;
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.size; ++i) out[at++] = b.data[i];
  }
  return out;
}

void assign_parameters(Model& m, const Eigen::VectorXd& flat) {
  Eigen::Index at = 0;
  for (auto& b : parameter_blocks(m)) {
    if (at + static_cast<Eigen::Index>(b.size) > flat.size()) throw DataError("parameter vector too short");
    for (std::size_t i = 0; i < b.size; ++i) b.data[i] = flat[at++];
  }
  if (at != flat.size()) throw DataError("parameter vector too long");
}

std::vector<bool> constrained_mask(const Model& m) {
  Model copy = m;
  std::vector<bool> out;
  for (const auto& b : parameter_blocks(copy)) out.insert(out.end(), b.size, b.constrained);
  return out;
}

Model zeros_like(const Model& m) {
  Model out = m;
  for (auto& b : parameter_blocks(out)) std::fill(b.data, b.data + b.size, 0.0);
  return out;
}

LossAndGradient backward(const Model& m, const Dataset& input, std::span<const Example> examples,
                         double positive_weight) {
  LossAndGradient out;
  out.gradient = zeros_like(m);
  if (examples.empty()) return out;

  std::vector<ConstId> extra;
  for (const auto& e : examples) {
    extra.push_back(e.fact.first);
    extra.push_back(e.fact.second);
  }
  const ColoredGraph graph = encode(input, m.signature, extra);
  const LayerTrace trace = forward(m.gnn, graph);
  const Eigen::MatrixXd& emb = trace.output();
  const auto n = static_cast<Eigen::Index>(graph.vertex_count());
  const double scale = 1.0 / static_cast<double>(examples.size());

  Eigen::MatrixXd d_labels = Eigen::MatrixXd::Zero(n, emb.cols());
  Eigen::VectorXd dh(emb.cols());
  Eigen::VectorXd dt(emb.cols());
  for (const auto& e : examples) {
    const std::uint32_t hv = graph.vertex_of(e.fact.first);
    const std::uint32_t tv = graph.vertex_of(e.fact.second);
    const Eigen::VectorXd h = emb.row(hv).transpose();
    const Eigen::VectorXd t = emb.row(tv).transpose();
    const double s = score(m.scoring, e.fact.predicate.index, h, t);
    const double y = e.label;
    out.loss += scale * (positive_weight * y * softplus(-s) + (1.0 - y) * softplus(s));
    // d/ds of pw*y*softplus(-s) + (1-y)*softplus(s).
    const double g = scale * (positive_weight * y * (sigmoid(s) - 1.0) + (1.0 - y) * sigmoid(s));
    if (g == 0.0) continue;
    dh.setZero();
    dt.setZero();
    score_backward(m.scoring, e.fact.predicate.index, h, t, g, out.gradient.scoring, dh, dt);
    d_labels.row(hv) += dh.transpose();
    d_labels.row(tv) += dt.transpose();
  }

  std::vector<std::uint32_t> selected;
  for (std::size_t l = m.gnn.layer_count(); l-- > 0;) {
    const GnnLayer& layer = m.gnn.layers[l];
    GnnLayer& grad = out.gradient.gnn.layers[l];
    const Eigen::MatrixXd& prev = trace.labels[l];
    const Eigen::MatrixXd& pre = trace.pre_activations[l + 1];
    Eigen::MatrixXd d_pre = d_labels;
    if (layer.activation == Activation::kRelu) {
      d_pre = d_pre.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    }
    Eigen::MatrixXd d_prev = Eigen::MatrixXd::Zero(n, prev.cols());
    Eigen::VectorXd agg(prev.cols());
    for (Eigen::Index v = 0; v < n; ++v) {
      const Eigen::VectorXd gv = d_pre.row(v).transpose();
      if (gv.isZero(0.0)) continue;
      grad.bias += gv;
      grad.a += gv * prev.row(v);
      d_prev.row(v) += (layer.a.transpose() * gv).transpose();
      for (std::size_t c = 0; c < layer.b.size(); ++c) {
        const auto& sources = message_sources(graph, c, static_cast<std::uint32_t>(v), m.gnn.direction);
        if (sources.empty()) continue;
        const Eigen::VectorXd d_agg = layer.b[c].transpose() * gv;
        for (Eigen::Index j = 0; j < prev.cols(); ++j) {
          select_top(sources, prev, j, layer.budget, selected);
          double s = 0.0;
          for (std::uint32_t u : selected) {
            s += prev(u, j);
            d_prev(u, j) += d_agg[j];
          }
          agg[j] = s;
        }
        grad.b[c] += gv * agg.transpose();
      }
    }
    d_labels = std::move(d_prev);
  }
  return out;
}

double TrainConfig::positive_weight() const {
  if (positive_loss_weight) return *positive_loss_weight;
  return clamp_nonnegative ? 50.0 : 1.0;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw DataError("learning rate must be positive");
  if (!(weight_decay >= 0.0)) throw DataError("weight decay must be non-negative");
  if (!(positive_weight() > 0.0)) throw DataError("positive loss weight must be positive");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) throw DataError("holdout fraction must lie in (0,1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw DataError("Adam betas must lie in [0,1)");
  if (!(adam_epsilon > 0.0)) throw DataError("Adam epsilon must be positive");
}

TrainResult train(Model init, const Split& split, const TrainConfig& cfg, const EpochCallback& log) {
  cfg.validate();
  init.check_consistency();
  TrainResult out;
  out.model = std::move(init);
  Model& m = out.model;
  const double pw = cfg.positive_weight();
  const std::vector<bool> constrained = constrained_mask(m);
  Eigen::VectorXd theta = flatten_parameters(m);
  if (cfg.clamp_nonnegative) {
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      if (constrained[static_cast<std::size_t>(i)]) theta[i] = std::max(theta[i], 0.0);
    }
    assign_parameters(m, theta);
  }
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(theta.size());

  // Targets supplied separately from the training graph.
  std::vector<Fact> extra_targets;
  for (const auto& f : split.train_targets) {
    if (!split.train_input.contains(f)) extra_targets.push_back(f);
  }

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = derive_seed(cfg.seed, "epoch", epoch);
    EpochSplit es = epoch_split(split.train_input, cfg.holdout_fraction, seed);
    std::vector<Fact> positives = es.targets;
    positives.insert(positives.end(), extra_targets.begin(), extra_targets.end());
    std::sort(positives.begin(), positives.end());
    positives.erase(std::unique(positives.begin(), positives.end()), positives.end());
    Dataset filter = split.train_input;
    for (const auto& f : extra_targets) filter.insert(f);
    NegativeSamplerConfig neg_cfg;
    neg_cfg.negatives_per_positive = cfg.negatives_per_positive;
    neg_cfg.filter_against = &filter;
    const std::vector<Fact> negatives =
        sample_negatives(positives, m.signature.binary_count(), neg_cfg, seed);

    std::vector<Example> batch;
    for (const auto& f : positives) batch.push_back({f, 1.0});
    for (const auto& f : negatives) batch.push_back({f, 0.0});

    const LossAndGradient lg = backward(m, es.input, batch, pw);
    if (std::isnan(lg.loss)) {
      throw DataError("training diverged: NaN loss at epoch " + std::to_string(epoch));
    }

    Eigen::VectorXd grad = flatten_parameters(lg.gradient);
    grad += cfg.weight_decay * theta;
    m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * grad;
    m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(epoch));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(epoch));
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double mhat = m1[i] / c1;
      const double vhat = m2[i] / c2;
      theta[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
      if (cfg.clamp_nonnegative && constrained[static_cast<std::size_t>(i)] && theta[i] < 0.0) theta[i] = 0.0;
    }
    assign_parameters(m, theta);
    if (cfg.clamp_nonnegative && cfg.verify_monotonic && !m.is_monotonic()) {
      throw Error("clamped parameters violate monotonicity at epoch " + std::to_string(epoch));
    }

    out.losses.push_back(lg.loss);
    if (log) {
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
      log({epoch, lg.loss, dt.count()});
    }
  }
  return out;
}

Model random_model(const Signature& sig, const InitSpec& spec, bool nonnegative, std::uint64_t seed) {
  if (spec.hidden_dims.empty()) throw DataError("a model needs at least one layer");
  std::vector<std::size_t> dims{sig.unary_count()};
  dims.insert(dims.end(), spec.hidden_dims.begin(), spec.hidden_dims.end());
  Model m;
  m.signature = sig;
  m.gnn = MaxSumGnn::zeros(dims, sig.binary_count(), spec.budget, spec.direction);
  for (auto& l : m.gnn.layers) l.activation = spec.activation;
  const std::size_t d = dims.back();
  const std::size_t dr = spec.relation_dim == 0 ? d : spec.relation_dim;
  m.scoring = ScoringFunction::zeros(spec.scoring, d, sig.binary_count(), dr);

  Rng rng = make_rng(seed, "init");
  const auto fill = [&](double* data, std::size_t n, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = 0; i < n; ++i) data[i] = nonnegative ? std::max(0.0, u(rng)) : u(rng);
  };
  for (std::size_t l = 0; l < m.gnn.layers.size(); ++l) {
    auto& layer = m.gnn.layers[l];
    fill(layer.a.data(), static_cast<std::size_t>(layer.a.size()), dims[l]);
    for (auto& b : layer.b) fill(b.data(), static_cast<std::size_t>(b.size()), dims[l]);
  }
  auto& f = m.scoring;
  for (auto& mat : f.matrices) fill(mat.data(), static_cast<std::size_t>(mat.size()), d);
  for (auto& v : f.vectors) fill(v.data(), static_cast<std::size_t>(v.size()), d);
  for (auto& w : f.core) fill(w.data(), static_cast<std::size_t>(w.size()), d);
  if (f.kind == ScoringKind::kNam) {
    for (auto& l : f.nam) {
      fill(l.weight.data(), static_cast<std::size_t>(l.weight.size()), static_cast<std::size_t>(l.weight.cols()));
    }
  }
  m.check_consistency();
  return m;
}

double select_threshold(std::span<const double> positive_scores, std::span<const double> negative_scores) {
  std::vector<std::pair<double, bool>> all;
  for (double s : positive_scores) all.emplace_back(s, true);
  for (double s : negative_scores) all.emplace_back(s, false);
  if (all.empty()) throw DataError("threshold selection needs validation scores");
  std::sort(all.begin(), all.end());
  const std::size_t total_pos = positive_scores.size();
  // Walking up the distinct scores: below t every item is predicted negative.
  std::size_t pos_below = 0;
  std::size_t neg_below = 0;
  double best_t = all.front().first;
  std::size_t best_correct = 0;
  for (std::size_t i = 0; i < all.size();) {
    const double t = all[i].first;
    const std::size_t correct = neg_below + (total_pos - pos_below);
    if (correct >= best_correct) {
      best_correct = correct;
      best_t = t;
    }
    for (; i < all.size() && all[i].first == t; ++i) (all[i].second ? pos_below : neg_below)++;
  }
  return best_t;
}

double select_threshold(const Model& m, const Dataset& input, std::span<const Fact> positives,
                        std::span<const Fact> negatives) {
  const auto ps = scores_of(m, input, positives);
  const auto ns = scores_of(m, input, negatives);
  return select_threshold(ps, ns);
}

double average_precision(std::span<const double> positive_scores, std::span<const double> negative_scores) {
  if (positive_scores.empty()) return 0.0;
  std::vector<std::pair<double, bool>> all;
  for (double s : positive_scores) all.emplace_back(s, true);
  for (double s : negative_scores) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  const double total = static_cast<double>(positive_scores.size());
  double ap = 0.0;
  double tp = 0.0;
  double fp = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    const double t = all[i].first;
    for (; i < all.size() && all[i].first == t; ++i) (all[i].second ? tp : fp) += 1.0;
    const double recall = tp / total;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
  }
  return ap;
}

Metrics evaluate(std::span<const double> positive_scores, std::span<const double> negative_scores,
                 double threshold) {
  Metrics out;
  double tp = 0.0;
  double fn = 0.0;
  double fp = 0.0;
  double tn = 0.0;
  for (double s : positive_scores) (s >= threshold ? tp : fn) += 1.0;
  for (double s : negative_scores) (s >= threshold ? fp : tn) += 1.0;
  const double total = tp + fn + fp + tn;
  out.accuracy = total > 0.0 ? (tp + tn) / total : 0.0;
  out.precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
  out.recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
  out.f1 = out.precision + out.recall > 0.0 ? 2.0 * out.precision * out.recall / (out.precision + out.recall) : 0.0;
  out.auprc = average_precision(positive_scores, negative_scores);
  return out;
}

Metrics evaluate(const Model& m, const Dataset& input, std::span<const Fact> positives,
                 std::span<const Fact> negatives) {
  const auto ps = scores_of(m, input, positives);
  const auto ns = scores_of(m, input, negatives);
  return evaluate(ps, ns, m.scoring.threshold);
}

std::string Metrics::to_json() const {
  nlohmann::json doc{{"accuracy", accuracy}, {"precision", precision}, {"recall", recall},
                     {"f1", f1},             {"auprc", auprc},         {"final_epoch_loss", final_epoch_loss}};
  return doc.dump(1) + "\n";
}

}  // namespace monolink
