#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "monolink/errors.hpp"

namespace monolink::testing {

Signature make_signature(std::size_t unary, std::size_t binary) {
  std::vector<std::string> u;
  std::vector<std::string> b;
  for (std::size_t i = 1; i <= unary; ++i) u.push_back("U" + std::to_string(i));
  for (std::size_t i = 1; i <= binary; ++i) b.push_back("P" + std::to_string(i));
  return Signature(u, b);
}

Model random_monotonic_model(const Signature& sig, const RandomModelSpec& spec, Rng& rng) {
  std::uniform_int_distribution<std::size_t> dim(1, spec.max_dim);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> bias(spec.min_bias, spec.max_bias);
  const auto weight = [&] { return unit(rng) < spec.zero_probability ? 0.0 : unit(rng); };

  std::vector<std::size_t> dims{sig.unary_count()};
  for (std::size_t l = 0; l < spec.layers; ++l) dims.push_back(dim(rng));
  Model m;
  m.signature = sig;
  m.gnn = MaxSumGnn::zeros(dims, sig.binary_count(), spec.budget, spec.direction);
  for (auto& layer : m.gnn.layers) {
    for (Eigen::Index i = 0; i < layer.a.size(); ++i) layer.a.data()[i] = weight();
    for (auto& b : layer.b) {
      for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = weight();
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = bias(rng);
  }
  const std::size_t d = dims.back();
  const std::size_t dr = 1 + rng() % 2;
  m.scoring = ScoringFunction::zeros(spec.kind, d, sig.binary_count(), dr);
  auto& f = m.scoring;
  for (auto& mat : f.matrices) {
    for (Eigen::Index i = 0; i < mat.size(); ++i) mat.data()[i] = weight();
  }
  for (auto& v : f.vectors) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = weight();
  }
  for (auto& w : f.core) {
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = weight();
  }
  if (f.kind == ScoringKind::kNam) {
    for (auto& l : f.nam) {
      for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = weight();
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = bias(rng);
    }
  }
  m.check_consistency();
  pick_threshold(m, rng);
  return m;
}

Dataset random_dataset(const Signature& sig, std::size_t constants, double density, Rng& rng) {
  std::bernoulli_distribution coin(density);
  Dataset d;
  std::vector<ConstId> ids;
  for (std::size_t i = 0; i < constants; ++i) ids.push_back(d.intern("c" + std::to_string(i)));
  for (std::uint32_t p = 0; p < sig.unary_count(); ++p) {
    for (ConstId a : ids) {
      if (coin(rng)) d.insert(Fact::unary(p, a));
    }
  }
  for (std::uint32_t c = 0; c < sig.binary_count(); ++c) {
    for (ConstId a : ids) {
      for (ConstId b : ids) {
        if (coin(rng)) d.insert(Fact::binary(c, a, b));
      }
    }
  }
  return d;
}

Dataset random_superset(const Signature& sig, const Dataset& base, std::size_t constants, double density,
                        Rng& rng) {
  Dataset out = base;
  out.merge(random_dataset(sig, constants, density, rng));
  return out;
}

Dataset rename_constants(const Dataset& data, const std::map<std::string, std::string>& names) {
  Dataset out;
  for (const auto& f : data.facts()) {
    const ConstId a = out.intern(names.at(data.constant_name(f.first)));
    if (f.predicate.arity == Arity::kUnary) {
      out.insert(Fact::unary(f.predicate.index, a));
    } else {
      const ConstId b = out.intern(names.at(data.constant_name(f.second)));
      out.insert(Fact::binary(f.predicate.index, a, b));
    }
  }
  return out;
}

void pick_threshold(Model& m, Rng& rng, std::size_t constants) {
  std::vector<double> scores;
  for (int trial = 0; trial < 4; ++trial) {
    const Dataset d = random_dataset(m.signature, constants, 0.4, rng);
    const ColoredGraph g = encode(d, m.signature);
    if (g.vertex_count() == 0) continue;
    const Eigen::MatrixXd out = forward(m.gnn, g).output();
    for (std::uint32_t r = 0; r < m.signature.binary_count(); ++r) {
      for (Eigen::Index a = 0; a < out.rows(); ++a) {
        for (Eigen::Index b = 0; b < out.rows(); ++b) {
          scores.push_back(score(m.scoring, r, out.row(a).transpose(), out.row(b).transpose()));
        }
      }
    }
  }
  std::erase_if(scores, [](double s) { return !(s > 0.0); });
  if (scores.empty()) {
    m.scoring.threshold = 0.5;
    return;
  }
  std::sort(scores.begin(), scores.end());
  const double q = std::uniform_real_distribution<double>(0.2, 0.9)(rng);
  m.scoring.threshold = scores[static_cast<std::size_t>(q * static_cast<double>(scores.size() - 1))];
}

GradientCheck check_gradient(const Model& m, const Dataset& input, std::span<const Example> examples,
                             double positive_weight, double h, double floor) {
  GradientCheck out;
  const Eigen::VectorXd analytic = flatten_parameters(backward(m, input, examples, positive_weight).gradient);
  const Eigen::VectorXd theta = flatten_parameters(m);
  Model probe = m;
  std::vector<std::string> names;
  for (const auto& b : parameter_blocks(probe)) names.insert(names.end(), b.size, b.name);
  const auto loss_at = [&](Eigen::Index i, double delta) {
    Eigen::VectorXd t = theta;
    t[i] += delta;
    assign_parameters(probe, t);
    return backward(probe, input, examples, positive_weight).loss;
  };
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double numeric = (loss_at(i, h) - loss_at(i, -h)) / (2.0 * h);
    const double err = std::abs(analytic[i] - numeric) /
                       (std::max(std::abs(analytic[i]), std::abs(numeric)) + floor);
    ++out.checked;
    if (err > out.worst) {
      out.worst = err;
      out.parameter = names[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

Model random_gradient_model(const Signature& sig, ScoringKind kind, AggregationBudget k, Rng& rng) {
  RandomModelSpec spec;
  spec.layers = 1 + rng() % 2;
  spec.max_dim = 2;
  spec.kind = kind;
  spec.budget = k;
  spec.zero_probability = 0.0;
  Model m = random_monotonic_model(sig, spec, rng);
  std::uniform_real_distribution<double> mag(0.1, 0.5);
  const auto nudge = [&](Eigen::VectorXd& bias) {
    for (Eigen::Index i = 0; i < bias.size(); ++i) bias[i] = (rng() % 2 ? 1.0 : -1.0) * mag(rng);
  };
  for (auto& layer : m.gnn.layers) nudge(layer.bias);
  for (auto& l : m.scoring.nam) nudge(l.bias);
  return m;
}

}  // namespace monolink::testing
