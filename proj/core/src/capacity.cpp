#include "monolink/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "monolink/errors.hpp"
#include "monolink/random.hpp"

namespace monolink {
namespace {

using Kind = ValueBound::Kind;

// Exact least positive value of b + T at layer 1, where T sums 0/1 copies of
// the A-generators and 0..k copies of the B-generators. Only sums up to
// -b + max generator need to be explored.
std::optional<double> least_positive_layer1(double b, const std::vector<double>& once,
                                            const std::vector<double>& repeated,
                                            AggregationBudget k) {
  constexpr std::size_t kNodeCap = 2'000'000;
  std::vector<std::pair<double, std::size_t>> items;  // value, max copies
  double max_gen = 0.0;
  for (double v : once) {
    items.emplace_back(v, 1);
    max_gen = std::max(max_gen, v);
  }
  for (double v : repeated) max_gen = std::max(max_gen, v);
  const double limit = -b + max_gen;
  for (double v : repeated) {
    std::size_t copies = static_cast<std::size_t>(std::ceil(limit / v)) + 1;
    if (!k.is_infinite()) copies = std::min(copies, k.value());
    items.emplace_back(v, copies);
  }
  std::sort(items.begin(), items.end(), std::greater<>());
  double best = std::numeric_limits<double>::infinity();
  std::size_t nodes = 0;
  bool overflow = false;
  std::function<void(std::size_t, double)> rec = [&](std::size_t at, double sum) {
    if (overflow) return;
    if (++nodes > kNodeCap) {
      overflow = true;
      return;
    }
    const double value = b + sum;
    if (value > 0.0) {
      best = std::min(best, value);
      return;  // adding more only increases the value
    }
    if (at == items.size()) return;
    const auto [v, copies] = items[at];
    for (std::size_t c = 0; c <= copies; ++c) {
      const double s = sum + static_cast<double>(c) * v;
      if (s > limit) break;
      rec(at + 1, s);
    }
  };
  rec(0, 0.0);
  if (overflow || !std::isfinite(best)) return std::nullopt;
  return best;
}

void require_relu(const MaxSumGnn& gnn) {
  for (std::size_t l = 0; l < gnn.layers.size(); ++l) {
    if (gnn.layers[l].activation != Activation::kRelu) {
      throw DataError("capacity requires ReLU activations (layer " + std::to_string(l + 1) + ")");
    }
  }
}

// Least natural c with c * unit >= need, robust to rounding in need / unit.
double least_natural_cover(double need, double unit) {
  if (need <= 0.0) return 0.0;
  double c = std::ceil(need / unit);
  while (c > 0.0 && (c - 1.0) * unit >= need) c -= 1.0;
  while (c * unit < need) c += 1.0;
  return c;
}

AggregationBudget to_budget(double c, AggregationBudget k) {
  constexpr double kHuge = 1e15;
  if (!k.is_infinite() && c >= static_cast<double>(k.value())) return k;
  if (c >= kHuge) return k.is_infinite() ? AggregationBudget::finite(static_cast<std::size_t>(kHuge)) : k;
  return AggregationBudget::finite(static_cast<std::size_t>(c));
}

std::optional<double> opt_or(const std::optional<double>& v) { return v; }

}  // namespace

std::optional<double> ValueBounds::epsilon(std::size_t layer) const {
  std::optional<double> eps;
  for (const auto& vb : layers.at(layer)) {
    if (vb.kind == Kind::kUnknown) return std::nullopt;
    if (vb.kind == Kind::kPositive) eps = eps ? std::min(*eps, vb.lower_bound) : vb.lower_bound;
  }
  return eps;
}

bool ValueBounds::only_zero(std::size_t layer) const {
  return std::all_of(layers.at(layer).begin(), layers.at(layer).end(),
                     [](const ValueBound& vb) { return vb.kind == Kind::kOnlyZero; });
}

bool ValueBounds::any_unknown(std::size_t layer) const {
  return std::any_of(layers.at(layer).begin(), layers.at(layer).end(),
                     [](const ValueBound& vb) { return vb.kind == Kind::kUnknown; });
}

ValueBounds min_nonzero_bounds(const MaxSumGnn& gnn) {
  gnn.check_shapes();
  require_relu(gnn);
  ValueBounds out;
  out.layers.emplace_back(gnn.dims[0], ValueBound{Kind::kPositive, 1.0});
  for (std::size_t l = 0; l < gnn.layers.size(); ++l) {
    const GnnLayer& layer = gnn.layers[l];
    const auto& prev = out.layers.back();
    std::vector<ValueBound> cur;
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      std::vector<double> once;
      std::vector<double> repeated;
      bool unknown_generator = false;
      for (std::size_t j = 0; j < prev.size(); ++j) {
        if (prev[j].kind == Kind::kOnlyZero) continue;
        const auto J = static_cast<Eigen::Index>(j);
        const auto add = [&](double weight, std::vector<double>& into) {
          if (weight <= 0.0) return;
          if (prev[j].kind == Kind::kUnknown) {
            unknown_generator = true;
          } else {
            into.push_back(weight * prev[j].lower_bound);
          }
        };
        add(layer.a(i, J), once);
        if (layer.budget.is_infinite() || layer.budget.value() > 0) {
          for (const auto& b : layer.b) add(b(i, J), repeated);
        }
      }
      const double bias = layer.bias[i];
      const bool no_generators = once.empty() && repeated.empty() && !unknown_generator;
      ValueBound vb;
      if (no_generators) {
        vb = bias > 0.0 ? ValueBound{Kind::kPositive, bias} : ValueBound{Kind::kOnlyZero, 0.0};
      } else if (bias > 0.0) {
        vb = {Kind::kPositive, bias};
      } else if (bias == 0.0) {
        if (unknown_generator) {
          vb = {Kind::kUnknown, 0.0};
        } else {
          double g = std::numeric_limits<double>::infinity();
          for (double v : once) g = std::min(g, v);
          for (double v : repeated) g = std::min(g, v);
          vb = {Kind::kPositive, g};
        }
      } else if (l == 0) {
        // Inputs are Boolean, so the generators above are the exact term
        // values and the least positive pre-activation is computable.
        auto least = least_positive_layer1(bias, once, repeated, layer.budget);
        if (!least) {
          vb = {Kind::kUnknown, 0.0};
        } else {
          // Shrink slightly: the forward pass may sum in another order.
          vb = {Kind::kPositive, *least * (1.0 - 1e-9)};
        }
      } else {
        vb = {Kind::kUnknown, 0.0};
      }
      cur.push_back(vb);
    }
    out.layers.push_back(std::move(cur));
  }
  return out;
}

AlphaResult compute_alpha(const MaxSumGnn& gnn, const BilinearView& f, double threshold,
                          const ValueBounds& bounds) {
  AlphaResult out;
  const std::size_t L = gnn.layer_count();
  const bool zero_layer = bounds.only_zero(L);
  const std::optional<double> eps = bounds.epsilon(L);
  bool unknown = false;
  for (std::size_t r = 0; r < f.matrices.size(); ++r) {
    const auto& m = f.matrices[r];
    double w = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (m(i, j) > 0.0) w = std::min(w, m(i, j));
      }
    }
    if (!std::isfinite(w) || zero_layer) {
      out.alpha_r.push_back(1.0);
      continue;
    }
    if (!eps) {
      unknown = true;
      out.alpha_r.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    double a = least_natural_cover(threshold, w * *eps);
    if (a < 1.0) {
      out.warnings.push_back("relation " + std::to_string(r) +
                             ": non-positive threshold gives alpha_R = 0, clamped to 1");
      a = 1.0;
    }
    out.alpha_r.push_back(a);
  }
  if (!unknown) {
    double a = 1.0;
    for (double v : out.alpha_r) a = std::max(a, v);
    out.alpha = a;
  } else {
    out.warnings.push_back("no positive lower bound on layer-" + std::to_string(L) +
                           " values; alpha is unknown");
  }
  return out;
}

CapacityResult compute_capacities(const MaxSumGnn& gnn, const BilinearView& f, double threshold,
                                  const ValueBounds& bounds) {
  CapacityResult out;
  out.bounds = bounds;
  out.alpha = compute_alpha(gnn, f, threshold, bounds);
  const std::size_t L = gnn.layer_count();
  out.layers.resize(L);
  std::optional<double> alpha = out.alpha.alpha;
  for (std::size_t l = L; l >= 1; --l) {
    const GnnLayer& layer = gnn.layers[l - 1];
    LayerCapacity& cap = out.layers[l - 1];
    cap.layer = l;
    cap.alpha = alpha;
    bool all_zero = (layer.a.array() == 0.0).all();
    for (const auto& b : layer.b) all_zero = all_zero && (b.array() == 0.0).all();
    if (all_zero || bounds.only_zero(l - 1)) {
      for (std::size_t m = l; m >= 1; --m) {
        out.layers[m - 1].layer = m;
        out.layers[m - 1].capacity = AggregationBudget::finite(0);
        out.layers[m - 1].early_exit = true;
      }
      break;
    }
    double w = std::numeric_limits<double>::infinity();
    const auto scan = [&](const Eigen::MatrixXd& m) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
          if (m(i, j) > 0.0) w = std::min(w, m(i, j));
        }
      }
    };
    scan(layer.a);
    for (const auto& b : layer.b) scan(b);
    cap.w = w;
    cap.epsilon = bounds.epsilon(l - 1);
    cap.b = layer.bias.minCoeff();
    if (!alpha) {
      cap.capacity = layer.budget;
      cap.fallback = true;
      continue;
    }
    // ReLU: the least natural beta with relu(beta) >= alpha.
    const double beta = *alpha > 0.0 ? std::ceil(*alpha) : 0.0;
    cap.beta = beta;
    const double need = beta - *cap.b;
    if (!cap.epsilon) {
      cap.capacity = layer.budget;
      cap.fallback = true;
    } else {
      cap.capacity = to_budget(least_natural_cover(need, w * *cap.epsilon), layer.budget);
    }
    alpha = need / w;
  }
  out.overall = AggregationBudget::finite(0);
  for (const auto& cap : out.layers) {
    if (cap.capacity.is_infinite()) {
      out.overall = AggregationBudget::infinite();
      break;
    }
    out.overall = AggregationBudget::finite(std::max(out.overall.value(), cap.capacity.value()));
  }
  return out;
}

CapacityResult compute_capacities(const MaxSumGnn& gnn, const ScoringFunction& f) {
  if (!has_bilinear_view(f)) {
    throw InfeasibleError("capacity needs a non-negative bilinear scoring function; " +
                          to_string(f.kind) + " has no bilinear form");
  }
  if (!validate_monotonic(gnn).ok() || !validate_monotonic_scoring(f).ok()) {
    throw DataError("capacity requires a monotonic GNN and non-negative scoring parameters");
  }
  return compute_capacities(gnn, to_bilinear(f), f.threshold, min_nonzero_bounds(gnn));
}

MaxSumGnn restrict_gnn(const MaxSumGnn& gnn, const CapacityResult& caps) {
  if (caps.layers.size() != gnn.layer_count()) throw DataError("capacity result does not match GNN");
  MaxSumGnn out = gnn;
  for (std::size_t l = 0; l < out.layers.size(); ++l) out.layers[l].budget = caps.layers[l].capacity;
  return out;
}

std::string CapacityResult::report() const {
  std::ostringstream os;
  const auto num = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    std::ostringstream s;
    s << *v;
    return s.str();
  };
  os << "alpha = " << num(opt_or(alpha.alpha)) << "\n";
  for (std::size_t r = 0; r < alpha.alpha_r.size(); ++r) {
    os << "alpha_R[" << r << "] = " << alpha.alpha_r[r] << "\n";
  }
  os << "layer\tw\tepsilon\talpha\tbeta\tb\tC\n";
  for (const auto& c : layers) {
    os << c.layer << "\t" << num(c.w) << "\t" << num(c.epsilon) << "\t" << num(c.alpha) << "\t"
       << num(c.beta) << "\t" << num(c.b) << "\t" << to_string(c.capacity)
       << (c.early_exit ? " (all-zero)" : "") << (c.fallback ? " (kept k)" : "") << "\n";
  }
  os << "C = " << to_string(overall) << "\n";
  for (const auto& w : alpha.warnings) os << "warning: " << w << "\n";
  return os.str();
}

std::string CapacityResult::to_json() const {
  using json = nlohmann::json;
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  const auto budget = [](AggregationBudget k) {
    return k.is_infinite() ? json("inf") : json(k.value());
  };
  json doc;
  doc["alpha"] = opt(alpha.alpha);
  doc["alpha_r"] = json::array();
  for (double a : alpha.alpha_r) doc["alpha_r"].push_back(std::isnan(a) ? json(nullptr) : json(a));
  doc["layers"] = json::array();
  for (const auto& c : layers) {
    doc["layers"].push_back({{"layer", c.layer},
                             {"w", opt(c.w)},
                             {"epsilon", opt(c.epsilon)},
                             {"alpha", opt(c.alpha)},
                             {"beta", opt(c.beta)},
                             {"b", opt(c.b)},
                             {"capacity", budget(c.capacity)},
                             {"early_exit", c.early_exit},
                             {"fallback", c.fallback}});
  }
  doc["capacity"] = budget(overall);
  doc["warnings"] = alpha.warnings;
  return doc.dump(1) + "\n";
}

std::vector<std::vector<std::optional<double>>> observed_min_nonzero(const MaxSumGnn& gnn,
                                                                     const ValueOracleConfig& cfg) {
  const std::size_t n = cfg.max_constants;
  const std::size_t unary = gnn.input_dim();
  const std::size_t colors = gnn.color_count();
  const std::size_t bits = n * unary + n * n * colors;
  std::vector<std::vector<std::optional<double>>> best(gnn.dims.size());
  for (std::size_t l = 0; l < gnn.dims.size(); ++l) best[l].resize(gnn.dims[l]);

  const auto run = [&](const std::vector<bool>& on) {
    ColoredGraph g;
    g.constants.resize(n);
    g.names.resize(n);
    g.edges.assign(colors, {});
    g.successors.assign(colors, std::vector<std::vector<std::uint32_t>>(n));
    g.predecessors.assign(colors, std::vector<std::vector<std::uint32_t>>(n));
    g.labels = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(unary));
    std::size_t bit = 0;
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t p = 0; p < unary; ++p) {
        if (on[bit++]) g.labels(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(p)) = 1.0;
      }
    }
    for (std::size_t c = 0; c < colors; ++c) {
      for (std::uint32_t s = 0; s < n; ++s) {
        for (std::uint32_t t = 0; t < n; ++t) {
          if (!on[bit++]) continue;
          g.edges[c].emplace_back(s, t);
          g.successors[c][s].push_back(t);
          g.predecessors[c][t].push_back(s);
        }
      }
    }
    const LayerTrace trace = forward(gnn, g);
    for (std::size_t l = 0; l < trace.labels.size(); ++l) {
      const auto& m = trace.labels[l];
      for (Eigen::Index v = 0; v < m.rows(); ++v) {
        for (Eigen::Index i = 0; i < m.cols(); ++i) {
          const double x = m(v, i);
          auto& slot = best[l][static_cast<std::size_t>(i)];
          if (x != 0.0 && (!slot || x < *slot)) slot = x;
        }
      }
    }
  };

  std::vector<bool> on(bits, false);
  if (bits < 63 && (std::uint64_t{1} << bits) <= cfg.max_datasets) {
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << bits); ++mask) {
      for (std::size_t b = 0; b < bits; ++b) on[b] = (mask >> b) & 1U;
      run(on);
    }
  } else {
    Rng rng = make_rng(cfg.seed, "value-oracle");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t s = 0; s < cfg.max_datasets; ++s) {
      const double density = unit(rng);
      for (std::size_t b = 0; b < bits; ++b) on[b] = unit(rng) < density;
      run(on);
    }
  }
  return best;
}

}  // namespace monolink
