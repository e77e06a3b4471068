#include "monolink/gnn.hpp"

#include <algorithm>
#include <functional>

#include "monolink/errors.hpp"

namespace monolink {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kIdentity:
      return "identity";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw DataError("unknown activation '" + std::string(name) + "'");
}

std::string to_string(MessageDirection d) {
  return d == MessageDirection::kAgainstEdges ? "against_edges" : "along_edges";
}

MessageDirection parse_message_direction(std::string_view name) {
  if (name == "against_edges" || name == "out") return MessageDirection::kAgainstEdges;
  if (name == "along_edges" || name == "in") return MessageDirection::kAlongEdges;
  throw DataError("unknown message direction '" + std::string(name) + "'");
}

std::string to_string(AggregationBudget k) {
  return k.is_infinite() ? "inf" : std::to_string(k.value());
}

double max_k_sum(std::span<const double> values, AggregationBudget k) {
  const std::size_t take = k.take(values.size());
  if (take == 0) return 0.0;
  if (take == 1) return *std::max_element(values.begin(), values.end());
  std::vector<double> v(values.begin(), values.end());
  std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(take), v.end(),
                    std::greater<>());
  double s = 0.0;
  for (std::size_t i = 0; i < take; ++i) s += v[i];
  return s;
}

std::size_t MaxSumGnn::max_dim() const {
  return dims.empty() ? 0 : *std::max_element(dims.begin(), dims.end());
}

MaxSumGnn MaxSumGnn::zeros(std::vector<std::size_t> dims, std::size_t colors,
                           AggregationBudget budget, MessageDirection direction) {
  if (dims.size() < 2) throw DataError("a GNN needs at least one layer");
  MaxSumGnn g;
  g.dims = std::move(dims);
  g.direction = direction;
  for (std::size_t l = 1; l < g.dims.size(); ++l) {
    const auto rows = static_cast<Eigen::Index>(g.dims[l]);
    const auto cols = static_cast<Eigen::Index>(g.dims[l - 1]);
    GnnLayer layer;
    layer.a = Eigen::MatrixXd::Zero(rows, cols);
    layer.b.assign(colors, Eigen::MatrixXd::Zero(rows, cols));
    layer.bias = Eigen::VectorXd::Zero(rows);
    layer.budget = budget;
    g.layers.push_back(std::move(layer));
  }
  return g;
}

void MaxSumGnn::check_shapes() const {
  if (layers.empty()) throw DataError("a GNN needs at least one layer");
  if (dims.size() != layers.size() + 1) throw DataError("dims must have L+1 entries");
  const std::size_t colors = layers.front().b.size();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto rows = static_cast<Eigen::Index>(dims[l + 1]);
    const auto cols = static_cast<Eigen::Index>(dims[l]);
    const std::string where = "layer " + std::to_string(l + 1) + ": ";
    if (layer.a.rows() != rows || layer.a.cols() != cols) throw DataError(where + "A has wrong shape");
    if (layer.bias.size() != rows) throw DataError(where + "bias has wrong length");
    if (layer.b.size() != colors) throw DataError(where + "inconsistent colour count");
    for (const auto& b : layer.b) {
      if (b.rows() != rows || b.cols() != cols) throw DataError(where + "B has wrong shape");
    }
  }
}

const std::vector<std::uint32_t>& message_sources(const ColoredGraph& graph, std::size_t color,
                                                  std::uint32_t v, MessageDirection direction) {
  return direction == MessageDirection::kAgainstEdges ? graph.successors[color][v]
                                                      : graph.predecessors[color][v];
}

LayerTrace forward(const MaxSumGnn& gnn, const ColoredGraph& graph) {
  if (static_cast<std::size_t>(graph.labels.cols()) != gnn.input_dim()) {
    throw DataError("graph label dimension " + std::to_string(graph.labels.cols()) +
                    " does not match GNN input dimension " + std::to_string(gnn.input_dim()));
  }
  if (graph.color_count() != gnn.color_count()) {
    throw DataError("graph has " + std::to_string(graph.color_count()) + " colours, GNN has " +
                    std::to_string(gnn.color_count()));
  }
  const auto n = static_cast<Eigen::Index>(graph.vertex_count());
  LayerTrace trace;
  trace.labels.push_back(graph.labels);
  trace.pre_activations.emplace_back();
  std::vector<double> buffer;
  for (std::size_t l = 0; l < gnn.layer_count(); ++l) {
    const GnnLayer& layer = gnn.layers[l];
    const Eigen::MatrixXd& prev = trace.labels.back();
    const Eigen::Index in = prev.cols();
    const Eigen::Index out = layer.bias.size();
    Eigen::MatrixXd pre(n, out);
    Eigen::VectorXd agg(in);
    for (Eigen::Index v = 0; v < n; ++v) {
      // Fixed accumulation order per vertex keeps results independent of
      // vertex numbering.
      for (Eigen::Index i = 0; i < out; ++i) {
        double s = layer.bias[i];
        for (Eigen::Index j = 0; j < in; ++j) s += layer.a(i, j) * prev(v, j);
        pre(v, i) = s;
      }
      for (std::size_t c = 0; c < layer.b.size(); ++c) {
        const auto& sources =
            message_sources(graph, c, static_cast<std::uint32_t>(v), gnn.direction);
        if (sources.empty()) continue;
        for (Eigen::Index j = 0; j < in; ++j) {
          buffer.clear();
          for (std::uint32_t u : sources) buffer.push_back(prev(u, j));
          agg[j] = max_k_sum(buffer, layer.budget);
        }
        for (Eigen::Index i = 0; i < out; ++i) {
          double s = 0.0;
          for (Eigen::Index j = 0; j < in; ++j) s += layer.b[c](i, j) * agg[j];
          pre(v, i) += s;
        }
      }
    }
    Eigen::MatrixXd post = pre;
    if (layer.activation == Activation::kRelu) post = post.cwiseMax(0.0);
    trace.pre_activations.push_back(std::move(pre));
    trace.labels.push_back(std::move(post));
  }
  return trace;
}

std::vector<std::string> GnnMonotonicityReport::messages() const {
  std::vector<std::string> out;
  for (const auto& w : weights) {
    out.push_back("layer " + std::to_string(w.layer) + ", " + w.matrix + "[" +
                  std::to_string(w.row) + "," + std::to_string(w.col) +
                  "] = " + std::to_string(w.value) + " is negative");
  }
  for (std::size_t l : activation_layers) {
    out.push_back("layer " + std::to_string(l) +
                  ": activation is not monotonically increasing with non-negative range");
  }
  return out;
}

GnnMonotonicityReport validate_monotonic(const MaxSumGnn& gnn) {
  GnnMonotonicityReport report;
  const auto scan = [&](std::size_t layer, const std::string& name, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (!(m(i, j) >= 0.0)) {
          report.weights.push_back({layer, name, static_cast<std::size_t>(i),
                                    static_cast<std::size_t>(j), m(i, j)});
        }
      }
    }
  };
  for (std::size_t l = 0; l < gnn.layers.size(); ++l) {
    const auto& layer = gnn.layers[l];
    scan(l + 1, "A", layer.a);
    for (std::size_t c = 0; c < layer.b.size(); ++c) scan(l + 1, "B^" + std::to_string(c), layer.b[c]);
    if (layer.activation != Activation::kRelu) report.activation_layers.push_back(l + 1);
  }
  return report;
}

}  // namespace monolink
