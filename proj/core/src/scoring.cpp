#include "monolink/scoring.hpp"

#include "monolink/errors.hpp"
#include "monolink/random.hpp"

namespace monolink {
namespace {

using Vec = Eigen::Ref<const Eigen::VectorXd>;

double bilinear(const Eigen::MatrixXd& m, const Vec& h, const Vec& t) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index k = 0; k < m.cols(); ++k) row += m(i, k) * t[k];
    s += h[i] * row;
  }
  return s;
}

Eigen::VectorXd relu_affine(const NamLayer& layer, const Eigen::VectorXd& x) {
  Eigen::VectorXd y(layer.weight.rows());
  for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
    double s = layer.bias[i];
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) s += layer.weight(i, j) * x[j];
    y[i] = s > 0.0 ? s : 0.0;
  }
  return y;
}

}  // namespace

std::string to_string(ScoringKind k) {
  switch (k) {
    case ScoringKind::kRescal:
      return "rescal";
    case ScoringKind::kDistMult:
      return "distmult";
    case ScoringKind::kTucker:
      return "tucker";
    case ScoringKind::kNam:
      return "nam";
  }
  return "?";
}

ScoringKind parse_scoring_kind(std::string_view name) {
  std::string lower;
  for (char c : name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "rescal") return ScoringKind::kRescal;
  if (lower == "distmult") return ScoringKind::kDistMult;
  if (lower == "tucker") return ScoringKind::kTucker;
  if (lower == "nam") return ScoringKind::kNam;
  throw DataError("unknown scoring kind '" + std::string(name) + "'");
}

std::size_t ScoringFunction::relation_count() const {
  return kind == ScoringKind::kRescal ? matrices.size() : vectors.size();
}

std::size_t ScoringFunction::relation_dim() const {
  return kind == ScoringKind::kTucker ? core.size() : dim;
}

ScoringFunction ScoringFunction::zeros(ScoringKind kind, std::size_t dim, std::size_t relations,
                                       std::size_t relation_dim) {
  ScoringFunction f;
  f.kind = kind;
  f.dim = dim;
  const auto d = static_cast<Eigen::Index>(dim);
  switch (kind) {
    case ScoringKind::kRescal:
      f.matrices.assign(relations, Eigen::MatrixXd::Zero(d, d));
      break;
    case ScoringKind::kDistMult:
      f.vectors.assign(relations, Eigen::VectorXd::Zero(d));
      break;
    case ScoringKind::kTucker: {
      const std::size_t dr = relation_dim == 0 ? dim : relation_dim;
      f.core.assign(dr, Eigen::MatrixXd::Zero(d, d));
      f.vectors.assign(relations, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dr)));
      break;
    }
    case ScoringKind::kNam:
      f.vectors.assign(relations, Eigen::VectorXd::Zero(d));
      f.nam[0] = {Eigen::MatrixXd::Zero(d, 2 * d), Eigen::VectorXd::Zero(d)};
      f.nam[1] = {Eigen::MatrixXd::Zero(d, d), Eigen::VectorXd::Zero(d)};
      f.nam[2] = {Eigen::MatrixXd::Zero(d, d), Eigen::VectorXd::Zero(d)};
      break;
  }
  return f;
}

void ScoringFunction::check_shapes() const {
  const auto d = static_cast<Eigen::Index>(dim);
  const auto square = [&](const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() != d || m.cols() != d) throw DataError(std::string(what) + " must be d x d");
  };
  switch (kind) {
    case ScoringKind::kRescal:
      for (const auto& m : matrices) square(m, "RESCAL M_R");
      break;
    case ScoringKind::kDistMult:
      for (const auto& v : vectors) {
        if (v.size() != d) throw DataError("DistMult diagonal must have length d");
      }
      break;
    case ScoringKind::kTucker:
      if (core.empty()) throw DataError("TuckER core must have at least one slice");
      for (const auto& m : core) square(m, "TuckER core slice");
      for (const auto& v : vectors) {
        if (v.size() != static_cast<Eigen::Index>(core.size())) {
          throw DataError("TuckER r_R must have length d_r");
        }
      }
      break;
    case ScoringKind::kNam:
      for (const auto& v : vectors) {
        if (v.size() != d) throw DataError("NAM r_R must have length d");
      }
      if (nam[0].weight.rows() != d || nam[0].weight.cols() != 2 * d || nam[0].bias.size() != d) {
        throw DataError("NAM layer 1 must be d x 2d");
      }
      for (int l = 1; l < 3; ++l) {
        square(nam[l].weight, "NAM hidden layer");
        if (nam[l].bias.size() != d) throw DataError("NAM bias must have length d");
      }
      break;
  }
}

double score(const ScoringFunction& f, std::size_t relation, const Vec& h, const Vec& t) {
  if (relation >= f.relation_count()) {
    throw DataError("unknown relation index " + std::to_string(relation));
  }
  const auto d = static_cast<Eigen::Index>(f.dim);
  if (h.size() != d || t.size() != d) {
    throw DataError("embedding dimension mismatch: expected " + std::to_string(f.dim));
  }
  switch (f.kind) {
    case ScoringKind::kRescal:
      return bilinear(f.matrices[relation], h, t);
    case ScoringKind::kDistMult: {
      const auto& r = f.vectors[relation];
      double s = 0.0;
      // r_i * (h_i * t_i) keeps the score exactly symmetric in h and t.
      for (Eigen::Index i = 0; i < d; ++i) s += r[i] * (h[i] * t[i]);
      return s;
    }
    case ScoringKind::kTucker: {
      const auto& r = f.vectors[relation];
      double s = 0.0;
      for (std::size_t j = 0; j < f.core.size(); ++j) {
        s += r[static_cast<Eigen::Index>(j)] * bilinear(f.core[j], h, t);
      }
      return s;
    }
    case ScoringKind::kNam: {
      Eigen::VectorXd x(2 * d);
      x << h, f.vectors[relation];
      const Eigen::VectorXd out = relu_affine(f.nam[2], relu_affine(f.nam[1], relu_affine(f.nam[0], x)));
      double s = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) s += t[i] * out[i];
      return s;
    }
  }
  return 0.0;
}

std::vector<std::string> ScoringMonotonicityReport::messages() const {
  std::vector<std::string> out;
  for (const auto& v : violations) {
    out.push_back(v.parameter + "[" + std::to_string(v.row) + "," + std::to_string(v.col) +
                  "] = " + std::to_string(v.value) + " is negative");
  }
  return out;
}

ScoringMonotonicityReport validate_monotonic_scoring(const ScoringFunction& f) {
  ScoringMonotonicityReport report;
  const auto scan = [&](const std::string& name, const auto& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (!(m(i, j) >= 0.0)) {
          report.violations.push_back(
              {name, static_cast<std::size_t>(i), static_cast<std::size_t>(j), m(i, j)});
        }
      }
    }
  };
  for (std::size_t r = 0; r < f.matrices.size(); ++r) scan("M[" + std::to_string(r) + "]", f.matrices[r]);
  for (std::size_t r = 0; r < f.vectors.size(); ++r) scan("r[" + std::to_string(r) + "]", f.vectors[r]);
  for (std::size_t j = 0; j < f.core.size(); ++j) scan("W[:," + std::to_string(j) + ",:]", f.core[j]);
  if (f.kind == ScoringKind::kNam) {
    for (int l = 0; l < 3; ++l) scan("W" + std::to_string(l + 1), f.nam[l].weight);
  }
  return report;
}

double BilinearView::score(std::size_t relation, const Vec& h, const Vec& t) const {
  return bilinear(matrices.at(relation), h, t);
}

bool has_bilinear_view(const ScoringFunction& f) { return f.kind != ScoringKind::kNam; }

BilinearView to_bilinear(const ScoringFunction& f) {
  BilinearView view;
  const auto d = static_cast<Eigen::Index>(f.dim);
  switch (f.kind) {
    case ScoringKind::kRescal:
      view.matrices = f.matrices;
      break;
    case ScoringKind::kDistMult:
      for (const auto& r : f.vectors) view.matrices.push_back(r.asDiagonal().toDenseMatrix());
      break;
    case ScoringKind::kTucker:
      for (const auto& r : f.vectors) {
        // M_R[i,k] = sum_j W[i,j,k] r_R[j]
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
        for (std::size_t j = 0; j < f.core.size(); ++j) m += r[static_cast<Eigen::Index>(j)] * f.core[j];
        view.matrices.push_back(std::move(m));
      }
      break;
    case ScoringKind::kNam:
      throw InfeasibleError("NAM scoring has no bilinear form");
  }
  return view;
}

std::optional<MonotoneWitness> scoring_monotone_check(const ScoringFunction& f, std::size_t trials,
                                                      std::uint64_t seed) {
  Rng rng = make_rng(seed, "scoring-monotone-check");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(f.dim);
  if (d == 0) return std::nullopt;
  const auto draw = [&](double scale) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = scale * unit(rng);
    return v;
  };
  for (std::size_t trial = 0; trial < trials; ++trial) {
    for (std::size_t r = 0; r < f.relation_count(); ++r) {
      const Eigen::VectorXd h = draw(1.0);
      const Eigen::VectorXd t = draw(1.0);
      Eigen::VectorXd h2 = h;
      Eigen::VectorXd t2 = t;
      if (trial % 2 == 0) {
        h2 += draw(2.0);
        t2 += draw(2.0);
      } else {
        // Single-coordinate increases expose isolated negative parameters.
        std::uniform_int_distribution<Eigen::Index> coord(0, 2 * d - 1);
        const Eigen::Index i = coord(rng);
        (i < d ? h2[i] : t2[i - d]) += 2.0 * unit(rng) + 1e-3;
      }
      const double s = score(f, r, h, t);
      const double s2 = score(f, r, h2, t2);
      if (s > s2) return MonotoneWitness{r, h, t, h2, t2, s, s2};
    }
  }
  return std::nullopt;
}

}  // namespace monolink
