#include "hgkt/gnn.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "hgkt/io_util.hpp"
#include "hgkt/rng.hpp"

namespace hgkt::gnn {
namespace {

using graph::NodeKind;

double lrelu(double x, double slope) { return x > 0.0 ? x : slope * x; }

// Subgradient at the kink takes the negative-branch slope.
double lrelu_grad(double x, double slope) { return x > 0.0 ? 1.0 : slope; }

Vector apply_lrelu(const Vector& z, double slope) {
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out(i) = lrelu(z(i), slope);
  return out;
}

void check_train_config(const TrainConfig& cfg) {
  if (cfg.mu < 0.0) throw ConfigError("gnn: mu must be >= 0");
  if (cfg.xi < 0.0) throw ConfigError("gnn: xi must be >= 0");
  if (!(cfg.lr > 0.0)) throw ConfigError("gnn: lr must be > 0");
  if (cfg.leaky_slope < 0.0) throw ConfigError("gnn: leaky_slope must be >= 0");
  if (cfg.sample_size < 1) throw ConfigError("gnn: sample_size must be >= 1");
  if (cfg.epochs < 0) throw ConfigError("gnn: epochs must be >= 0");
  if (cfg.adam_beta1 < 0.0 || cfg.adam_beta1 >= 1.0 || cfg.adam_beta2 < 0.0 ||
      cfg.adam_beta2 >= 1.0) {
    throw ConfigError("gnn: adam betas must lie in [0, 1)");
  }
}

void check_shapes(const HeteroGraph& g, const std::vector<ClassPrototype>& prototypes,
                  const GnnParams& params) {
  if (g.num_classes < 1) throw DimensionError("gnn: graph has no classes");
  if (static_cast<int>(prototypes.size()) != g.num_classes) {
    throw DimensionError("gnn: prototype count does not match graph classes");
  }
  const int d = params.attr_dim();
  for (int c = 0; c < g.num_classes; ++c) {
    if (prototypes[c].class_id != c) {
      throw SchemaError("gnn: prototypes must carry dense class ids 0..L-1");
    }
    if (static_cast<int>(prototypes[c].attributes.size()) != d) {
      throw DimensionError("gnn: prototype attribute length does not match W1");
    }
  }
  const int h = params.hidden_dim();
  if (params.W1.cols() != 2 * d) throw DimensionError("gnn: W1 must have 2d columns");
  if (params.b1.size() != h) throw DimensionError("gnn: b1 length must equal W1 rows");
  if (params.W2.cols() != 2 * h) throw DimensionError("gnn: W2 must have 2h columns");
  if (params.b2.size() != params.W2.rows()) {
    throw DimensionError("gnn: b2 length must equal W2 rows");
  }
}

// Every node of class l carries the class prototype as h0, so all regular
// nodes of a class share one layer-1 value; only representatives (whose
// neighborhoods mix classes) need their own. Forward and backward work on
// these 2L distinct units, which is exact, and per-node states are filled
// from them.
struct Trace {
  int L = 0, d = 0, h = 0, n = 0;
  Matrix in1_class, in1_rep;    // L x 2d concat inputs
  Matrix z1_class, h1_class;    // L x h
  Matrix z1_rep, h1_rep;        // L x h
  Matrix in2;                   // L x 2h
  Matrix z2, h2;                // L x n
  std::vector<int> l2_total;    // sampled layer-2 neighborhood size (0 = fallback)
  std::vector<int> l2_regular;  // same-class regular nodes among them
  std::vector<std::vector<std::pair<int, int>>> l2_reps;  // (class, count)
};

std::vector<int> pick_neighbors(const HeteroGraph& g, int node, const TrainConfig& cfg,
                                std::uint64_t step, int layer, bool use_sampling) {
  std::vector<int> nbrs = g.neighborhood(node);
  if (!use_sampling) return nbrs;
  return graph::sample_neighbors(
      nbrs, cfg.sample_size,
      mix_seed({cfg.seed, step, static_cast<std::uint64_t>(layer),
                static_cast<std::uint64_t>(node)}));
}

Trace run_forward(const HeteroGraph& g, const std::vector<ClassPrototype>& prototypes,
                  const GnnParams& params, const TrainConfig& cfg, std::uint64_t step,
                  bool use_sampling) {
  check_train_config(cfg);
  check_shapes(g, prototypes, params);

  Trace t;
  t.L = g.num_classes;
  t.d = params.attr_dim();
  t.h = params.hidden_dim();
  t.n = params.feature_dim();
  t.in1_class.resize(t.L, 2 * t.d);
  t.in1_rep.resize(t.L, 2 * t.d);
  t.z1_class.resize(t.L, t.h);
  t.h1_class.resize(t.L, t.h);
  t.z1_rep.resize(t.L, t.h);
  t.h1_rep.resize(t.L, t.h);
  t.in2.resize(t.L, 2 * t.h);
  t.z2.resize(t.L, t.n);
  t.h2.resize(t.L, t.n);
  t.l2_total.assign(t.L, 0);
  t.l2_regular.assign(t.L, 0);
  t.l2_reps.assign(t.L, {});

  // Layer 1. A regular node aggregates same-class h0 values, which all equal
  // the class prototype, so its unit input is concat(p, mu*p) whether the
  // neighborhood is sampled, full, or empty (the fallback is h0 itself).
  for (int c = 0; c < t.L; ++c) {
    const Vector& p = prototypes[c].attributes;
    t.in1_class.row(c).head(t.d) = p;
    t.in1_class.row(c).tail(t.d) = cfg.mu * p;

    const int rep = g.rep_of_class[c];
    const std::vector<int> sampled = pick_neighbors(g, rep, cfg, step, 1, use_sampling);
    Vector agg;
    if (sampled.empty()) {
      agg = p;
    } else {
      agg = Vector::Zero(t.d);
      for (int u : sampled) agg += prototypes[g.class_of[u]].attributes;
      agg /= static_cast<double>(sampled.size());
    }
    t.in1_rep.row(c).head(t.d) = p;
    t.in1_rep.row(c).tail(t.d) = cfg.mu * agg;
  }
  for (int c = 0; c < t.L; ++c) {
    t.z1_class.row(c) =
        (params.W1 * t.in1_class.row(c).transpose() + params.b1).transpose();
    t.z1_rep.row(c) =
        (params.W1 * t.in1_rep.row(c).transpose() + params.b1).transpose();
    for (int j = 0; j < t.h; ++j) {
      t.h1_class(c, j) = lrelu(t.z1_class(c, j), cfg.leaky_slope);
      t.h1_rep(c, j) = lrelu(t.z1_rep(c, j), cfg.leaky_slope);
    }
  }

  // Layer 2, representatives only.
  for (int c = 0; c < t.L; ++c) {
    const int rep = g.rep_of_class[c];
    const std::vector<int> sampled = pick_neighbors(g, rep, cfg, step, 2, use_sampling);
    Vector agg;
    if (sampled.empty()) {
      agg = t.h1_rep.row(c).transpose();
    } else {
      agg = Vector::Zero(t.h);
      std::vector<int> rep_count(t.L, 0);
      for (int u : sampled) {
        if (g.node_kind[u] == NodeKind::Representative) {
          agg += t.h1_rep.row(g.class_of[u]).transpose();
          ++rep_count[g.class_of[u]];
        } else {
          agg += t.h1_class.row(g.class_of[u]).transpose();
          ++t.l2_regular[c];
        }
      }
      agg /= static_cast<double>(sampled.size());
      t.l2_total[c] = static_cast<int>(sampled.size());
      for (int o = 0; o < t.L; ++o) {
        if (rep_count[o] > 0) t.l2_reps[c].emplace_back(o, rep_count[o]);
      }
    }
    t.in2.row(c).head(t.h) = t.h1_rep.row(c);
    t.in2.row(c).tail(t.h) = cfg.mu * agg.transpose();
    t.z2.row(c) = (params.W2 * t.in2.row(c).transpose() + params.b2).transpose();
    for (int j = 0; j < t.n; ++j) t.h2(c, j) = lrelu(t.z2(c, j), cfg.leaky_slope);
  }
  return t;
}

struct ClassSums {
  std::vector<int> count;
  Matrix sum_x;  // L x n
  int total = 0;
};

ClassSums class_sums(const HeteroGraph& g, const std::vector<InstanceRecord>& dataset,
                     int n) {
  ClassSums s;
  s.count.assign(g.num_classes, 0);
  s.sum_x = Matrix::Zero(g.num_classes, n);
  for (const auto& rec : dataset) {
    if (rec.label < 0 || rec.label >= g.num_classes) {
      throw StateError("gnn: instance label " + std::to_string(rec.label) +
                       " has no representative embedding");
    }
    if (static_cast<int>(rec.feature.size()) != n) {
      throw DimensionError("gnn: instance feature length does not match embeddings");
    }
    ++s.count[rec.label];
    s.sum_x.row(rec.label) += rec.feature;
    ++s.total;
  }
  return s;
}

double data_loss(const Trace& t, const std::vector<InstanceRecord>& dataset) {
  if (dataset.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& rec : dataset) {
    if (rec.label < 0 || rec.label >= t.L) {
      throw StateError("gnn: instance label " + std::to_string(rec.label) +
                       " has no representative embedding");
    }
    acc += (t.h2.row(rec.label).transpose() - rec.feature).squaredNorm();
  }
  return acc / static_cast<double>(dataset.size());
}

double penalty(const GnnParams& params, double xi) {
  return xi * (params.W1.squaredNorm() + params.W2.squaredNorm());
}

struct GradResult {
  GnnParams grads;
  double loss = 0.0;
};

GradResult run_backward(const HeteroGraph& g, const std::vector<InstanceRecord>& dataset,
                        const std::vector<ClassPrototype>& prototypes,
                        const GnnParams& params, const TrainConfig& cfg,
                        std::uint64_t step) {
  const Trace t = run_forward(g, prototypes, params, cfg, step, true);
  const ClassSums sums = class_sums(g, dataset, t.n);

  GnnParams grads = GnnParams::zeros(t.d, t.h, t.n);
  Matrix dh1_class = Matrix::Zero(t.L, t.h);
  Matrix dh1_rep = Matrix::Zero(t.L, t.h);

  const auto W2a = params.W2.leftCols(t.h);
  const auto W2b = params.W2.rightCols(t.h);

  if (sums.total > 0) {
    const double inv_n = 1.0 / static_cast<double>(sums.total);
    for (int c = 0; c < t.L; ++c) {
      if (sums.count[c] == 0) continue;
      const Vector g2 = 2.0 * inv_n *
                        (sums.count[c] * t.h2.row(c).transpose() -
                         sums.sum_x.row(c).transpose());
      Vector dz2(t.n);
      for (int j = 0; j < t.n; ++j) {
        dz2(j) = g2(j) * lrelu_grad(t.z2(c, j), cfg.leaky_slope);
      }
      grads.W2 += dz2 * t.in2.row(c);
      grads.b2 += dz2;

      dh1_rep.row(c) += (W2a.transpose() * dz2).transpose();
      const Vector back_nbr = W2b.transpose() * dz2;
      if (t.l2_total[c] > 0) {
        const double scale = cfg.mu / static_cast<double>(t.l2_total[c]);
        if (t.l2_regular[c] > 0) {
          dh1_class.row(c) += (t.l2_regular[c] * scale) * back_nbr.transpose();
        }
        for (const auto& [other, count] : t.l2_reps[c]) {
          dh1_rep.row(other) += (count * scale) * back_nbr.transpose();
        }
      } else {
        dh1_rep.row(c) += cfg.mu * back_nbr.transpose();
      }
    }
  }

  for (int c = 0; c < t.L; ++c) {
    Vector dz1(t.h);
    for (int j = 0; j < t.h; ++j) {
      dz1(j) = dh1_class(c, j) * lrelu_grad(t.z1_class(c, j), cfg.leaky_slope);
    }
    grads.W1 += dz1 * t.in1_class.row(c);
    grads.b1 += dz1;
    for (int j = 0; j < t.h; ++j) {
      dz1(j) = dh1_rep(c, j) * lrelu_grad(t.z1_rep(c, j), cfg.leaky_slope);
    }
    grads.W1 += dz1 * t.in1_rep.row(c);
    grads.b1 += dz1;
  }

  grads.W1 += 2.0 * cfg.xi * params.W1;
  grads.W2 += 2.0 * cfg.xi * params.W2;

  GradResult out;
  out.loss = data_loss(t, dataset) + penalty(params, cfg.xi);
  out.grads = std::move(grads);
  return out;
}

void adam_update_matrix(Matrix& p, const Matrix& grad, Matrix& m, Matrix& v, double b1,
                        double b2, double eps, double lr, double c1, double c2) {
  m = b1 * m + (1.0 - b1) * grad;
  v = (b2 * v.array() + (1.0 - b2) * grad.array().square()).matrix();
  p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

void adam_update_vector(Vector& p, const Vector& grad, Vector& m, Vector& v, double b1,
                        double b2, double eps, double lr, double c1, double c2) {
  m = b1 * m + (1.0 - b1) * grad;
  v = (b2 * v.array() + (1.0 - b2) * grad.array().square()).matrix();
  p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

}  // namespace

bool GnnParams::all_finite() const {
  return W1.allFinite() && b1.allFinite() && W2.allFinite() && b2.allFinite();
}

GnnParams GnnParams::init(int attr_dim, int hidden_dim, int feature_dim,
                          std::uint64_t seed) {
  if (attr_dim < 1 || hidden_dim < 1 || feature_dim < 1) {
    throw DimensionError("gnn: all dimensions must be >= 1");
  }
  std::mt19937_64 rng(mix_seed({seed, 0x1217u}));
  auto fill = [&rng](Matrix& w, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
    }
  };
  GnnParams p = GnnParams::zeros(attr_dim, hidden_dim, feature_dim);
  fill(p.W1, 2 * attr_dim);
  fill(p.W2, 2 * hidden_dim);
  return p;
}

GnnParams GnnParams::zeros(int attr_dim, int hidden_dim, int feature_dim) {
  GnnParams p;
  p.W1 = Matrix::Zero(hidden_dim, 2 * attr_dim);
  p.b1 = Vector::Zero(hidden_dim);
  p.W2 = Matrix::Zero(feature_dim, 2 * hidden_dim);
  p.b2 = Vector::Zero(feature_dim);
  return p;
}

Vector aggregate_mean(const std::vector<Vector>& neighbor_vectors,
                      const Vector& self_vector) {
  if (neighbor_vectors.empty()) return self_vector;
  Vector out = Vector::Zero(self_vector.size());
  for (const Vector& v : neighbor_vectors) {
    if (v.size() != self_vector.size()) {
      throw DimensionError("aggregate_mean: vector lengths differ");
    }
    out += v;
  }
  return out / static_cast<double>(neighbor_vectors.size());
}

Vector embed_layer(const Vector& h_self, const Vector& h_nbr, const Matrix& W,
                   const Vector& b, double mu, double slope) {
  if (h_self.size() != h_nbr.size()) {
    throw DimensionError("embed_layer: self and neighbor lengths differ");
  }
  if (W.cols() != 2 * h_self.size()) {
    throw DimensionError("embed_layer: W must have twice the input columns");
  }
  if (b.size() != W.rows()) {
    throw DimensionError("embed_layer: bias length must equal W rows");
  }
  Vector cat(2 * h_self.size());
  cat.head(h_self.size()) = h_self;
  cat.tail(h_nbr.size()) = mu * h_nbr;
  return apply_lrelu(W * cat + b, slope);
}

NodeStates forward(const HeteroGraph& g, const std::vector<ClassPrototype>& prototypes,
                   const GnnParams& params, const TrainConfig& cfg, std::uint64_t step,
                   bool use_sampling) {
  const Trace t = run_forward(g, prototypes, params, cfg, step, use_sampling);
  NodeStates states;
  states.h0.resize(g.num_nodes, t.d);
  states.h1.resize(g.num_nodes, t.h);
  for (int v = 0; v < g.num_nodes; ++v) {
    const int c = g.class_of[v];
    states.h0.row(v) = prototypes[c].attributes.transpose();
    states.h1.row(v) = g.node_kind[v] == NodeKind::Representative
                           ? t.h1_rep.row(c)
                           : t.h1_class.row(c);
  }
  states.rep_h2 = t.h2;
  return states;
}

double loss(const NodeStates& states, const std::vector<InstanceRecord>& dataset,
            const HeteroGraph& g, const GnnParams& params, double xi) {
  if (states.rep_h2.rows() != g.num_classes) {
    throw StateError("gnn: representative embeddings missing for some classes");
  }
  double acc = 0.0;
  for (const auto& rec : dataset) {
    if (rec.label < 0 || rec.label >= g.num_classes) {
      throw StateError("gnn: instance label " + std::to_string(rec.label) +
                       " has no representative embedding");
    }
    if (rec.feature.size() != states.rep_h2.cols()) {
      throw DimensionError("gnn: feature length does not match embedding length");
    }
    acc += (states.rep_h2.row(rec.label).transpose() - rec.feature).squaredNorm();
  }
  const double mean =
      dataset.empty() ? 0.0 : acc / static_cast<double>(dataset.size());
  return mean + penalty(params, xi);
}

GnnParams gradients(const HeteroGraph& g, const std::vector<InstanceRecord>& dataset,
                    const std::vector<ClassPrototype>& prototypes,
                    const GnnParams& params, const TrainConfig& cfg,
                    std::uint64_t step) {
  return run_backward(g, dataset, prototypes, params, cfg, step).grads;
}

AdamState AdamState::zeros_like(const GnnParams& p) {
  AdamState s;
  s.mW1 = Matrix::Zero(p.W1.rows(), p.W1.cols());
  s.vW1 = s.mW1;
  s.mW2 = Matrix::Zero(p.W2.rows(), p.W2.cols());
  s.vW2 = s.mW2;
  s.mb1 = Vector::Zero(p.b1.size());
  s.vb1 = s.mb1;
  s.mb2 = Vector::Zero(p.b2.size());
  s.vb2 = s.mb2;
  return s;
}

void adam_step(GnnParams& params, const GnnParams& grads, AdamState& moments, int t,
               const TrainConfig& cfg) {
  if (t < 1) throw ConfigError("adam_step: step index must be >= 1");
  if (!grads.all_finite()) {
    throw NumericalError("adam_step: non-finite gradient, step aborted");
  }
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, t);
  adam_update_matrix(params.W1, grads.W1, moments.mW1, moments.vW1, cfg.adam_beta1,
                     cfg.adam_beta2, cfg.adam_eps, cfg.lr, c1, c2);
  adam_update_vector(params.b1, grads.b1, moments.mb1, moments.vb1, cfg.adam_beta1,
                     cfg.adam_beta2, cfg.adam_eps, cfg.lr, c1, c2);
  adam_update_matrix(params.W2, grads.W2, moments.mW2, moments.vW2, cfg.adam_beta1,
                     cfg.adam_beta2, cfg.adam_eps, cfg.lr, c1, c2);
  adam_update_vector(params.b2, grads.b2, moments.mb2, moments.vb2, cfg.adam_beta1,
                     cfg.adam_beta2, cfg.adam_eps, cfg.lr, c1, c2);
  if (!params.all_finite()) {
    throw NumericalError("adam_step: parameters became non-finite");
  }
}

TrainResult train(const HeteroGraph& g, const std::vector<InstanceRecord>& dataset,
                  const std::vector<ClassPrototype>& prototypes,
                  const TrainConfig& cfg) {
  check_train_config(cfg);
  if (prototypes.empty()) throw DimensionError("train: no prototypes");
  const int d = static_cast<int>(prototypes.front().attributes.size());
  if (dataset.empty()) throw DimensionError("train: empty dataset");
  const int n = static_cast<int>(dataset.front().feature.size());

  TrainResult result;
  result.params = GnnParams::init(d, cfg.hidden_dim, n, cfg.seed);
  AdamState moments = AdamState::zeros_like(result.params);
  result.loss_history.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    GradResult step = run_backward(g, dataset, prototypes, result.params, cfg,
                                   static_cast<std::uint64_t>(epoch));
    if (!std::isfinite(step.loss)) {
      throw NumericalError("train: non-finite loss at epoch " +
                           std::to_string(epoch));
    }
    result.loss_history.push_back(step.loss);
    adam_step(result.params, step.grads, moments, epoch + 1, cfg);
  }
  return result;
}

void save_checkpoint(std::ostream& os, const GnnParams& params) {
  const int d = params.attr_dim();
  const int h = params.hidden_dim();
  const int n = params.feature_dim();
  os << d << ' ' << h << ' ' << n << '\n';
  auto write_matrix = [&os](const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (j) os << ' ';
        os << format_double(m(i, j));
      }
      os << '\n';
    }
  };
  auto write_vector = [&os](const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i) os << ' ';
      os << format_double(v(i));
    }
    os << '\n';
  };
  write_matrix(params.W1);
  write_vector(params.b1);
  write_matrix(params.W2);
  write_vector(params.b2);
}

GnnParams load_checkpoint(std::istream& is) {
  int d = 0, h = 0, n = 0;
  if (!(is >> d >> h >> n) || d < 1 || h < 1 || n < 1) {
    throw ParseError("checkpoint: bad header, expected 'd h n'");
  }
  GnnParams p = GnnParams::zeros(d, h, n);
  auto read_all = [&is](auto& dest, const char* what) {
    for (Eigen::Index i = 0; i < dest.rows(); ++i) {
      for (Eigen::Index j = 0; j < dest.cols(); ++j) {
        double v = 0.0;
        if (!(is >> v)) {
          throw ParseError(std::string("checkpoint: truncated while reading ") + what);
        }
        dest(i, j) = v;
      }
    }
  };
  read_all(p.W1, "W1");
  read_all(p.b1, "b1");
  read_all(p.W2, "W2");
  read_all(p.b2, "b2");
  return p;
}

void save_loss_csv(std::ostream& os, const std::vector<double>& history) {
  os << "epoch,loss\n";
  for (std::size_t e = 0; e < history.size(); ++e) {
    os << e << ',' << format_double(history[e]) << '\n';
  }
}

}  // namespace hgkt::gnn
