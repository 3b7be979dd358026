#include "hgkt/zsl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "hgkt/io_util.hpp"

namespace hgkt::zsl {

double harmonic_mean(double tr, double ts) {
  const double denom = tr + ts;
  if (denom <= 0.0) return 0.0;
  return 2.0 * tr * ts / denom;
}

std::vector<int> unseen_neighbors(const UnseenClass& u,
                                  const std::vector<ClassPrototype>& prototypes,
                                  int k) {
  if (k < 1) throw ConfigError("unseen_neighbors: k must be >= 1");
  if (prototypes.empty()) {
    throw DimensionError("unseen_neighbors: no seen prototypes");
  }
  std::vector<std::pair<double, int>> dists;
  dists.reserve(prototypes.size());
  for (const auto& p : prototypes) {
    if (p.attributes.size() != u.attributes.size()) {
      throw DimensionError("unseen_neighbors: attribute lengths differ");
    }
    dists.emplace_back((p.attributes - u.attributes).norm(), p.class_id);
  }
  std::stable_sort(dists.begin(), dists.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  });
  const int count = std::min<int>(k, static_cast<int>(dists.size()));
  std::vector<int> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(dists[i].second);
  return out;
}

Vector embed_unseen(const UnseenClass& u, const HeteroGraph& g,
                    const NodeStates& states,
                    const std::vector<ClassPrototype>& prototypes,
                    const GnnParams& params, const TrainConfig& cfg, int k) {
  if (static_cast<int>(u.attributes.size()) != params.attr_dim()) {
    throw DimensionError("embed_unseen: attribute length does not match W1");
  }
  const std::vector<int> nbr_classes = unseen_neighbors(u, prototypes, k);
  std::vector<Vector> nbr_h0, nbr_h1;
  nbr_h0.reserve(nbr_classes.size());
  nbr_h1.reserve(nbr_classes.size());
  for (int c : nbr_classes) {
    const int rep = g.rep_of_class[c];
    nbr_h0.push_back(states.h0.row(rep).transpose());
    nbr_h1.push_back(states.h1.row(rep).transpose());
  }
  const Vector h1_u =
      gnn::embed_layer(u.attributes, gnn::aggregate_mean(nbr_h0, u.attributes),
                       params.W1, params.b1, cfg.mu, cfg.leaky_slope);
  return gnn::embed_layer(h1_u, gnn::aggregate_mean(nbr_h1, h1_u), params.W2,
                          params.b2, cfg.mu, cfg.leaky_slope);
}

int predict(const Vector& x, const EmbeddingTable& table, PredictMode mode) {
  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& [cid, emb] : table.entries) {
    const Provenance prov = table.provenance.at(cid);
    if (mode == PredictMode::ConventionalUnseenOnly && prov != Provenance::Unseen) {
      continue;
    }
    if (mode == PredictMode::SeenOnly && prov != Provenance::Seen) continue;
    if (emb.size() != x.size()) {
      throw DimensionError("predict: embedding length does not match feature");
    }
    const double d = (emb - x).squaredNorm();
    if (d < best_dist) {  // map iterates in ascending id order, ties keep first
      best_dist = d;
      best = cid;
    }
  }
  if (best < 0) throw ModeError("predict: no embeddings for the requested mode");
  return best;
}

namespace {

std::map<int, double> per_class_accuracy(const std::vector<InstanceRecord>& test_set,
                                         const EmbeddingTable& table,
                                         PredictMode mode) {
  std::map<int, int> total, correct;
  for (const auto& rec : test_set) {
    ++total[rec.label];
    if (predict(rec.feature, table, mode) == rec.label) ++correct[rec.label];
  }
  std::map<int, double> acc;
  for (const auto& [cid, cnt] : total) {
    acc[cid] = static_cast<double>(correct[cid]) / static_cast<double>(cnt);
  }
  return acc;
}

}  // namespace

GzslMetrics evaluate(const std::vector<InstanceRecord>& test_set,
                     const EmbeddingTable& table, const std::set<int>& seen_ids,
                     const std::set<int>& unseen_ids) {
  for (const auto& rec : test_set) {
    if (!seen_ids.count(rec.label) && !unseen_ids.count(rec.label)) {
      throw ProtocolError("evaluate: test label " + std::to_string(rec.label) +
                          " is neither seen nor unseen");
    }
  }
  GzslMetrics m;
  m.per_class_acc = per_class_accuracy(test_set, table, PredictMode::Generalized);

  auto mean_over = [&m](const std::set<int>& ids, const char* which) {
    double sum = 0.0;
    int present = 0;
    for (int cid : ids) {
      auto it = m.per_class_acc.find(cid);
      if (it == m.per_class_acc.end()) {
        m.warnings.push_back(std::string(which) + " class " + std::to_string(cid) +
                             " has no test instances; excluded from its mean");
        continue;
      }
      sum += it->second;
      ++present;
    }
    return present > 0 ? sum / present : 0.0;
  };
  m.tr = mean_over(seen_ids, "seen");
  m.ts = mean_over(unseen_ids, "unseen");
  m.H = harmonic_mean(m.tr, m.ts);
  return m;
}

double conventional_accuracy(const std::vector<InstanceRecord>& test_set,
                             const EmbeddingTable& table,
                             const std::set<int>& unseen_ids) {
  std::vector<InstanceRecord> unseen_only;
  for (const auto& rec : test_set) {
    if (unseen_ids.count(rec.label)) unseen_only.push_back(rec);
  }
  const auto acc =
      per_class_accuracy(unseen_only, table, PredictMode::ConventionalUnseenOnly);
  if (acc.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [cid, a] : acc) sum += a;
  return sum / static_cast<double>(acc.size());
}

PipelineModel fit_pipeline(const std::vector<InstanceRecord>& train_set,
                           const std::vector<ClassPrototype>& seen_prototypes,
                           const std::vector<UnseenClass>& unseen,
                           const PipelineConfig& cfg) {
  PipelineModel model;
  model.graph = graph::build_graph(train_set, seen_prototypes, cfg.graph);

  gnn::TrainResult trained =
      gnn::train(model.graph, train_set, seen_prototypes, cfg.train);
  model.params = std::move(trained.params);
  model.loss_history = std::move(trained.loss_history);

  // Inference pass over full neighborhoods: deterministic and independent
  // of the training epoch count.
  model.states = gnn::forward(model.graph, seen_prototypes, model.params, cfg.train,
                              0, /*use_sampling=*/false);

  for (const auto& proto : seen_prototypes) {
    const int c = proto.class_id;
    model.table.entries[c] = model.states.rep_h2.row(c).transpose();
    model.table.provenance[c] = Provenance::Seen;
  }
  for (const auto& u : unseen) {
    if (model.table.entries.count(u.class_id)) {
      throw ProtocolError("fit_pipeline: unseen class id " +
                          std::to_string(u.class_id) + " collides with a seen class");
    }
    model.table.entries[u.class_id] =
        embed_unseen(u, model.graph, model.states, seen_prototypes, model.params,
                     cfg.train, cfg.graph.k);
    model.table.provenance[u.class_id] = Provenance::Unseen;
  }
  return model;
}

std::vector<AblationRow> run_ablation(const std::vector<InstanceRecord>& train_set,
                                      const std::vector<ClassPrototype>& seen_prototypes,
                                      const std::vector<UnseenClass>& unseen,
                                      const std::vector<InstanceRecord>& test_set,
                                      const PipelineConfig& base,
                                      const std::vector<AblationVariant>& grid) {
  std::set<int> seen_ids, unseen_ids;
  for (const auto& p : seen_prototypes) seen_ids.insert(p.class_id);
  for (const auto& u : unseen) unseen_ids.insert(u.class_id);

  std::vector<AblationRow> rows;
  rows.reserve(grid.size());
  for (const AblationVariant& variant : grid) {
    PipelineConfig cfg = base;
    cfg.graph.intra_enabled = variant.intra_enabled;
    cfg.graph.inter_enabled = variant.inter_enabled;
    cfg.graph.rep_selection = variant.rep_selection;
    const PipelineModel model =
        fit_pipeline(train_set, seen_prototypes, unseen, cfg);
    AblationRow row;
    row.variant = variant;
    row.metrics = evaluate(test_set, model.table, seen_ids, unseen_ids);
    row.conventional = conventional_accuracy(test_set, model.table, unseen_ids);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_metrics_line(const GzslMetrics& m) {
  return "ts=" + format_percent1(m.ts) + " tr=" + format_percent1(m.tr) +
         " H=" + format_percent1(m.H);
}

void write_per_class_csv(std::ostream& os, const GzslMetrics& m,
                         const std::set<int>& seen_ids) {
  os << "class_id,seen_or_unseen,accuracy\n";
  for (const auto& [cid, acc] : m.per_class_acc) {
    os << cid << ',' << (seen_ids.count(cid) ? "seen" : "unseen") << ','
       << format_double(acc) << '\n';
  }
}

void write_embeddings_csv(std::ostream& os, const EmbeddingTable& table) {
  bool header = false;
  for (const auto& [cid, emb] : table.entries) {
    if (!header) {
      os << "class_id,provenance";
      for (Eigen::Index j = 0; j < emb.size(); ++j) os << ",e" << j;
      os << '\n';
      header = true;
    }
    os << cid << ','
       << (table.provenance.at(cid) == Provenance::Seen ? "seen" : "unseen");
    for (Eigen::Index j = 0; j < emb.size(); ++j) os << ',' << format_double(emb(j));
    os << '\n';
  }
}

}  // namespace hgkt::zsl
