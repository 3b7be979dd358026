#include "hgkt/hgraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "hgkt/rng.hpp"

namespace hgkt::graph {
namespace {

void check_same_class(const std::vector<InstanceRecord>& instances,
                      const char* where) {
  if (instances.empty()) {
    throw EmptyClassError(std::string(where) + ": class has no instances");
  }
  for (const auto& rec : instances) {
    if (rec.label != instances.front().label) {
      throw SchemaError(std::string(where) + ": instances span multiple labels");
    }
    if (rec.feature.size() != instances.front().feature.size()) {
      throw DimensionError(std::string(where) + ": inconsistent feature length");
    }
  }
}

double euclidean(const Vector& a, const Vector& b) { return (a - b).norm(); }

}  // namespace

std::vector<int> HeteroGraph::neighborhood(int node) const {
  std::vector<int> out = intra_adj[node];
  if (node_kind[node] == NodeKind::Representative) {
    const auto& reps = rep_neighbors[class_of[node]];
    out.insert(out.end(), reps.begin(), reps.end());
  }
  return out;
}

ot::Histogram class_barycenter(const std::vector<InstanceRecord>& instances,
                               const GraphConfig& cfg) {
  check_same_class(instances, "class_barycenter");
  const int n = static_cast<int>(instances.front().feature.size());
  std::vector<ot::Histogram> hists;
  hists.reserve(instances.size());
  for (const auto& rec : instances) {
    hists.push_back(ot::normalize_to_simplex(rec.feature));
  }
  const auto weights = ot::BarycenterWeights::uniform(static_cast<int>(hists.size()));
  const auto cost = ot::default_cost_matrix(n);
  return ot::wasserstein_barycenter(hists, weights, cost, cfg.sinkhorn).barycenter;
}

int select_representative(const std::vector<InstanceRecord>& instances,
                          const ot::Histogram& bary, const GraphConfig& cfg) {
  check_same_class(instances, "select_representative");

  if (cfg.rep_selection == RepSelection::Random) {
    std::mt19937_64 rng(mix_seed({cfg.seed, 0x9e97u,
                                  static_cast<std::uint64_t>(instances.front().label)}));
    const auto pick = uniform_below(rng, instances.size());
    return instances[pick].id;
  }

  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  auto consider = [&](int id, double d) {
    if (d < best_dist || (d == best_dist && id < best)) {
      best_dist = d;
      best = id;
    }
  };

  if (cfg.rep_selection == RepSelection::EuclideanBarycenter) {
    Vector mean = Vector::Zero(instances.front().feature.size());
    for (const auto& rec : instances) mean += rec.feature;
    mean /= static_cast<double>(instances.size());
    for (const auto& rec : instances) consider(rec.id, euclidean(rec.feature, mean));
    return best;
  }

  const int n = static_cast<int>(instances.front().feature.size());
  const auto cost = ot::default_cost_matrix(n);
  for (const auto& rec : instances) {
    const auto h = ot::normalize_to_simplex(rec.feature);
    consider(rec.id, ot::sinkhorn_distance(h, bary, cost, cfg.sinkhorn).cost);
  }
  return best;
}

HeteroGraph build_graph(const std::vector<InstanceRecord>& dataset,
                        const std::vector<ClassPrototype>& prototypes,
                        const GraphConfig& cfg) {
  if (cfg.k < 1) throw ConfigError("build_graph: k must be >= 1");
  if (cfg.sample_size < 1) throw ConfigError("build_graph: sample_size must be >= 1");
  if (prototypes.empty()) throw SchemaError("build_graph: no class prototypes");
  const int L = static_cast<int>(prototypes.size());
  for (int c = 0; c < L; ++c) {
    if (prototypes[c].class_id != c) {
      throw SchemaError("build_graph: prototypes must carry dense class ids 0..L-1");
    }
  }
  const int N = static_cast<int>(dataset.size());
  std::vector<std::vector<int>> members(L);
  for (int i = 0; i < N; ++i) {
    const auto& rec = dataset[i];
    if (rec.id != i) {
      throw SchemaError("build_graph: instance ids must equal their position");
    }
    if (rec.label < 0 || rec.label >= L) {
      throw SchemaError("build_graph: label " + std::to_string(rec.label) +
                        " outside [0, " + std::to_string(L) + ")");
    }
    members[rec.label].push_back(i);
  }
  for (int c = 0; c < L; ++c) {
    if (members[c].empty()) {
      throw EmptyClassError("build_graph: class " + std::to_string(c) +
                            " has no instances");
    }
  }

  HeteroGraph g;
  g.num_nodes = N;
  g.num_classes = L;
  g.node_kind.assign(N, NodeKind::Regular);
  g.class_of.resize(N);
  g.intra_adj.assign(N, {});
  g.rep_of_class.assign(L, -1);
  g.rep_neighbors.assign(L, {});
  for (int i = 0; i < N; ++i) g.class_of[i] = dataset[i].label;

  // Per-class complete subgraphs.
  if (cfg.intra_enabled) {
    for (int c = 0; c < L; ++c) {
      for (int v : members[c]) {
        auto& adj = g.intra_adj[v];
        adj.reserve(members[c].size() - 1);
        for (int u : members[c]) {
          if (u != v) adj.push_back(u);
        }
      }
    }
  }

  // One representative per class, nearest to the class barycenter.
  for (int c = 0; c < L; ++c) {
    std::vector<InstanceRecord> cls;
    cls.reserve(members[c].size());
    for (int v : members[c]) cls.push_back(dataset[v]);
    const int rep =
        cfg.rep_selection == RepSelection::WassersteinBarycenter
            ? select_representative(cls, class_barycenter(cls, cfg), cfg)
            : select_representative(cls, ot::Histogram::uniform(1), cfg);
    g.rep_of_class[c] = rep;
    g.node_kind[rep] = NodeKind::Representative;
  }

  // Directed kNN links between representatives; ties to the smaller class id.
  if (cfg.inter_enabled) {
    if (L < 2) {
      g.inter_warning = true;
    } else {
      const int fanout = std::min(cfg.k, L - 1);
      for (int c = 0; c < L; ++c) {
        std::vector<std::pair<double, int>> dists;
        dists.reserve(L - 1);
        for (int o = 0; o < L; ++o) {
          if (o == c) continue;
          double d;
          if (cfg.inter_metric == InterMetric::Euclidean) {
            d = euclidean(dataset[g.rep_of_class[c]].feature,
                          dataset[g.rep_of_class[o]].feature);
          } else {
            const auto ha = ot::normalize_to_simplex(dataset[g.rep_of_class[c]].feature);
            const auto hb = ot::normalize_to_simplex(dataset[g.rep_of_class[o]].feature);
            const auto cost = ot::default_cost_matrix(ha.size());
            d = ot::sinkhorn_distance(ha, hb, cost, cfg.sinkhorn).cost;
          }
          dists.emplace_back(d, o);
        }
        std::stable_sort(dists.begin(), dists.end(),
                         [](const auto& a, const auto& b) {
                           if (a.first != b.first) return a.first < b.first;
                           return a.second < b.second;
                         });
        auto& nbrs = g.rep_neighbors[c];
        nbrs.reserve(fanout);
        for (int r = 0; r < fanout; ++r) {
          nbrs.push_back(g.rep_of_class[dists[r].second]);
        }
      }
    }
  }
  return g;
}

std::vector<int> sample_neighbors(const std::vector<int>& neighbors, int S,
                                  std::uint64_t seed) {
  if (S < 1) throw ConfigError("sample_neighbors: S must be >= 1");
  return sample_without_replacement(neighbors, S, seed);
}

void write_graph_dump(std::ostream& os, const HeteroGraph& g) {
  for (int v = 0; v < g.num_nodes; ++v) {
    os << v << ' '
       << (g.node_kind[v] == NodeKind::Representative ? "representative" : "regular")
       << ' ' << g.class_of[v];
    for (int u : g.neighborhood(v)) os << ' ' << u;
    os << '\n';
  }
}

}  // namespace hgkt::graph
