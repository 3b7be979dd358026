#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hgkt/ot.hpp"

namespace hgkt::graph {

/// One training or test item. Within a graph, id must equal the record's
/// position in the dataset vector and labels must be dense in [0, L).
struct InstanceRecord {
  int id = 0;
  Vector feature;
  int label = 0;
};

/// Per-class semantic attribute vector.
struct ClassPrototype {
  int class_id = 0;
  Vector attributes;
};

enum class NodeKind { Regular, Representative };

/// How the per-class representative node is chosen (ablation switch).
enum class RepSelection { WassersteinBarycenter, EuclideanBarycenter, Random };

/// Metric for the inter-class kNN links between representatives.
enum class InterMetric { Euclidean, Wasserstein };

struct GraphConfig {
  int k = 2;
  int sample_size = 50;
  ot::SinkhornConfig sinkhorn;
  RepSelection rep_selection = RepSelection::WassersteinBarycenter;
  bool intra_enabled = true;
  bool inter_enabled = true;
  InterMetric inter_metric = InterMetric::Euclidean;
  std::uint64_t seed = 0;  // consumed only by RepSelection::Random
};

/// Heterogeneous instance graph: per-class complete subgraphs plus directed
/// kNN links between one representative node per class. Immutable after
/// construction and safe to share across threads.
struct HeteroGraph {
  int num_nodes = 0;
  int num_classes = 0;
  std::vector<NodeKind> node_kind;              // per node
  std::vector<int> class_of;                    // per node
  std::vector<std::vector<int>> intra_adj;      // per node, same-class neighbors
  std::vector<int> rep_of_class;                // class -> node id
  std::vector<std::vector<int>> rep_neighbors;  // class -> rep node ids, kNN order
  bool inter_warning = false;  // inter requested with fewer than 2 classes

  /// Full neighborhood N(v): intra members, plus the kNN representative
  /// links when v is a representative.
  std::vector<int> neighborhood(int node) const;
};

/// Wasserstein barycenter of one class: features are simplex-normalized and
/// combined with uniform weights under the squared bin-index cost.
ot::Histogram class_barycenter(const std::vector<InstanceRecord>& instances,
                               const GraphConfig& cfg);

/// Node id of the class member closest to the barycenter. Distance is the
/// module's Wasserstein distance by default; EuclideanBarycenter compares
/// raw features against their arithmetic mean; Random draws uniformly with
/// the config seed. Ties resolve to the smaller node id.
int select_representative(const std::vector<InstanceRecord>& instances,
                          const ot::Histogram& bary, const GraphConfig& cfg);

HeteroGraph build_graph(const std::vector<InstanceRecord>& dataset,
                        const std::vector<ClassPrototype>& prototypes,
                        const GraphConfig& cfg);

/// Uniform sample without replacement of at most S ids, deterministic in
/// the seed; returns the input unchanged when it already fits.
std::vector<int> sample_neighbors(const std::vector<int>& neighbors, int S,
                                  std::uint64_t seed);

/// Adjacency dump, one line per node: `node_id kind class_id neighbor_ids...`
void write_graph_dump(std::ostream& os, const HeteroGraph& g);

}  // namespace hgkt::graph
