#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hgkt/gnn.hpp"

// Inductive testing and evaluation. Prediction and evaluation are pure over
// an immutable EmbeddingTable; embedding distinct unseen classes is
// independent and never touches the stored graph, states, or parameters.
namespace hgkt::zsl {

using gnn::GnnParams;
using gnn::NodeStates;
using gnn::TrainConfig;
using graph::ClassPrototype;
using graph::GraphConfig;
using graph::HeteroGraph;
using graph::InstanceRecord;

/// A class absent from training; only its attribute vector is known.
struct UnseenClass {
  int class_id = 0;
  Vector attributes;
};

enum class Provenance { Seen, Unseen };

/// class id -> visual-space embedding, seen and unseen side by side.
struct EmbeddingTable {
  std::map<int, Vector> entries;
  std::map<int, Provenance> provenance;
};

enum class PredictMode { Generalized, ConventionalUnseenOnly, SeenOnly };

struct GzslMetrics {
  std::map<int, double> per_class_acc;
  double ts = 0.0;  // mean per-class accuracy, unseen classes
  double tr = 0.0;  // mean per-class accuracy, seen classes
  double H = 0.0;   // harmonic mean of tr and ts
  std::vector<std::string> warnings;
};

/// 2*tr*ts/(tr+ts), zero when the denominator vanishes.
double harmonic_mean(double tr, double ts);

/// The min(k, L) seen classes whose prototypes are nearest to the unseen
/// attributes (Euclidean; ties to the smaller class id), nearest first.
std::vector<int> unseen_neighbors(const UnseenClass& u,
                                  const std::vector<ClassPrototype>& prototypes,
                                  int k);

/// Embeds an unseen class as a virtual node attached to the representative
/// nodes of its k nearest seen classes: layer 1 aggregates their h0, layer 2
/// their stored h1. Stored graph and states are never modified.
Vector embed_unseen(const UnseenClass& u, const HeteroGraph& g,
                    const NodeStates& states,
                    const std::vector<ClassPrototype>& prototypes,
                    const GnnParams& params, const TrainConfig& cfg, int k);

/// Nearest-embedding classification in visual feature space; ties to the
/// smaller class id.
int predict(const Vector& x, const EmbeddingTable& table, PredictMode mode);

/// Per-class top-1 accuracy under Generalized prediction; ts/tr are
/// unweighted means over unseen/seen classes present in the test set.
GzslMetrics evaluate(const std::vector<InstanceRecord>& test_set,
                     const EmbeddingTable& table, const std::set<int>& seen_ids,
                     const std::set<int>& unseen_ids);

/// Mean per-class accuracy over unseen-class test instances with prediction
/// restricted to unseen embeddings (conventional ZSL protocol).
double conventional_accuracy(const std::vector<InstanceRecord>& test_set,
                             const EmbeddingTable& table,
                             const std::set<int>& unseen_ids);

/// Graph + training + embedding settings of one end-to-end run.
struct PipelineConfig {
  GraphConfig graph;
  TrainConfig train;
};

struct PipelineModel {
  HeteroGraph graph;
  GnnParams params;
  NodeStates states;  // full-neighborhood inference pass
  EmbeddingTable table;
  std::vector<double> loss_history;
};

/// Builds the seen-class graph, trains the network, and embeds both seen
/// representatives and every unseen class. Labels and class ids must be
/// dense: seen classes 0..L-1, unseen ids disjoint from them.
PipelineModel fit_pipeline(const std::vector<InstanceRecord>& train_set,
                           const std::vector<ClassPrototype>& seen_prototypes,
                           const std::vector<UnseenClass>& unseen,
                           const PipelineConfig& cfg);

struct AblationVariant {
  std::string name;
  bool intra_enabled = true;
  bool inter_enabled = true;
  graph::RepSelection rep_selection = graph::RepSelection::WassersteinBarycenter;
};

struct AblationRow {
  AblationVariant variant;
  GzslMetrics metrics;
  double conventional = 0.0;
};

/// Runs the identical pipeline once per variant with a shared seed; only
/// the graph switches differ between rows.
std::vector<AblationRow> run_ablation(const std::vector<InstanceRecord>& train_set,
                                      const std::vector<ClassPrototype>& seen_prototypes,
                                      const std::vector<UnseenClass>& unseen,
                                      const std::vector<InstanceRecord>& test_set,
                                      const PipelineConfig& base,
                                      const std::vector<AblationVariant>& grid);

/// `ts=.. tr=.. H=..` with percent values to one decimal.
std::string format_metrics_line(const GzslMetrics& m);

/// CSV `class_id,seen_or_unseen,accuracy` (full-precision fractions).
void write_per_class_csv(std::ostream& os, const GzslMetrics& m,
                         const std::set<int>& seen_ids);

/// CSV `class_id,provenance,e0..e{n-1}` for external visualization.
void write_embeddings_csv(std::ostream& os, const EmbeddingTable& table);

}  // namespace hgkt::zsl
