#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hgkt/zsl.hpp"

namespace hgkt::data {

using graph::ClassPrototype;
using graph::InstanceRecord;

enum class Split { Seen, Unseen };

/// Everything one experiment consumes. Class ids and labels are the
/// original (possibly sparse) ids from the input files; unseen classes
/// never appear in the training table.
struct DatasetBundle {
  std::vector<InstanceRecord> train;
  std::vector<ClassPrototype> prototypes;  // seen and unseen, by class id
  std::map<int, Split> split;
  std::vector<InstanceRecord> test;
};

struct DatasetPaths {
  std::filesystem::path features;    // header: id,label,f0..f{n-1}
  std::filesystem::path attributes;  // header: class,a0..a{d-1}
  std::filesystem::path split;       // lines:  class,seen|unseen
  std::filesystem::path test;        // same schema as features
};

/// Parses and validates the four files. Throws ParseError (with the line
/// number), SchemaError on dimension drift, ProtocolError when an unseen
/// class appears in the training table. An empty test path yields an empty
/// test table.
DatasetBundle load_dataset(const DatasetPaths& paths);

/// Parses a single instance table (header id,label,f0..).
std::vector<InstanceRecord> load_instances(const std::filesystem::path& path);

/// Writes the bundle back in the documented formats with lossless decimals.
void save_dataset(const DatasetBundle& bundle, const DatasetPaths& paths);

/// Desk-scale stand-in for benchmark feature files: Gaussian clusters whose
/// attribute vectors are a fixed seeded linear projection of the cluster
/// centers, so the attribute-to-feature relation is learnable by design.
struct SynthSpec {
  int num_classes = 10;
  int num_unseen = 2;
  int instances_per_class = 30;
  int feature_dim = 20;
  int attribute_dim = 10;
  double cluster_spread = 0.3;
  double attribute_noise = 0.05;
  std::uint64_t seed = 0;
};

DatasetBundle synth_generate(const SynthSpec& spec);

/// The pipeline-facing view: seen classes remapped to dense ids 0..L-1
/// (ascending original id), unseen classes to L..L+U-1, every record and
/// instance id renumbered accordingly.
struct DenseView {
  std::vector<InstanceRecord> train;
  std::vector<ClassPrototype> seen_prototypes;  // dense ids 0..L-1
  std::vector<zsl::UnseenClass> unseen;         // dense ids L..L+U-1
  std::vector<InstanceRecord> test;             // labels remapped
  std::vector<int> dense_to_original;
  std::map<int, int> original_to_dense;
  std::set<int> seen_dense, unseen_dense;
};

DenseView densify(const DatasetBundle& bundle);

}  // namespace hgkt::data
