#pragma once

#include <string>
#include <vector>

#include "hgkt/dataset.hpp"

namespace hgkt::cli {

/// Every knob of a run, mirrored 1:1 by command-line flags. Precedence is
/// defaults < config file (key=value lines) < flags.
struct RunConfig {
  // inputs / outputs
  std::string features, attributes, split, test, checkpoint;
  std::string out_dir;  // falls back to $HGKT_OUT_DIR, then "hgkt-run"

  // graph construction
  int k = 2;
  double epsilon = 1e-5;
  int max_iter = 10000;
  double marginal_tol = 1e-6;
  std::string selection = "wasserstein";  // wasserstein | euclidean | random
  std::string inter_metric = "euclidean";
  bool no_intra = false;
  bool no_inter = false;

  // training
  int hidden_dim = 1600;
  double mu = 0.1;
  double xi = 0.001;
  double lr = 1e-4;
  double leaky_slope = 0.2;
  int epochs = 1000;
  int sample_size = 50;
  std::uint64_t seed = 0;

  std::string mode = "gzsl";  // gzsl | conventional | both

  // synthetic data (used when no --features is given)
  data::SynthSpec synth;

  zsl::PipelineConfig pipeline_config() const;
};

/// Dispatches a subcommand (synth, barycenter, build-graph, train, eval,
/// ablate, pipeline). `args` excludes the program name. Returns 0 on
/// success, 2 on usage errors, 1 on runtime failures.
int run_cli(const std::vector<std::string>& args);

}  // namespace hgkt::cli
