#include "hgkt/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hgkt/io_util.hpp"

namespace hgkt::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

graph::RepSelection parse_selection(const std::string& s) {
  if (s == "wasserstein") return graph::RepSelection::WassersteinBarycenter;
  if (s == "euclidean") return graph::RepSelection::EuclideanBarycenter;
  if (s == "random") return graph::RepSelection::Random;
  throw ConfigError("unknown --selection '" + s +
                    "' (expected wasserstein|euclidean|random)");
}

graph::InterMetric parse_inter_metric(const std::string& s) {
  if (s == "euclidean") return graph::InterMetric::Euclidean;
  if (s == "wasserstein") return graph::InterMetric::Wasserstein;
  throw ConfigError("unknown --inter-metric '" + s +
                    "' (expected euclidean|wasserstein)");
}

void check_mode(const std::string& mode) {
  if (mode != "gzsl" && mode != "conventional" && mode != "both") {
    throw ConfigError("unknown --mode '" + mode + "' (expected gzsl|conventional|both)");
  }
}

json config_json(const RunConfig& rc) {
  json j;
  j["features"] = rc.features;
  j["attributes"] = rc.attributes;
  j["split"] = rc.split;
  j["test"] = rc.test;
  j["checkpoint"] = rc.checkpoint;
  j["k"] = rc.k;
  j["epsilon"] = rc.epsilon;
  j["max_iter"] = rc.max_iter;
  j["marginal_tol"] = rc.marginal_tol;
  j["selection"] = rc.selection;
  j["inter_metric"] = rc.inter_metric;
  j["intra_enabled"] = !rc.no_intra;
  j["inter_enabled"] = !rc.no_inter;
  j["hidden_dim"] = rc.hidden_dim;
  j["mu"] = rc.mu;
  j["xi"] = rc.xi;
  j["lr"] = rc.lr;
  j["leaky_slope"] = rc.leaky_slope;
  j["epochs"] = rc.epochs;
  j["sample_size"] = rc.sample_size;
  j["seed"] = rc.seed;
  j["mode"] = rc.mode;
  j["synth"] = {{"classes", rc.synth.num_classes},
                {"unseen", rc.synth.num_unseen},
                {"per_class", rc.synth.instances_per_class},
                {"feature_dim", rc.synth.feature_dim},
                {"attr_dim", rc.synth.attribute_dim},
                {"spread", rc.synth.cluster_spread},
                {"attr_noise", rc.synth.attribute_noise}};
  return j;
}

/// Collects a run's artifacts and writes manifest.json last, with content
/// hashes of every input and output file.
class RunDir {
 public:
  RunDir(fs::path dir, std::string command, const RunConfig& rc)
      : dir_(std::move(dir)), command_(std::move(command)), config_(config_json(rc)) {
    fs::create_directories(dir_);
  }

  const fs::path& dir() const { return dir_; }

  void note_input(const fs::path& path) {
    inputs_.push_back({portable_name(path), hash_hex(hash_file(path))});
  }

  // For files written through save_dataset rather than write().
  void note_output_file(const fs::path& path) {
    outputs_.push_back({portable_name(path), hash_hex(hash_file(path))});
  }

  fs::path write(const std::string& name, std::string_view content) {
    const fs::path path = dir_ / name;
    write_text_file(path, content);
    outputs_.push_back({name, hash_hex(fnv1a(content))});
    return path;
  }

  void finish() {
    json manifest;
    manifest["command"] = command_;
    manifest["config"] = config_;
    manifest["inputs"] = json::array();
    for (const auto& [p, h] : inputs_) {
      manifest["inputs"].push_back({{"path", p}, {"fnv1a64", h}});
    }
    manifest["outputs"] = json::array();
    for (const auto& [p, h] : outputs_) {
      manifest["outputs"].push_back({{"path", p}, {"fnv1a64", h}});
    }
    write_text_file(dir_ / "manifest.json", manifest.dump(2) + "\n");
  }

 private:
  // Paths inside the run directory are recorded relative to it, so two runs
  // of the same configuration produce identical manifests.
  std::string portable_name(const fs::path& path) const {
    const auto rel = fs::relative(path, dir_);
    const bool inside = !rel.empty() && rel.native().rfind("..", 0) != 0;
    return inside ? rel.string() : path.string();
  }

  static std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
  }

  fs::path dir_;
  std::string command_;
  json config_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
};

fs::path resolve_out_dir(const RunConfig& rc) {
  if (!rc.out_dir.empty()) return rc.out_dir;
  if (const char* env = std::getenv("HGKT_OUT_DIR")) {
    if (*env) return env;
  }
  return "hgkt-run";
}

bool has_input_files(const RunConfig& rc) { return !rc.features.empty(); }

data::DatasetPaths input_paths(const RunConfig& rc) {
  if (rc.features.empty() || rc.attributes.empty() || rc.split.empty()) {
    throw ConfigError("need --features, --attributes and --split (or synth flags)");
  }
  data::DatasetPaths paths;
  paths.features = rc.features;
  paths.attributes = rc.attributes;
  paths.split = rc.split;
  paths.test = rc.test;
  return paths;
}

data::DatasetBundle obtain_bundle(const RunConfig& rc, RunDir* run) {
  if (has_input_files(rc)) {
    const auto paths = input_paths(rc);
    auto bundle = data::load_dataset(paths);
    if (run) {
      run->note_input(paths.features);
      run->note_input(paths.attributes);
      run->note_input(paths.split);
      if (!paths.test.empty()) run->note_input(paths.test);
    }
    return bundle;
  }
  data::SynthSpec spec = rc.synth;
  spec.seed = rc.seed;
  return data::synth_generate(spec);
}

std::string render_graph(const graph::HeteroGraph& g) {
  std::ostringstream os;
  graph::write_graph_dump(os, g);
  return os.str();
}

std::string render_checkpoint(const gnn::GnnParams& params) {
  std::ostringstream os;
  gnn::save_checkpoint(os, params);
  return os.str();
}

std::string render_loss(const std::vector<double>& history) {
  std::ostringstream os;
  gnn::save_loss_csv(os, history);
  return os.str();
}

struct Evaluation {
  zsl::GzslMetrics metrics;
  double conventional = 0.0;
  bool has_gzsl = false, has_conventional = false;
};

Evaluation evaluate_by_mode(const RunConfig& rc, const data::DenseView& view,
                            const zsl::EmbeddingTable& table) {
  check_mode(rc.mode);
  Evaluation ev;
  if (rc.mode == "gzsl" || rc.mode == "both") {
    ev.metrics = zsl::evaluate(view.test, table, view.seen_dense, view.unseen_dense);
    ev.has_gzsl = true;
  }
  if (rc.mode == "conventional" || rc.mode == "both") {
    if (view.unseen_dense.empty()) {
      throw ConfigError("conventional mode requires at least one unseen class");
    }
    ev.conventional = zsl::conventional_accuracy(view.test, table, view.unseen_dense);
    ev.has_conventional = true;
  }
  return ev;
}

// Per-class CSV and embeddings CSV are emitted with original class ids.
zsl::GzslMetrics to_original_ids(const zsl::GzslMetrics& m,
                                 const data::DenseView& view) {
  zsl::GzslMetrics out = m;
  out.per_class_acc.clear();
  for (const auto& [dense, acc] : m.per_class_acc) {
    out.per_class_acc[view.dense_to_original[dense]] = acc;
  }
  return out;
}

zsl::EmbeddingTable to_original_ids(const zsl::EmbeddingTable& t,
                                    const data::DenseView& view) {
  zsl::EmbeddingTable out;
  for (const auto& [dense, emb] : t.entries) {
    const int orig = view.dense_to_original[dense];
    out.entries[orig] = emb;
    out.provenance[orig] = t.provenance.at(dense);
  }
  return out;
}

void write_evaluation(RunDir& run, const RunConfig& rc, const data::DenseView& view,
                      const zsl::EmbeddingTable& table, const Evaluation& ev) {
  std::set<int> seen_orig;
  for (int dense : view.seen_dense) seen_orig.insert(view.dense_to_original[dense]);
  if (ev.has_gzsl) {
    const auto metrics = to_original_ids(ev.metrics, view);
    run.write("metrics.txt", zsl::format_metrics_line(metrics) + "\n");
    std::ostringstream per_class;
    zsl::write_per_class_csv(per_class, metrics, seen_orig);
    run.write("per_class.csv", per_class.str());
    std::cout << zsl::format_metrics_line(metrics) << '\n';
    for (const auto& w : metrics.warnings) std::cerr << "warning: " << w << '\n';
  }
  if (ev.has_conventional) {
    run.write("conventional.txt", "acc=" + format_percent1(ev.conventional) + "\n");
    std::cout << "conventional acc=" << format_percent1(ev.conventional) << '\n';
  }
  std::ostringstream emb;
  zsl::write_embeddings_csv(emb, to_original_ids(table, view));
  run.write("embeddings.csv", emb.str());
  (void)rc;
}

void save_bundle_into(RunDir& run, const data::DatasetBundle& bundle) {
  data::DatasetPaths paths;
  paths.features = run.dir() / "features.csv";
  paths.attributes = run.dir() / "attributes.csv";
  paths.split = run.dir() / "split.csv";
  paths.test = run.dir() / "test.csv";
  data::save_dataset(bundle, paths);
  // Re-read for the manifest so hashes cover the bytes on disk.
  for (const auto& p : {paths.features, paths.attributes, paths.split, paths.test}) {
    run.note_output_file(p);
  }
}

int cmd_synth(const RunConfig& rc) {
  data::SynthSpec spec = rc.synth;
  spec.seed = rc.seed;
  const auto bundle = data::synth_generate(spec);
  RunDir run(resolve_out_dir(rc), "synth", rc);
  save_bundle_into(run, bundle);
  run.finish();
  std::cout << "wrote synthetic bundle to " << run.dir().string() << '\n';
  return 0;
}

int cmd_barycenter(const RunConfig& rc, int class_id) {
  if (rc.features.empty()) throw ConfigError("barycenter requires --features");
  const auto instances = data::load_instances(rc.features);

  std::map<int, std::vector<graph::InstanceRecord>> by_class;
  for (const auto& rec : instances) by_class[rec.label].push_back(rec);
  if (by_class.empty()) throw SchemaError("barycenter: feature table is empty");

  graph::GraphConfig gcfg = rc.pipeline_config().graph;
  auto print_one = [&](const std::vector<graph::InstanceRecord>& cls) {
    const auto bary = graph::class_barycenter(cls, gcfg);
    for (Eigen::Index j = 0; j < bary.mass.size(); ++j) {
      if (j) std::cout << ',';
      std::cout << format_double(bary.mass(j));
    }
    std::cout << '\n';
  };
  if (class_id >= 0) {
    auto it = by_class.find(class_id);
    if (it == by_class.end()) {
      throw EmptyClassError("barycenter: class " + std::to_string(class_id) +
                            " has no instances in " + rc.features);
    }
    print_one(it->second);
  } else {
    for (const auto& [cid, cls] : by_class) print_one(cls);
  }
  return 0;
}

int cmd_build_graph(const RunConfig& rc) {
  RunDir run(resolve_out_dir(rc), "build-graph", rc);
  const auto bundle = obtain_bundle(rc, &run);
  const auto view = data::densify(bundle);
  const auto g = graph::build_graph(view.train, view.seen_prototypes,
                                    rc.pipeline_config().graph);
  if (g.inter_warning) {
    std::cerr << "warning: inter-class links requested with fewer than 2 classes\n";
  }
  run.write("graph.txt", render_graph(g));
  run.finish();
  std::cout << "wrote graph dump to " << (run.dir() / "graph.txt").string() << '\n';
  return 0;
}

int cmd_train(const RunConfig& rc) {
  RunDir run(resolve_out_dir(rc), "train", rc);
  const auto bundle = obtain_bundle(rc, &run);
  const auto view = data::densify(bundle);
  const auto cfg = rc.pipeline_config();
  const auto g = graph::build_graph(view.train, view.seen_prototypes, cfg.graph);
  const auto result = gnn::train(g, view.train, view.seen_prototypes, cfg.train);
  run.write("graph.txt", render_graph(g));
  run.write("checkpoint.txt", render_checkpoint(result.params));
  run.write("loss.csv", render_loss(result.loss_history));
  run.finish();
  if (!result.loss_history.empty()) {
    std::cout << "final loss " << format_double(result.loss_history.back()) << " after "
              << result.loss_history.size() << " epochs\n";
  }
  std::cout << "wrote checkpoint to " << (run.dir() / "checkpoint.txt").string() << '\n';
  return 0;
}

int cmd_eval(const RunConfig& rc) {
  if (rc.checkpoint.empty()) throw ConfigError("eval requires --checkpoint");
  if (rc.test.empty()) throw ConfigError("eval requires --test");
  RunDir run(resolve_out_dir(rc), "eval", rc);
  const std::string checkpoint_text = read_text_file(rc.checkpoint);
  run.note_input(rc.checkpoint);
  std::istringstream ck(checkpoint_text);
  const auto params = gnn::load_checkpoint(ck);

  const auto bundle = obtain_bundle(rc, &run);
  const auto view = data::densify(bundle);
  auto cfg = rc.pipeline_config();
  cfg.train.hidden_dim = params.hidden_dim();

  const auto g = graph::build_graph(view.train, view.seen_prototypes, cfg.graph);
  const auto states = gnn::forward(g, view.seen_prototypes, params, cfg.train, 0,
                                   /*use_sampling=*/false);
  zsl::EmbeddingTable table;
  for (const auto& proto : view.seen_prototypes) {
    table.entries[proto.class_id] = states.rep_h2.row(proto.class_id).transpose();
    table.provenance[proto.class_id] = zsl::Provenance::Seen;
  }
  for (const auto& u : view.unseen) {
    table.entries[u.class_id] = zsl::embed_unseen(u, g, states, view.seen_prototypes,
                                                  params, cfg.train, cfg.graph.k);
    table.provenance[u.class_id] = zsl::Provenance::Unseen;
  }
  const auto ev = evaluate_by_mode(rc, view, table);
  write_evaluation(run, rc, view, table, ev);
  run.finish();
  return 0;
}

int cmd_pipeline(const RunConfig& rc) {
  if (has_input_files(rc) && rc.test.empty()) {
    throw ConfigError("pipeline requires --test when loading dataset files");
  }
  RunDir run(resolve_out_dir(rc), "pipeline", rc);
  const auto bundle = obtain_bundle(rc, &run);
  if (!has_input_files(rc)) save_bundle_into(run, bundle);
  const auto view = data::densify(bundle);
  const auto cfg = rc.pipeline_config();
  const auto model = zsl::fit_pipeline(view.train, view.seen_prototypes, view.unseen, cfg);
  run.write("graph.txt", render_graph(model.graph));
  run.write("checkpoint.txt", render_checkpoint(model.params));
  run.write("loss.csv", render_loss(model.loss_history));
  const auto ev = evaluate_by_mode(rc, view, model.table);
  write_evaluation(run, rc, view, model.table, ev);
  run.finish();
  return 0;
}

int cmd_ablate(const RunConfig& rc, const std::vector<std::string>& vary) {
  RunDir run(resolve_out_dir(rc), "ablate", rc);
  const auto bundle = obtain_bundle(rc, &run);
  const auto view = data::densify(bundle);
  const auto base = rc.pipeline_config();

  bool vary_intra = false, vary_inter = false, vary_selection = false;
  for (const auto& v : vary) {
    if (v == "intra") {
      vary_intra = true;
    } else if (v == "inter") {
      vary_inter = true;
    } else if (v == "selection") {
      vary_selection = true;
    } else {
      throw ConfigError("unknown --vary axis '" + v +
                        "' (expected intra|inter|selection)");
    }
  }
  std::vector<zsl::AblationVariant> grid;
  const std::vector<bool> intra_axis =
      vary_intra ? std::vector<bool>{true, false} : std::vector<bool>{!rc.no_intra};
  const std::vector<bool> inter_axis =
      vary_inter ? std::vector<bool>{true, false} : std::vector<bool>{!rc.no_inter};
  const std::vector<graph::RepSelection> sel_axis =
      vary_selection
          ? std::vector<graph::RepSelection>{graph::RepSelection::WassersteinBarycenter,
                                             graph::RepSelection::EuclideanBarycenter,
                                             graph::RepSelection::Random}
          : std::vector<graph::RepSelection>{parse_selection(rc.selection)};
  auto sel_name = [](graph::RepSelection s) {
    switch (s) {
      case graph::RepSelection::WassersteinBarycenter: return "wasserstein";
      case graph::RepSelection::EuclideanBarycenter: return "euclidean";
      default: return "random";
    }
  };
  for (bool intra : intra_axis) {
    for (bool inter : inter_axis) {
      for (auto sel : sel_axis) {
        zsl::AblationVariant v;
        v.intra_enabled = intra;
        v.inter_enabled = inter;
        v.rep_selection = sel;
        v.name = std::string("intra=") + (intra ? "on" : "off") +
                 ",inter=" + (inter ? "on" : "off") + ",sel=" + sel_name(sel);
        grid.push_back(std::move(v));
      }
    }
  }

  const auto rows = zsl::run_ablation(view.train, view.seen_prototypes, view.unseen,
                                      view.test, base, grid);
  std::string csv = "variant,ts,tr,H,conventional\n";
  for (const auto& row : rows) {
    csv += row.variant.name + ',' + format_double(row.metrics.ts) + ',' +
           format_double(row.metrics.tr) + ',' + format_double(row.metrics.H) + ',' +
           format_double(row.conventional) + '\n';
    std::cout << row.variant.name << "  ts=" << format_percent1(row.metrics.ts)
              << " tr=" << format_percent1(row.metrics.tr)
              << " H=" << format_percent1(row.metrics.H) << '\n';
  }
  run.write("ablation.csv", csv);
  run.finish();
  return 0;
}

}  // namespace

zsl::PipelineConfig RunConfig::pipeline_config() const {
  zsl::PipelineConfig cfg;
  cfg.graph.k = k;
  cfg.graph.sample_size = sample_size;
  cfg.graph.sinkhorn.epsilon = epsilon;
  cfg.graph.sinkhorn.max_iter = max_iter;
  cfg.graph.sinkhorn.marginal_tol = marginal_tol;
  cfg.graph.rep_selection = parse_selection(selection);
  cfg.graph.inter_metric = parse_inter_metric(inter_metric);
  cfg.graph.intra_enabled = !no_intra;
  cfg.graph.inter_enabled = !no_inter;
  cfg.graph.seed = seed;
  cfg.train.mu = mu;
  cfg.train.xi = xi;
  cfg.train.lr = lr;
  cfg.train.leaky_slope = leaky_slope;
  cfg.train.hidden_dim = hidden_dim;
  cfg.train.epochs = epochs;
  cfg.train.sample_size = sample_size;
  cfg.train.seed = seed;
  return cfg;
}

int run_cli(const std::vector<std::string>& args) {
  RunConfig rc;
  int barycenter_class = -1;
  std::vector<std::string> vary;

  CLI::App app{"Heterogeneous graph-based knowledge transfer for GZSL"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Config file with key=value lines");

  app.add_option("--features", rc.features, "Training feature CSV (id,label,f0..)")
      ->configurable(true);
  app.add_option("--attributes", rc.attributes, "Attribute CSV (class,a0..)");
  app.add_option("--split", rc.split, "Split file (class,seen|unseen)");
  app.add_option("--test", rc.test, "Test feature CSV (id,label,f0..)");
  app.add_option("--checkpoint", rc.checkpoint, "Checkpoint file for eval");
  app.add_option("--out", rc.out_dir, "Run directory (default $HGKT_OUT_DIR)");
  app.add_option("--k", rc.k, "kNN fan-out for graph and unseen classes");
  app.add_option("--epsilon", rc.epsilon, "Sinkhorn entropic regularization");
  app.add_option("--max-iter", rc.max_iter, "Sinkhorn iteration budget");
  app.add_option("--marginal-tol", rc.marginal_tol, "Sinkhorn marginal tolerance");
  app.add_option("--selection", rc.selection,
                 "Representative selection: wasserstein|euclidean|random");
  app.add_option("--inter-metric", rc.inter_metric,
                 "Inter-class kNN metric: euclidean|wasserstein");
  app.add_flag("--no-intra", rc.no_intra, "Disable intra-class complete subgraphs");
  app.add_flag("--no-inter", rc.no_inter, "Disable inter-class kNN links");
  app.add_option("--hidden-dim", rc.hidden_dim, "Hidden layer width");
  app.add_option("--mu", rc.mu, "Neighbor-term balance");
  app.add_option("--xi", rc.xi, "Weight penalty (weight decay)");
  app.add_option("--lr", rc.lr, "Adam learning rate");
  app.add_option("--leaky-slope", rc.leaky_slope, "LeakyReLU negative slope");
  app.add_option("--epochs", rc.epochs, "Training epochs");
  app.add_option("--sample-size", rc.sample_size, "Neighbor sampling cap S");
  app.add_option("--seed", rc.seed, "Master seed");
  app.add_option("--mode", rc.mode, "Evaluation mode: gzsl|conventional|both");
  app.add_option("--classes", rc.synth.num_classes, "Synthetic: total classes");
  app.add_option("--unseen", rc.synth.num_unseen, "Synthetic: unseen classes");
  app.add_option("--per-class", rc.synth.instances_per_class,
                 "Synthetic: instances per class");
  app.add_option("--feature-dim", rc.synth.feature_dim, "Synthetic: feature dim");
  app.add_option("--attr-dim", rc.synth.attribute_dim, "Synthetic: attribute dim");
  app.add_option("--spread", rc.synth.cluster_spread, "Synthetic: cluster spread");
  app.add_option("--attr-noise", rc.synth.attribute_noise,
                 "Synthetic: attribute noise");

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset bundle");
  auto* barycenter =
      app.add_subcommand("barycenter", "Compute and print class barycenters");
  barycenter->add_option("--class-id", barycenter_class,
                         "Class to compute (default: all)");
  auto* build_graph = app.add_subcommand("build-graph", "Emit the adjacency dump");
  auto* train = app.add_subcommand("train", "Train and write a checkpoint");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  auto* ablate = app.add_subcommand("ablate", "Run an ablation grid");
  ablate->add_option("--vary", vary, "Axes to vary: intra, inter, selection");
  auto* pipeline =
      app.add_subcommand("pipeline", "Build graph, train, and evaluate in one run");
  for (auto* sub : {synth, barycenter, build_graph, train, eval, ablate, pipeline}) {
    sub->fallthrough();
  }

  std::vector<const char*> argv;
  argv.push_back("hgkt");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(rc);
    if (barycenter->parsed()) return cmd_barycenter(rc, barycenter_class);
    if (build_graph->parsed()) return cmd_build_graph(rc);
    if (train->parsed()) return cmd_train(rc);
    if (eval->parsed()) return cmd_eval(rc);
    if (ablate->parsed()) return cmd_ablate(rc, vary);
    if (pipeline->parsed()) return cmd_pipeline(rc);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace hgkt::cli
