#include <doctest.h>

#include <random>

#include "hgkt/dataset.hpp"
#include "hgkt/zsl.hpp"
#include "support/oracles.hpp"

using namespace hgkt;
using namespace hgkt::zsl;

namespace {

Vector vec(std::initializer_list<double> vals) {
  Vector v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v(i++) = x;
  return v;
}

ClassPrototype proto(int id, std::initializer_list<double> attrs) {
  ClassPrototype p;
  p.class_id = id;
  p.attributes = vec(attrs);
  return p;
}

EmbeddingTable toy_table() {
  EmbeddingTable t;
  t.entries[1] = vec({0, 0});
  t.provenance[1] = Provenance::Seen;
  t.entries[2] = vec({4, 0});
  t.provenance[2] = Provenance::Seen;
  t.entries[7] = vec({0, 3});
  t.provenance[7] = Provenance::Unseen;
  return t;
}

InstanceRecord test_inst(int id, int label, std::initializer_list<double> feat) {
  InstanceRecord rec;
  rec.id = id;
  rec.label = label;
  rec.feature = vec(feat);
  return rec;
}

PipelineConfig small_cfg(std::uint64_t seed, int hidden = 12, int epochs = 60) {
  PipelineConfig cfg;
  cfg.graph.sinkhorn.epsilon = 1e-3;
  cfg.graph.seed = seed;
  cfg.train.hidden_dim = hidden;
  cfg.train.epochs = epochs;
  cfg.train.lr = 1e-3;
  cfg.train.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("harmonic mean") {
  // reference GZSL row: ts=22.3, tr=36.5 print H=27.7 at one decimal
  const double h = harmonic_mean(36.5, 22.3);
  CHECK(h == doctest::Approx(27.685).epsilon(1e-3));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.1f", h);
  CHECK(std::string(buf) == "27.7");

  CHECK(harmonic_mean(0.42, 0.42) == doctest::Approx(0.42));
  CHECK(harmonic_mean(0.9, 0.0) == doctest::Approx(0.0));
  CHECK(harmonic_mean(0.0, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("unseen_neighbors orders seen classes by attribute distance") {
  const std::vector<ClassPrototype> protos = {proto(0, {0.0}), proto(1, {1.0}),
                                              proto(2, {4.0})};
  SUBCASE("exact match comes first") {
    UnseenClass u{9, vec({4.0})};
    CHECK(unseen_neighbors(u, protos, 1) == std::vector<int>{2});
  }
  SUBCASE("k beyond L returns all, sorted by distance") {
    UnseenClass u{9, vec({0.2})};
    CHECK(unseen_neighbors(u, protos, 10) == std::vector<int>{0, 1, 2});
  }
  SUBCASE("derived two-nearest example") {
    UnseenClass u{9, vec({1.9})};
    // distances: class0 1.9, class1 0.9, class2 2.1
    CHECK(unseen_neighbors(u, protos, 2) == std::vector<int>{1, 0});
  }
  SUBCASE("attribute dimension mismatch") {
    UnseenClass u{9, vec({1.0, 2.0})};
    CHECK_THROWS_AS(unseen_neighbors(u, protos, 1), DimensionError);
  }
  SUBCASE("ties resolve to the smaller class id") {
    UnseenClass u{9, vec({0.5})};
    CHECK(unseen_neighbors(u, protos, 1) == std::vector<int>{0});
  }
}

TEST_CASE("predict picks the nearest embedding with id tie-break") {
  const auto table = toy_table();
  CHECK(predict(vec({0, 3}), table, PredictMode::Generalized) == 7);
  CHECK(predict(vec({1, 0}), table, PredictMode::Generalized) == 1);
  CHECK(predict(vec({3.5, 0}), table, PredictMode::Generalized) == 2);
  CHECK(predict(vec({1, 0}), table, PredictMode::ConventionalUnseenOnly) == 7);
  CHECK(predict(vec({0, 3}), table, PredictMode::SeenOnly) == 1);

  EmbeddingTable dup;
  dup.entries[4] = vec({1, 1});
  dup.provenance[4] = Provenance::Seen;
  dup.entries[9] = vec({1, 1});
  dup.provenance[9] = Provenance::Seen;
  CHECK(predict(vec({1, 1}), dup, PredictMode::Generalized) == 4);
  CHECK_THROWS_AS(predict(vec({1, 1}), dup, PredictMode::ConventionalUnseenOnly),
                  ModeError);
}

TEST_CASE("evaluate computes per-class accuracies and the harmonic mean") {
  const auto table = toy_table();
  std::vector<InstanceRecord> test_set = {
      test_inst(0, 1, {0.1, 0}),  test_inst(1, 1, {3.9, 0}), test_inst(2, 2, {4, 0.1}),
      test_inst(3, 7, {0, 2.9}),  test_inst(4, 7, {0, 3.2}),
  };
  const std::set<int> seen = {1, 2};
  const std::set<int> unseen = {7};
  const auto m = evaluate(test_set, table, seen, unseen);
  CHECK(m.per_class_acc.at(1) == doctest::Approx(0.5));
  CHECK(m.per_class_acc.at(2) == doctest::Approx(1.0));
  CHECK(m.per_class_acc.at(7) == doctest::Approx(1.0));
  CHECK(m.tr == doctest::Approx(0.75));
  CHECK(m.ts == doctest::Approx(1.0));
  CHECK(m.H == doctest::Approx(harmonic_mean(0.75, 1.0)));
  CHECK(m.warnings.empty());

  SUBCASE("classes without test instances are excluded with a warning") {
    const std::set<int> seen_extra = {1, 2, 5};
    EmbeddingTable t2 = table;
    t2.entries[5] = vec({9, 9});
    t2.provenance[5] = Provenance::Seen;
    const auto m2 = evaluate(test_set, t2, seen_extra, unseen);
    CHECK(m2.tr == doctest::Approx(0.75));
    REQUIRE(m2.warnings.size() == 1);
    CHECK(m2.warnings[0].find("5") != std::string::npos);
  }
  SUBCASE("labels outside both splits are rejected") {
    auto bad = test_set;
    bad.push_back(test_inst(9, 12, {0, 0}));
    CHECK_THROWS_AS(evaluate(bad, table, seen, unseen), ProtocolError);
  }
  SUBCASE("harmonic mean never exceeds the arithmetic mean") {
    CHECK(m.H <= (m.tr + m.ts) / 2.0 + 1e-12);
    CHECK(m.H >= 0.0);
  }
}

TEST_CASE("conventional accuracy restricts instances and candidates to unseen") {
  const auto table = toy_table();
  std::vector<InstanceRecord> test_set = {
      test_inst(0, 1, {0, 0}),
      test_inst(1, 7, {0, 1}),   // nearest unseen embedding is 7 itself
      test_inst(2, 7, {9, 9}),   // nearest overall would be seen, but unseen-only still 7
  };
  CHECK(conventional_accuracy(test_set, table, {7}) == doctest::Approx(1.0));
}

TEST_CASE("prediction consistency between generalized and conventional modes") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  EmbeddingTable table;
  for (int c = 0; c < 10; ++c) {
    Vector e(4);
    for (int j = 0; j < 4; ++j) e(j) = unit(rng);
    table.entries[c] = e;
    table.provenance[c] = c < 6 ? Provenance::Seen : Provenance::Unseen;
  }
  for (int trial = 0; trial < 200; ++trial) {
    Vector x(4);
    for (int j = 0; j < 4; ++j) x(j) = unit(rng);
    const int gen = predict(x, table, PredictMode::Generalized);
    if (table.provenance.at(gen) == Provenance::Unseen) {
      CHECK(predict(x, table, PredictMode::ConventionalUnseenOnly) == gen);
    }
  }
}

TEST_CASE("consistent relabeling permutes predictions and preserves metrics") {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  EmbeddingTable table;
  std::vector<InstanceRecord> test_set;
  for (int c = 0; c < 6; ++c) {
    Vector e(3);
    for (int j = 0; j < 3; ++j) e(j) = unit(rng);
    table.entries[c] = e;
    table.provenance[c] = c < 4 ? Provenance::Seen : Provenance::Unseen;
    for (int i = 0; i < 4; ++i) {
      Vector x(3);
      for (int j = 0; j < 3; ++j) x(j) = unit(rng);
      InstanceRecord rec;
      rec.id = static_cast<int>(test_set.size());
      rec.label = c;
      rec.feature = x;
      test_set.push_back(rec);
    }
  }
  const std::set<int> seen = {0, 1, 2, 3};
  const std::set<int> unseen = {4, 5};
  const auto base = evaluate(test_set, table, seen, unseen);

  // relabel c -> 10 + ((c + 3) mod 6)
  auto relabel = [](int c) { return 10 + (c + 3) % 6; };
  EmbeddingTable rt;
  for (const auto& [c, e] : table.entries) {
    rt.entries[relabel(c)] = e;
    rt.provenance[relabel(c)] = table.provenance.at(c);
  }
  auto rtest = test_set;
  for (auto& rec : rtest) rec.label = relabel(rec.label);
  std::set<int> rseen, runseen;
  for (int c : seen) rseen.insert(relabel(c));
  for (int c : unseen) runseen.insert(relabel(c));
  const auto remapped = evaluate(rtest, rt, rseen, runseen);

  CHECK(remapped.tr == doctest::Approx(base.tr));
  CHECK(remapped.ts == doctest::Approx(base.ts));
  CHECK(remapped.H == doctest::Approx(base.H));
  for (const auto& rec : test_set) {
    const int p = predict(rec.feature, table, PredictMode::Generalized);
    const int rp = predict(rec.feature, rt, PredictMode::Generalized);
    CHECK(rp == relabel(p));
  }
}

TEST_CASE("embed_unseen composes the stored states without mutating them") {
  data::SynthSpec spec;
  spec.num_classes = 6;
  spec.num_unseen = 2;
  spec.instances_per_class = 4;
  spec.feature_dim = 8;
  spec.attribute_dim = 5;
  spec.seed = 3;
  const auto view = data::densify(data::synth_generate(spec));
  auto cfg = small_cfg(3, 10, 0);
  const auto g = graph::build_graph(view.train, view.seen_prototypes, cfg.graph);
  const auto params = gnn::GnnParams::init(5, 10, 8, 3);
  const auto states = gnn::forward(g, view.seen_prototypes, params, cfg.train, 0, false);

  const auto h0_copy = states.h0;
  const auto h1_copy = states.h1;
  const auto h2_copy = states.rep_h2;
  const auto emb = embed_unseen(view.unseen[0], g, states, view.seen_prototypes, params,
                                cfg.train, 2);
  CHECK(emb.size() == 8);
  CHECK(emb.allFinite());
  CHECK(states.h0 == h0_copy);
  CHECK(states.h1 == h1_copy);
  CHECK(states.rep_h2 == h2_copy);

  SUBCASE("zero weights give a zero embedding") {
    const auto zero = gnn::GnnParams::zeros(5, 10, 8);
    const auto zstates =
        gnn::forward(g, view.seen_prototypes, zero, cfg.train, 0, false);
    const auto zemb = embed_unseen(view.unseen[0], g, zstates, view.seen_prototypes,
                                   zero, cfg.train, 2);
    CHECK(zemb.isZero());
  }
  SUBCASE("attribute dimension mismatch is rejected") {
    UnseenClass bad{99, vec({1, 2})};
    CHECK_THROWS_AS(
        embed_unseen(bad, g, states, view.seen_prototypes, params, cfg.train, 2),
        DimensionError);
  }
}

TEST_CASE("fit_pipeline produces a complete embedding table") {
  data::SynthSpec spec;
  spec.num_classes = 6;
  spec.num_unseen = 2;
  spec.instances_per_class = 5;
  spec.feature_dim = 8;
  spec.attribute_dim = 5;
  spec.seed = 11;
  const auto view = data::densify(data::synth_generate(spec));
  const auto cfg = small_cfg(11);
  const auto model = fit_pipeline(view.train, view.seen_prototypes, view.unseen, cfg);
  CHECK(model.table.entries.size() == 6);
  for (int c = 0; c < 6; ++c) {
    CHECK(model.table.entries.count(c) == 1);
    CHECK(model.table.provenance.at(c) ==
          (c < 4 ? Provenance::Seen : Provenance::Unseen));
    CHECK(model.table.entries.at(c).size() == 8);
  }
  CHECK(model.loss_history.size() == 60);
  // seen entries equal the trained representative embeddings
  for (int c = 0; c < 4; ++c) {
    CHECK(model.table.entries.at(c) == model.states.rep_h2.row(c).transpose());
  }
}

TEST_CASE("untrained accuracy sits at the chance floor") {
  data::SynthSpec spec;
  spec.num_classes = 6;
  spec.num_unseen = 2;
  spec.instances_per_class = 5;
  spec.feature_dim = 8;
  spec.attribute_dim = 5;
  std::vector<double> overall;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    spec.seed = 100 + seed;
    const auto view = data::densify(data::synth_generate(spec));
    auto cfg = small_cfg(seed, 10, 0);  // untrained: zero epochs
    const auto model = fit_pipeline(view.train, view.seen_prototypes, view.unseen, cfg);
    const auto m = evaluate(view.test, model.table, view.seen_dense, view.unseen_dense);
    double mean = 0.0;
    for (const auto& [c, a] : m.per_class_acc) mean += a;
    overall.push_back(mean / m.per_class_acc.size());
  }
  double mean = 0.0;
  for (double a : overall) mean += a;
  mean /= overall.size();
  double var = 0.0;
  for (double a : overall) var += (a - mean) * (a - mean);
  const double sem = std::sqrt(var / (overall.size() - 1)) / std::sqrt(20.0);
  CHECK(std::abs(mean - 1.0 / 6.0) <= 3.0 * std::max(sem, 1e-3));
}

TEST_CASE("run_ablation mirrors direct pipeline runs") {
  data::SynthSpec spec;
  spec.num_classes = 6;
  spec.num_unseen = 2;
  spec.instances_per_class = 5;
  spec.feature_dim = 8;
  spec.attribute_dim = 5;
  spec.seed = 21;
  const auto view = data::densify(data::synth_generate(spec));
  const auto cfg = small_cfg(21);

  SUBCASE("degenerate grid equals a direct run") {
    AblationVariant v;
    v.name = "base";
    const auto rows = run_ablation(view.train, view.seen_prototypes, view.unseen,
                                   view.test, cfg, {v});
    REQUIRE(rows.size() == 1);
    const auto model = fit_pipeline(view.train, view.seen_prototypes, view.unseen, cfg);
    const auto direct = evaluate(view.test, model.table, view.seen_dense,
                                 view.unseen_dense);
    CHECK(rows[0].metrics.H == doctest::Approx(direct.H));
    CHECK(rows[0].metrics.ts == doctest::Approx(direct.ts));
  }
  SUBCASE("intra on/off pair differs only in the graph switch") {
    AblationVariant on;
    on.name = "intra-on";
    AblationVariant off;
    off.name = "intra-off";
    off.intra_enabled = false;
    const auto rows = run_ablation(view.train, view.seen_prototypes, view.unseen,
                                   view.test, cfg, {on, off});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].variant.intra_enabled);
    CHECK_FALSE(rows[1].variant.intra_enabled);
  }
}

TEST_CASE("metric and embedding exports") {
  GzslMetrics m;
  m.ts = 0.223;
  m.tr = 0.365;
  m.H = harmonic_mean(m.tr, m.ts);
  m.per_class_acc = {{0, 0.5}, {3, 1.0}};
  CHECK(format_metrics_line(m) == "ts=22.3 tr=36.5 H=27.7");

  std::ostringstream per_class;
  write_per_class_csv(per_class, m, {0});
  CHECK(per_class.str() == "class_id,seen_or_unseen,accuracy\n0,seen,0.5\n3,unseen,1\n");

  EmbeddingTable t;
  t.entries[2] = vec({1.5, -2.0});
  t.provenance[2] = Provenance::Unseen;
  std::ostringstream emb;
  write_embeddings_csv(emb, t);
  CHECK(emb.str() == "class_id,provenance,e0,e1\n2,unseen,1.5,-2\n");
}
