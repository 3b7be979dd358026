#include <doctest.h>

#include <filesystem>

#include "hgkt/dataset.hpp"
#include "hgkt/io_util.hpp"

using namespace hgkt;
using namespace hgkt::data;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = fs::path(HGKT_TEST_DIR) / "fixtures";

DatasetPaths fixture_paths() {
  DatasetPaths p;
  p.features = kFixtures / "features.csv";
  p.attributes = kFixtures / "attributes.csv";
  p.split = kFixtures / "split.csv";
  p.test = kFixtures / "test.csv";
  return p;
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hgkt_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("load_dataset parses the toy fixture") {
  const auto bundle = load_dataset(fixture_paths());
  CHECK(bundle.train.size() == 4);
  CHECK(bundle.prototypes.size() == 3);
  CHECK(bundle.test.size() == 3);
  CHECK(bundle.split.at(3) == Split::Seen);
  CHECK(bundle.split.at(9) == Split::Unseen);
  CHECK(bundle.train[1].feature(2) == doctest::Approx(0.1));
  CHECK(bundle.prototypes[2].class_id == 9);
}

TEST_CASE("load_dataset rejects each malformed-input class") {
  auto paths = fixture_paths();
  SUBCASE("non-numeric field names the line") {
    paths.features = kFixtures / "features_bad_number.csv";
    try {
      load_dataset(paths);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
  }
  SUBCASE("row width drift is a schema error") {
    paths.features = kFixtures / "features_width_drift.csv";
    CHECK_THROWS_AS(load_dataset(paths), SchemaError);
  }
  SUBCASE("attribute width drift is a schema error") {
    paths.attributes = kFixtures / "attributes_width.csv";
    CHECK_THROWS_AS(load_dataset(paths), SchemaError);
  }
  SUBCASE("bad split token is a parse error") {
    paths.split = kFixtures / "split_bad_token.csv";
    CHECK_THROWS_AS(load_dataset(paths), ParseError);
  }
  SUBCASE("unseen label in the training table violates the protocol") {
    paths.features = kFixtures / "features_unseen_leak.csv";
    CHECK_THROWS_AS(load_dataset(paths), ProtocolError);
  }
}

TEST_CASE("save then load reproduces the bundle exactly") {
  const auto bundle = load_dataset(fixture_paths());
  const auto dir = temp_dir("roundtrip");
  DatasetPaths out;
  out.features = dir / "features.csv";
  out.attributes = dir / "attributes.csv";
  out.split = dir / "split.csv";
  out.test = dir / "test.csv";
  save_dataset(bundle, out);
  const auto again = load_dataset(out);
  REQUIRE(again.train.size() == bundle.train.size());
  for (std::size_t i = 0; i < bundle.train.size(); ++i) {
    CHECK(again.train[i].id == bundle.train[i].id);
    CHECK(again.train[i].label == bundle.train[i].label);
    CHECK(again.train[i].feature == bundle.train[i].feature);
  }
  REQUIRE(again.prototypes.size() == bundle.prototypes.size());
  for (std::size_t i = 0; i < bundle.prototypes.size(); ++i) {
    CHECK(again.prototypes[i].attributes == bundle.prototypes[i].attributes);
  }
  CHECK(again.split == bundle.split);

  // and the files themselves are stable across a second save
  const auto dir2 = temp_dir("roundtrip2");
  DatasetPaths out2;
  out2.features = dir2 / "features.csv";
  out2.attributes = dir2 / "attributes.csv";
  out2.split = dir2 / "split.csv";
  out2.test = dir2 / "test.csv";
  save_dataset(again, out2);
  CHECK(read_text_file(out.features) == read_text_file(out2.features));
  CHECK(read_text_file(out.attributes) == read_text_file(out2.attributes));
}

TEST_CASE("synthetic generator counts and splits") {
  SynthSpec spec;
  spec.num_classes = 10;
  spec.num_unseen = 2;
  spec.instances_per_class = 30;
  spec.feature_dim = 20;
  spec.attribute_dim = 10;
  spec.seed = 5;
  const auto bundle = synth_generate(spec);
  CHECK(bundle.train.size() == 8 * 30);
  CHECK(bundle.prototypes.size() == 10);
  std::set<int> test_classes;
  for (const auto& rec : bundle.test) test_classes.insert(rec.label);
  CHECK(test_classes.size() == 10);
  int unseen_count = 0;
  for (const auto& [cid, s] : bundle.split) unseen_count += s == Split::Unseen;
  CHECK(unseen_count == 2);
  for (const auto& rec : bundle.train) {
    CHECK(bundle.split.at(rec.label) == Split::Seen);
  }
}

TEST_CASE("noiseless synthetic data collapses to its class centers") {
  SynthSpec spec;
  spec.num_classes = 4;
  spec.num_unseen = 1;
  spec.instances_per_class = 3;
  spec.feature_dim = 5;
  spec.attribute_dim = 3;
  spec.cluster_spread = 0.0;
  spec.attribute_noise = 0.0;
  spec.seed = 9;
  const auto bundle = synth_generate(spec);
  // all instances of one class share the identical center
  for (const auto& a : bundle.train) {
    for (const auto& b : bundle.train) {
      if (a.label == b.label) CHECK(a.feature == b.feature);
    }
  }
  // test instances of a seen class equal the training center exactly
  for (const auto& t : bundle.test) {
    for (const auto& tr : bundle.train) {
      if (t.label == tr.label) CHECK(t.feature == tr.feature);
    }
  }
}

TEST_CASE("synthetic generation is deterministic in the seed") {
  SynthSpec spec;
  spec.seed = 77;
  const auto a = synth_generate(spec);
  const auto b = synth_generate(spec);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].feature == b.train[i].feature);
  }
  for (std::size_t i = 0; i < a.prototypes.size(); ++i) {
    CHECK(a.prototypes[i].attributes == b.prototypes[i].attributes);
  }
  spec.seed = 78;
  const auto c = synth_generate(spec);
  CHECK(a.train[0].feature != c.train[0].feature);
}

TEST_CASE("synthetic spec violations are config errors") {
  SynthSpec spec;
  spec.num_unseen = spec.num_classes;
  CHECK_THROWS_AS(synth_generate(spec), ConfigError);
  spec = SynthSpec{};
  spec.feature_dim = 1;
  CHECK_THROWS_AS(synth_generate(spec), ConfigError);
  spec = SynthSpec{};
  spec.cluster_spread = -1.0;
  CHECK_THROWS_AS(synth_generate(spec), ConfigError);
}

TEST_CASE("densify remaps sparse ids onto dense seen-then-unseen ranges") {
  const auto bundle = load_dataset(fixture_paths());
  const auto view = densify(bundle);
  CHECK(view.dense_to_original == std::vector<int>{3, 7, 9});
  CHECK(view.original_to_dense.at(9) == 2);
  CHECK(view.seen_dense == std::set<int>{0, 1});
  CHECK(view.unseen_dense == std::set<int>{2});
  REQUIRE(view.seen_prototypes.size() == 2);
  CHECK(view.seen_prototypes[0].class_id == 0);
  CHECK(view.seen_prototypes[1].class_id == 1);
  REQUIRE(view.unseen.size() == 1);
  CHECK(view.unseen[0].class_id == 2);
  for (std::size_t i = 0; i < view.train.size(); ++i) {
    CHECK(view.train[i].id == static_cast<int>(i));
    CHECK(view.train[i].label <= 1);
  }
  CHECK(view.test[2].label == 2);
}
