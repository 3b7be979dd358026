#include "hgkt/dataset.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "hgkt/io_util.hpp"
#include "hgkt/rng.hpp"

namespace hgkt::data {
namespace {

std::vector<std::string> non_empty_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::string loc(const std::filesystem::path& path, std::size_t line_no) {
  return path.filename().string() + ":" + std::to_string(line_no);
}

// Instance tables share one schema: header `id,label,f0..f{n-1}`.
std::vector<InstanceRecord> parse_instances(const std::filesystem::path& path) {
  const auto lines = non_empty_lines(read_text_file(path));
  if (lines.empty()) throw ParseError(path.string() + ": empty file");
  const auto header = split_fields(lines[0]);
  if (header.size() < 3 || header[0] != "id" || header[1] != "label" ||
      header[2] != "f0") {
    throw SchemaError(loc(path, 1) + ": expected header 'id,label,f0..'");
  }
  const std::size_t width = header.size();
  std::vector<InstanceRecord> out;
  out.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) {
      throw ParseError(loc(path, li + 1) + ": blank line inside table");
    }
    const auto fields = split_fields(lines[li]);
    if (fields.size() != width) {
      throw SchemaError(loc(path, li + 1) + ": row width " +
                        std::to_string(fields.size()) + " differs from header width " +
                        std::to_string(width));
    }
    InstanceRecord rec;
    rec.id = static_cast<int>(parse_int(fields[0], loc(path, li + 1)));
    rec.label = static_cast<int>(parse_int(fields[1], loc(path, li + 1)));
    rec.feature.resize(static_cast<Eigen::Index>(width - 2));
    for (std::size_t j = 2; j < width; ++j) {
      rec.feature(static_cast<Eigen::Index>(j - 2)) =
          parse_double(fields[j], loc(path, li + 1));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<ClassPrototype> parse_attributes(const std::filesystem::path& path) {
  const auto lines = non_empty_lines(read_text_file(path));
  if (lines.empty()) throw ParseError(path.string() + ": empty file");
  const auto header = split_fields(lines[0]);
  if (header.size() < 2 || header[0] != "class" || header[1] != "a0") {
    throw SchemaError(loc(path, 1) + ": expected header 'class,a0..'");
  }
  const std::size_t width = header.size();
  std::vector<ClassPrototype> out;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto fields = split_fields(lines[li]);
    if (fields.size() != width) {
      throw SchemaError(loc(path, li + 1) + ": row width " +
                        std::to_string(fields.size()) + " differs from header width " +
                        std::to_string(width));
    }
    ClassPrototype proto;
    proto.class_id = static_cast<int>(parse_int(fields[0], loc(path, li + 1)));
    proto.attributes.resize(static_cast<Eigen::Index>(width - 1));
    for (std::size_t j = 1; j < width; ++j) {
      proto.attributes(static_cast<Eigen::Index>(j - 1)) =
          parse_double(fields[j], loc(path, li + 1));
    }
    out.push_back(std::move(proto));
  }
  return out;
}

std::map<int, Split> parse_split(const std::filesystem::path& path) {
  const auto lines = non_empty_lines(read_text_file(path));
  std::map<int, Split> out;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto fields = split_fields(lines[li]);
    if (fields.size() != 2) {
      throw ParseError(loc(path, li + 1) + ": expected 'class,seen|unseen'");
    }
    const int cid = static_cast<int>(parse_int(fields[0], loc(path, li + 1)));
    Split s;
    if (fields[1] == "seen") {
      s = Split::Seen;
    } else if (fields[1] == "unseen") {
      s = Split::Unseen;
    } else {
      throw ParseError(loc(path, li + 1) + ": split must be 'seen' or 'unseen', got '" +
                       std::string(fields[1]) + "'");
    }
    if (!out.emplace(cid, s).second) {
      throw SchemaError(loc(path, li + 1) + ": duplicate class " + std::to_string(cid));
    }
  }
  return out;
}

void validate_bundle(const DatasetBundle& b) {
  if (b.prototypes.empty()) throw SchemaError("dataset: no class prototypes");
  std::set<int> classes;
  const Eigen::Index d = b.prototypes.front().attributes.size();
  for (const auto& p : b.prototypes) {
    if (!classes.insert(p.class_id).second) {
      throw SchemaError("dataset: duplicate prototype for class " +
                        std::to_string(p.class_id));
    }
    if (p.attributes.size() != d) {
      throw SchemaError("dataset: attribute width differs across classes");
    }
  }
  for (const auto& [cid, s] : b.split) {
    (void)s;
    if (!classes.count(cid)) {
      throw SchemaError("dataset: split lists unknown class " + std::to_string(cid));
    }
  }
  for (const auto& p : b.prototypes) {
    if (!b.split.count(p.class_id)) {
      throw SchemaError("dataset: class " + std::to_string(p.class_id) +
                        " missing from the split file");
    }
  }
  Eigen::Index n = -1;
  auto check_instances = [&](const std::vector<InstanceRecord>& recs, bool training) {
    for (const auto& rec : recs) {
      if (!classes.count(rec.label)) {
        throw SchemaError("dataset: instance " + std::to_string(rec.id) +
                          " labeled with unknown class " + std::to_string(rec.label));
      }
      if (n < 0) n = rec.feature.size();
      if (rec.feature.size() != n) {
        throw SchemaError("dataset: feature width drift at instance " +
                          std::to_string(rec.id));
      }
      if (training && b.split.at(rec.label) == Split::Unseen) {
        throw ProtocolError("dataset: training instance " + std::to_string(rec.id) +
                            " is labeled with unseen class " +
                            std::to_string(rec.label));
      }
    }
  };
  check_instances(b.train, true);
  check_instances(b.test, false);
  if (b.train.empty()) throw SchemaError("dataset: empty training table");
}

}  // namespace

DatasetBundle load_dataset(const DatasetPaths& paths) {
  DatasetBundle b;
  b.train = parse_instances(paths.features);
  b.prototypes = parse_attributes(paths.attributes);
  b.split = parse_split(paths.split);
  if (!paths.test.empty()) b.test = parse_instances(paths.test);
  validate_bundle(b);
  return b;
}

std::vector<InstanceRecord> load_instances(const std::filesystem::path& path) {
  return parse_instances(path);
}

void save_dataset(const DatasetBundle& bundle, const DatasetPaths& paths) {
  auto write_instances = [](const std::filesystem::path& path,
                            const std::vector<InstanceRecord>& recs) {
    std::string out = "id,label";
    const Eigen::Index n = recs.empty() ? 0 : recs.front().feature.size();
    for (Eigen::Index j = 0; j < n; ++j) out += ",f" + std::to_string(j);
    out += '\n';
    for (const auto& rec : recs) {
      out += std::to_string(rec.id) + ',' + std::to_string(rec.label);
      for (Eigen::Index j = 0; j < rec.feature.size(); ++j) {
        out += ',' + format_double(rec.feature(j));
      }
      out += '\n';
    }
    write_text_file(path, out);
  };
  write_instances(paths.features, bundle.train);
  write_instances(paths.test, bundle.test);

  std::string attrs = "class";
  const Eigen::Index d =
      bundle.prototypes.empty() ? 0 : bundle.prototypes.front().attributes.size();
  for (Eigen::Index j = 0; j < d; ++j) attrs += ",a" + std::to_string(j);
  attrs += '\n';
  for (const auto& p : bundle.prototypes) {
    attrs += std::to_string(p.class_id);
    for (Eigen::Index j = 0; j < p.attributes.size(); ++j) {
      attrs += ',' + format_double(p.attributes(j));
    }
    attrs += '\n';
  }
  write_text_file(paths.attributes, attrs);

  std::string split;
  for (const auto& [cid, s] : bundle.split) {
    split += std::to_string(cid);
    split += s == Split::Seen ? ",seen\n" : ",unseen\n";
  }
  write_text_file(paths.split, split);
}

DatasetBundle synth_generate(const SynthSpec& spec) {
  if (spec.num_classes < 2) throw ConfigError("synth: need at least 2 classes");
  if (spec.num_unseen < 0 || spec.num_unseen >= spec.num_classes) {
    throw ConfigError("synth: num_unseen must lie in [0, num_classes)");
  }
  if (spec.instances_per_class < 1) {
    throw ConfigError("synth: instances_per_class must be >= 1");
  }
  if (spec.feature_dim < 2 || spec.attribute_dim < 2) {
    throw ConfigError("synth: feature and attribute dims must be >= 2");
  }
  if (spec.cluster_spread < 0.0 || spec.attribute_noise < 0.0) {
    throw ConfigError("synth: noise scales must be >= 0");
  }

  const int L = spec.num_classes;
  const int n = spec.feature_dim;
  const int d = spec.attribute_dim;

  // Independent streams per phase keep the draw order stable.
  std::mt19937_64 center_rng(mix_seed({spec.seed, 0xC3A7u}));
  std::mt19937_64 proj_rng(mix_seed({spec.seed, 0x9207u}));
  std::mt19937_64 attr_rng(mix_seed({spec.seed, 0xA77Au}));
  std::mt19937_64 train_rng(mix_seed({spec.seed, 0x7124u}));
  std::mt19937_64 test_rng(mix_seed({spec.seed, 0x7E57u}));

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Matrix centers(L, n);
  for (int c = 0; c < L; ++c) {
    for (int j = 0; j < n; ++j) centers(c, j) = unit(center_rng);
  }
  Matrix projection(d, n);
  const double proj_scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < n; ++j) projection(i, j) = proj_scale * gauss(proj_rng);
  }

  DatasetBundle b;
  for (int c = 0; c < L; ++c) {
    ClassPrototype proto;
    proto.class_id = c;
    proto.attributes = projection * centers.row(c).transpose();
    for (int j = 0; j < d; ++j) {
      proto.attributes(j) += spec.attribute_noise * gauss(attr_rng);
    }
    b.prototypes.push_back(std::move(proto));
    b.split[c] = c >= L - spec.num_unseen ? Split::Unseen : Split::Seen;
  }

  auto draw_instance = [&](int cls, int id, std::mt19937_64& rng) {
    InstanceRecord rec;
    rec.id = id;
    rec.label = cls;
    rec.feature = centers.row(cls).transpose();
    for (int j = 0; j < n; ++j) rec.feature(j) += spec.cluster_spread * gauss(rng);
    return rec;
  };
  int next_id = 0;
  for (int c = 0; c < L; ++c) {
    if (b.split[c] == Split::Unseen) continue;
    for (int i = 0; i < spec.instances_per_class; ++i) {
      b.train.push_back(draw_instance(c, next_id++, train_rng));
    }
  }
  next_id = 0;
  for (int c = 0; c < L; ++c) {
    for (int i = 0; i < spec.instances_per_class; ++i) {
      b.test.push_back(draw_instance(c, next_id++, test_rng));
    }
  }
  return b;
}

DenseView densify(const DatasetBundle& bundle) {
  std::vector<int> seen_orig, unseen_orig;
  for (const auto& p : bundle.prototypes) {
    const auto it = bundle.split.find(p.class_id);
    if (it == bundle.split.end()) {
      throw SchemaError("densify: class " + std::to_string(p.class_id) +
                        " missing from split");
    }
    (it->second == Split::Seen ? seen_orig : unseen_orig).push_back(p.class_id);
  }
  std::sort(seen_orig.begin(), seen_orig.end());
  std::sort(unseen_orig.begin(), unseen_orig.end());
  if (seen_orig.empty()) throw SchemaError("densify: no seen classes");

  DenseView view;
  for (int cid : seen_orig) {
    view.original_to_dense[cid] = static_cast<int>(view.dense_to_original.size());
    view.dense_to_original.push_back(cid);
  }
  for (int cid : unseen_orig) {
    view.original_to_dense[cid] = static_cast<int>(view.dense_to_original.size());
    view.dense_to_original.push_back(cid);
  }
  const int L = static_cast<int>(seen_orig.size());
  for (int c = 0; c < L; ++c) view.seen_dense.insert(c);
  for (std::size_t i = 0; i < unseen_orig.size(); ++i) {
    view.unseen_dense.insert(L + static_cast<int>(i));
  }

  std::map<int, const ClassPrototype*> by_id;
  for (const auto& p : bundle.prototypes) by_id[p.class_id] = &p;
  for (int cid : seen_orig) {
    ClassPrototype proto = *by_id[cid];
    proto.class_id = view.original_to_dense[cid];
    view.seen_prototypes.push_back(std::move(proto));
  }
  for (int cid : unseen_orig) {
    zsl::UnseenClass u;
    u.class_id = view.original_to_dense[cid];
    u.attributes = by_id[cid]->attributes;
    view.unseen.push_back(std::move(u));
  }

  view.train.reserve(bundle.train.size());
  for (const auto& rec : bundle.train) {
    InstanceRecord r = rec;
    r.id = static_cast<int>(view.train.size());
    r.label = view.original_to_dense.at(rec.label);
    view.train.push_back(std::move(r));
  }
  view.test.reserve(bundle.test.size());
  for (const auto& rec : bundle.test) {
    InstanceRecord r = rec;
    r.id = static_cast<int>(view.test.size());
    r.label = view.original_to_dense.at(rec.label);
    view.test.push_back(std::move(r));
  }
  return view;
}

}  // namespace hgkt::data
