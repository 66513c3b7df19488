#include "experiment.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace gopforge::cli {

namespace {

using nlohmann::json;

// Walks one JSON object, remembering which keys were read so leftovers can
// be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  template <typename T>
  void get(const std::string& key, T& out) {
    used_.insert(key);
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + ": wrong type (" + j_.at(key).dump() + ")");
    }
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(out)) throw ConfigError(where(key) + ": must be finite");
    }
  }

  template <typename Parse>
  void get_enum(const std::string& key, Parse parse) {
    std::string name;
    get(key, name);
    if (!has(key)) return;
    try {
      parse(name);
    } catch (const ParseError& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  const json* child(const std::string& key) {
    used_.insert(key);
    return has(key) ? &j_.at(key) : nullptr;
  }

  void require(const std::string& key) const {
    if (!has(key)) throw ConfigError(where(key) + ": required field missing");
  }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!used_.count(key)) throw ConfigError(where(key) + ": unknown key");
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::string_view to_string(LrDropMode m) {
  return m == LrDropMode::kMultiplicative ? "multiplicative" : "subtractive";
}
LrDropMode parse_lr_drop_mode(std::string_view s) {
  if (s == "multiplicative") return LrDropMode::kMultiplicative;
  if (s == "subtractive") return LrDropMode::kSubtractive;
  throw ParseError("unknown lr_drop_mode '" + std::string(s) + "'");
}
std::string_view to_string(RidgeMode m) { return m == RidgeMode::kAlways ? "always" : "on_singular"; }
RidgeMode parse_ridge_mode(std::string_view s) {
  if (s == "always") return RidgeMode::kAlways;
  if (s == "on_singular") return RidgeMode::kOnSingular;
  throw ParseError("unknown ridge_mode '" + std::string(s) + "'");
}
std::string_view to_string(DataSource s) {
  switch (s) {
    case DataSource::kCsv: return "csv";
    case DataSource::kSynthetic: return "synthetic";
    case DataSource::kGopm: return "gopm";
  }
  return "?";
}
DataSource parse_source(std::string_view s) {
  if (s == "csv") return DataSource::kCsv;
  if (s == "synthetic") return DataSource::kSynthetic;
  if (s == "gopm") return DataSource::kGopm;
  throw ParseError("unknown data source '" + std::string(s) + "'");
}

void read_train(ObjectReader& r, TrainConfig& t) {
  r.get("epochs", t.epochs);
  r.get("lr", t.lr_initial);
  r.get("lr_drop_every", t.lr_drop_every);
  r.get("lr_drop_factor", t.lr_drop_factor);
  r.get_enum("lr_drop_mode", [&](std::string_view s) { t.lr_drop_mode = parse_lr_drop_mode(s); });
  r.get("lr_floor", t.lr_floor);
  r.get("batch_size", t.batch_size);
  r.get("dropout", t.dropout_rate);
  r.get("momentum", t.momentum);
  r.get_enum("loss", [&](std::string_view s) { t.loss = parse_loss(s); });
  if (const json* reg = r.child("regularizer")) {
    ObjectReader rr(*reg, r.where("regularizer"));
    rr.get_enum("kind", [&](std::string_view s) { t.regularizer.kind = parse_regularizer(s); });
    rr.get("value", t.regularizer.value);
    rr.finish();
  }
}

json train_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"lr", t.lr_initial},
          {"lr_drop_every", t.lr_drop_every},
          {"lr_drop_factor", t.lr_drop_factor},
          {"lr_drop_mode", to_string(t.lr_drop_mode)},
          {"lr_floor", t.lr_floor},
          {"batch_size", t.batch_size},
          {"dropout", t.dropout_rate},
          {"momentum", t.momentum},
          {"loss", to_string(t.loss)},
          {"regularizer", {{"kind", to_string(t.regularizer.kind)}, {"value", t.regularizer.value}}}};
}

void read_data(ObjectReader& r, DataSpec& d) {
  r.require("source");
  r.get_enum("source", [&](std::string_view s) { d.source = parse_source(s); });
  r.get("name", d.name);
  std::string path;
  r.get("path", path);
  d.path = path;
  std::string labels_path;
  r.get("labels_path", labels_path);
  d.labels_path = labels_path;
  r.get("label_column", d.schema.label_column);
  r.get("feature_columns", d.schema.feature_columns);
  if (const json* syn = r.child("synthetic")) {
    ObjectReader sr(*syn, r.where("synthetic"));
    sr.get_enum("kind", [&](std::string_view s) { d.synthetic.kind = parse_synthetic_kind(s); });
    sr.get("samples", d.synthetic.samples);
    sr.get("classes", d.synthetic.classes);
    sr.get("dims", d.synthetic.dims);
    sr.get("separation", d.synthetic.separation);
    sr.get("noise", d.synthetic.noise);
    sr.get("seed", d.synthetic_seed);
    sr.finish();
  } else if (d.source == DataSource::kSynthetic) {
    throw ConfigError(r.where("synthetic") + ": required for the synthetic source");
  }
  if (const json* split = r.child("split")) {
    ObjectReader sp(*split, r.where("split"));
    sp.get("train", d.fractions.train);
    sp.get("val", d.fractions.val);
    sp.get("test", d.fractions.test);
    std::uint64_t seed = 0;
    sp.get("seed", seed);
    if (sp.has("seed")) d.split_seed = seed;
    std::string manifest;
    sp.get("manifest", manifest);
    d.split_manifest = manifest;
    sp.finish();
  }
  r.get("standardize", d.standardize);
  if (d.source != DataSource::kSynthetic && d.path.empty())
    throw ConfigError(r.where("path") + ": required for the " + std::string(to_string(d.source)) + " source");
  if (d.source == DataSource::kGopm && d.labels_path.empty())
    throw ConfigError(r.where("labels_path") + ": required for the gopm source");
  if (d.name.empty())
    d.name = d.source == DataSource::kSynthetic ? std::string(to_string(d.synthetic.kind))
                                                : d.path.stem().string();
}

}  // namespace

ExperimentConfig parse_experiment(const json& j) {
  ExperimentConfig cfg;
  ProgressiveConfig& run = cfg.run;
  ObjectReader r(j, "");
  r.require("algorithm");
  r.get_enum("algorithm", [&](std::string_view s) { run.algorithm = parse_algorithm(s); });
  r.get_enum("memory_kind", [&](std::string_view s) { run.memory_kind = parse_memory_kind(s); });

  r.require("template");
  {
    ObjectReader t(*r.child("template"), "template");
    t.require("hidden");
    t.get("input_dim", run.network.input_dim);
    t.get("hidden", run.network.hidden_sizes);
    t.get("output_dim", run.network.output_dim);
    t.finish();
  }
  if (const json* s = r.child("search")) {
    ObjectReader sr(*s, "search");
    read_train(sr, run.search);
    sr.finish();
  }
  if (const json* f = r.child("finetune")) {
    ObjectReader fr(*f, "finetune");
    fr.get("enabled", run.finetune_enabled);
    read_train(fr, run.finetune);
    fr.finish();
  }
  if (const json* s = r.child("stopping")) {
    ObjectReader sr(*s, "stopping");
    sr.get_enum("mode", [&](std::string_view v) { run.stopping.mode = parse_stop_mode(v); });
    sr.get("threshold", run.stopping.threshold);
    sr.get_enum("split", [&](std::string_view v) { run.stopping.split = parse_metric_split(v); });
    sr.finish();
  }
  r.get_enum("output_activation", [&](std::string_view s) { run.output_activation = parse_output_activation(s); });
  if (const json* m = r.child("memory")) {
    ObjectReader mr(*m, "memory");
    mr.get("pca_energy", run.pca.energy_threshold);
    mr.get("ridge", run.pca.ridge);
    mr.get_enum("ridge_mode", [&](std::string_view s) { run.pca.ridge_mode = parse_ridge_mode(s); });
    std::size_t cap = 0;
    mr.get("dim_cap", cap);
    if (mr.has("dim_cap")) run.memory_dim_cap = cap;
    mr.finish();
  }
  run.lda.ridge = run.pca.ridge;
  run.lda.ridge_mode = run.pca.ridge_mode;

  r.require("data");
  {
    ObjectReader dr(*r.child("data"), "data");
    read_data(dr, cfg.data);
    dr.finish();
  }
  r.get("run_seed", run.run_seed);
  r.get("workers", run.workers);
  if (const json* o = r.child("output")) {
    ObjectReader orr(*o, "output");
    std::string dir;
    orr.get("dir", dir);
    if (!dir.empty()) cfg.out_dir = dir;
    orr.finish();
  }
  r.finish();

  const bool needs_memory = run.algorithm == Algorithm::kPopMemH || run.algorithm == Algorithm::kPopMemO;
  if (needs_memory && !run.memory_kind)
    throw ConfigError("memory_kind: required for algorithm " + std::string(to_string(run.algorithm)));
  if (!needs_memory && run.memory_kind)
    throw ConfigError("memory_kind: only valid for popmem-h and popmem-o");
  if (run.workers < 1) throw ConfigError("workers: must be >= 1");

  // Referenced paths must be distinct.
  std::vector<std::filesystem::path> paths;
  for (const auto& p : {cfg.data.path, cfg.data.labels_path, cfg.data.split_manifest})
    if (!p.empty()) paths.push_back(std::filesystem::weakly_canonical(p));
  for (std::size_t a = 0; a < paths.size(); ++a)
    for (std::size_t b = a + 1; b < paths.size(); ++b)
      if (paths[a] == paths[b]) throw ConfigError("data: path '" + paths[a].string() + "' is referenced twice");
  return cfg;
}

json normalized_echo(const ExperimentConfig& cfg) {
  const ProgressiveConfig& run = cfg.run;
  const DataSpec& d = cfg.data;
  json data = {{"source", to_string(d.source)},
               {"name", d.name},
               {"standardize", d.standardize},
               {"split", {{"train", d.fractions.train},
                          {"val", d.fractions.val},
                          {"test", d.fractions.test},
                          {"seed", d.split_seed.value_or(run.run_seed)}}}};
  if (!d.split_manifest.empty()) data["split"]["manifest"] = d.split_manifest.string();
  if (d.source == DataSource::kSynthetic) {
    data["synthetic"] = {{"kind", to_string(d.synthetic.kind)},
                         {"samples", d.synthetic.samples},
                         {"classes", d.synthetic.classes},
                         {"dims", d.synthetic.dims},
                         {"separation", d.synthetic.separation},
                         {"noise", d.synthetic.noise},
                         {"seed", d.synthetic_seed}};
  } else {
    data["path"] = d.path.string();
    if (d.source == DataSource::kGopm) data["labels_path"] = d.labels_path.string();
    data["label_column"] = d.schema.label_column;
    if (!d.schema.feature_columns.empty()) data["feature_columns"] = d.schema.feature_columns;
  }

  json finetune = train_json(run.finetune);
  finetune["enabled"] = run.finetune_enabled;
  json memory = {{"pca_energy", run.pca.energy_threshold},
                 {"ridge", run.pca.ridge},
                 {"ridge_mode", to_string(run.pca.ridge_mode)}};
  if (run.memory_dim_cap) memory["dim_cap"] = *run.memory_dim_cap;

  json j = {{"algorithm", to_string(run.algorithm)},
            {"template", {{"hidden", run.network.hidden_sizes}}},
            {"search", train_json(run.search)},
            {"finetune", std::move(finetune)},
            {"stopping", {{"mode", to_string(run.stopping.mode)},
                          {"threshold", run.stopping.threshold},
                          {"split", to_string(run.stopping.split)}}},
            {"output_activation", to_string(run.output_activation)},
            {"memory", std::move(memory)},
            {"data", std::move(data)},
            {"run_seed", run.run_seed}};
  if (run.network.input_dim) j["template"]["input_dim"] = run.network.input_dim;
  if (run.network.output_dim) j["template"]["output_dim"] = run.network.output_dim;
  if (run.memory_kind) j["memory_kind"] = to_string(*run.memory_kind);
  return j;
}

json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "': expected key.path=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  std::string pointer;
  std::stringstream ks(key);
  std::string part;
  while (std::getline(ks, part, '.')) {
    if (part.empty()) throw ConfigError("override '" + assignment + "': empty key segment");
    pointer += "/" + part;
  }
  try {
    j[json::json_pointer(pointer)] = std::move(value);
  } catch (const json::exception& e) {
    throw ConfigError("override '" + assignment + "': " + e.what());
  }
}

LoadedData load_experiment_data(const DataSpec& spec, std::uint64_t run_seed) {
  LoadedData out;
  Dataset ds;
  switch (spec.source) {
    case DataSource::kCsv:
      ds = load_csv(spec.path, spec.schema);
      break;
    case DataSource::kSynthetic:
      ds = make_synthetic(spec.synthetic, spec.synthetic_seed);
      break;
    case DataSource::kGopm: {
      ds.x = read_gopm(spec.path);
      std::ifstream in(spec.labels_path);
      if (!in) throw IoError("cannot open '" + spec.labels_path.string() + "'");
      std::string line;
      std::map<std::string, std::size_t> index;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto it = index.find(line);
        if (it == index.end()) {
          it = index.emplace(line, ds.class_names.size()).first;
          ds.class_names.push_back(line);
        }
        ds.labels.push_back(it->second);
      }
      if (ds.labels.size() != ds.x.rows())
        throw ValidationError(spec.labels_path.string() + ": " + std::to_string(ds.labels.size()) +
                              " labels for " + std::to_string(ds.x.rows()) + " rows");
      ds.class_count = ds.class_names.size();
      for (std::size_t c = 0; c < ds.x.cols(); ++c) ds.feature_names.push_back("f" + std::to_string(c));
      break;
    }
  }
  if (!spec.split_manifest.empty()) {
    ds.split = read_split_manifest(spec.split_manifest, ds.x.rows());
  } else {
    ds = split_dataset(std::move(ds), spec.fractions, spec.split_seed.value_or(run_seed));
  }
  out.raw = ds;
  if (spec.standardize) standardize(ds);

  out.progressive.x_train = features_of(ds, Split::kTrain);
  out.progressive.labels_train = labels_of(ds, Split::kTrain);
  if (!indices_of(ds, Split::kVal).empty()) {
    out.progressive.x_val = features_of(ds, Split::kVal);
    out.progressive.labels_val = labels_of(ds, Split::kVal);
  }
  out.progressive.num_classes = ds.class_count;
  out.dataset = std::move(ds);
  return out;
}

}  // namespace gopforge::cli
