#include "gopforge/model_io.hpp"

#include <map>
#include <span>

#include "binary_io.hpp"
#include "gopforge/error.hpp"
#include "json.hpp"

namespace gopforge {

namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "GOPFMODL";

struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
};

class TensorSink {
 public:
  void add(const std::string& name, const Matrix& m) { add(name, m.rows(), m.cols(), m.data()); }
  void add(const std::string& name, std::span<const double> v) { add(name, 1, v.size(), v); }
  const json& index() const noexcept { return index_; }
  void write_payload(detail::ByteWriter& w) const {
    for (double v : payload_) w.f64(v);
  }

 private:
  void add(const std::string& name, std::size_t rows, std::size_t cols, std::span<const double> v) {
    index_.push_back({{"name", name}, {"rows", rows}, {"cols", cols}});
    payload_.insert(payload_.end(), v.begin(), v.end());
  }
  json index_ = json::array();
  std::vector<double> payload_;
};

json opset_json(const OperatorSet& o) {
  return {{"nodal", to_string(o.nodal)}, {"pool", to_string(o.pool)}, {"act", to_string(o.act)}};
}

OperatorSet opset_from(const json& j) {
  return make_opset(parse_nodal(j.at("nodal").get<std::string>()),
                    parse_pool(j.at("pool").get<std::string>()),
                    parse_act(j.at("act").get<std::string>()));
}

json step_json(const StepRecord& r) {
  json j = {{"step", r.step},
            {"candidates", r.candidates},
            {"trainings", r.trainings},
            {"failed", r.failed},
            {"hidden_opset", opset_json(r.hidden_opset)},
            {"best_loss", r.best_loss},
            {"accuracy", r.accuracy},
            {"accuracy_split", r.accuracy_split},
            {"stopped", r.stopped},
            {"input_width", r.input_width},
            {"hidden_width", r.hidden_width},
            {"memory_dim", r.memory_dim},
            {"output_fan_in", r.output_fan_in}};
  if (r.output_opset) j["output_opset"] = opset_json(*r.output_opset);
  if (r.initial_hidden_opset) j["initial_hidden_opset"] = opset_json(*r.initial_hidden_opset);
  return j;
}

StepRecord step_from(const json& j) {
  StepRecord r;
  r.step = j.at("step").get<std::size_t>();
  r.candidates = j.at("candidates").get<std::size_t>();
  r.trainings = j.at("trainings").get<std::size_t>();
  r.failed = j.at("failed").get<std::size_t>();
  r.hidden_opset = opset_from(j.at("hidden_opset"));
  if (j.contains("output_opset")) r.output_opset = opset_from(j.at("output_opset"));
  if (j.contains("initial_hidden_opset")) r.initial_hidden_opset = opset_from(j.at("initial_hidden_opset"));
  r.best_loss = j.at("best_loss").get<double>();
  r.accuracy = j.at("accuracy").get<double>();
  r.accuracy_split = j.at("accuracy_split").get<std::string>();
  r.stopped = j.at("stopped").get<bool>();
  r.input_width = j.at("input_width").get<std::size_t>();
  r.hidden_width = j.at("hidden_width").get<std::size_t>();
  r.memory_dim = j.at("memory_dim").get<std::size_t>();
  r.output_fan_in = j.at("output_fan_in").get<std::size_t>();
  return r;
}

json build_manifest(const NetworkModel& model, const ModelMetadata& meta, TensorSink& sink) {
  json blocks = json::array();
  for (std::size_t k = 0; k < model.blocks.size(); ++k) {
    const HiddenBlock& b = model.blocks[k];
    const std::string prefix = "block" + std::to_string(k);
    json jb = {{"opset", opset_json(b.gop.opset)},
               {"opset_name", to_string(b.gop.opset)},
               {"fan_in", b.gop.fan_in()},
               {"fan_out", b.gop.fan_out()},
               {"placement", to_string(b.placement)}};
    sink.add(prefix + ".weights", b.gop.weights);
    sink.add(prefix + ".bias", b.gop.bias);
    if (b.memory) {
      const MemoryProjection& m = *b.memory;
      jb["memory"] = {{"kind", to_string(m.kind)},
                      {"in_dim", m.in_dim()},
                      {"out_dim", m.out_dim()},
                      {"frozen", m.frozen},
                      {"energy_threshold", m.energy_threshold},
                      {"ridge", m.ridge},
                      {"ridge_applied", m.ridge_applied}};
      sink.add(prefix + ".memory.mean", m.mean);
      sink.add(prefix + ".memory.basis", m.basis);
      sink.add(prefix + ".memory.eigenvalues", m.eigenvalues);
    }
    blocks.push_back(std::move(jb));
  }

  json output;
  if (const auto* lin = std::get_if<LinearLayerParams>(&model.output)) {
    output = {{"kind", "linear"}, {"activation", to_string(lin->activation)},
              {"fan_in", lin->fan_in()}, {"fan_out", lin->fan_out()}};
    sink.add("output.weights", lin->weights);
    sink.add("output.bias", lin->bias);
  } else {
    const auto& gop = std::get<GopLayerParams>(model.output);
    output = {{"kind", "gop"}, {"opset", opset_json(gop.opset)}, {"opset_name", to_string(gop.opset)},
              {"fan_in", gop.fan_in()}, {"fan_out", gop.fan_out()}};
    sink.add("output.weights", gop.weights);
    sink.add("output.bias", gop.bias);
  }

  json history = json::array();
  for (const auto& r : model.history) history.push_back(step_json(r));

  json config;
  try {
    config = json::parse(meta.config_json);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model metadata: config echo is not valid JSON: ") + e.what());
  }

  json jm = {{"run_seed", meta.run_seed},
             {"class_names", meta.class_names},
             {"feature_names", meta.feature_names},
             {"standardized", meta.standardization.has_value()}};
  if (meta.standardization) {
    sink.add("standardization.mean", meta.standardization->mean);
    sink.add("standardization.stddev", meta.standardization->stddev);
  }

  return {{"format", "gopforge-model"},
          {"version", kModelFormatVersion},
          {"algorithm", to_string(model.algorithm)},
          {"input_dim", model.input_dim},
          {"output_dim", model.output_dim},
          {"blocks", std::move(blocks)},
          {"output", std::move(output)},
          {"history", std::move(history)},
          {"metadata", std::move(jm)},
          {"config", std::move(config)},
          {"tensors", sink.index()}};
}

struct Parsed {
  json manifest;
  std::map<std::string, Tensor> tensors;
};

Parsed parse_bytes(std::string bytes, const std::string& source) {
  detail::ByteReader r(std::move(bytes), source);
  if (r.bytes(kMagic.size()) != kMagic) throw IoError(source + ": not a gopforge model file");
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion)
    throw IoError(source + ": unsupported model format version " + std::to_string(version));
  const std::uint64_t len = r.u64();
  if (len > r.remaining()) throw IoError(source + ": truncated or corrupt file (manifest length)");
  Parsed p;
  try {
    p.manifest = json::parse(r.bytes(len));
    for (const auto& t : p.manifest.at("tensors")) {
      Tensor tensor;
      tensor.rows = t.at("rows").get<std::size_t>();
      tensor.cols = t.at("cols").get<std::size_t>();
      if (tensor.cols != 0 && tensor.rows > r.remaining() / 8 / tensor.cols)
        throw IoError(source + ": truncated or corrupt file (tensor payload)");
      tensor.values.resize(tensor.rows * tensor.cols);
      for (auto& v : tensor.values) v = r.f64();
      p.tensors[t.at("name").get<std::string>()] = std::move(tensor);
    }
  } catch (const json::exception& e) {
    throw IoError(source + ": corrupt manifest: " + e.what());
  }
  if (r.remaining() != 0) throw IoError(source + ": trailing bytes after payload");
  return p;
}

ModelFile rebuild(const Parsed& p, const std::string& source) {
  auto tensor = [&](const std::string& name) -> const Tensor& {
    const auto it = p.tensors.find(name);
    if (it == p.tensors.end()) throw IoError(source + ": missing tensor '" + name + "'");
    if (!all_finite(it->second.values)) throw IoError(source + ": non-finite values in '" + name + "'");
    return it->second;
  };
  auto matrix = [&](const std::string& name) {
    const Tensor& t = tensor(name);
    return Matrix(t.rows, t.cols, t.values);
  };
  auto vec = [&](const std::string& name) { return tensor(name).values; };

  const json& m = p.manifest;
  ModelFile file;
  NetworkModel& model = file.model;
  model.algorithm = parse_algorithm(m.at("algorithm").get<std::string>());
  model.input_dim = m.at("input_dim").get<std::size_t>();
  model.output_dim = m.at("output_dim").get<std::size_t>();

  const json& blocks = m.at("blocks");
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const json& jb = blocks[k];
    const std::string prefix = "block" + std::to_string(k);
    HiddenBlock b;
    b.gop.opset = opset_from(jb.at("opset"));
    b.gop.weights = matrix(prefix + ".weights");
    b.gop.bias = vec(prefix + ".bias");
    b.placement = parse_placement(jb.at("placement").get<std::string>());
    if (jb.contains("memory")) {
      const json& jm = jb.at("memory");
      MemoryProjection mp;
      mp.kind = parse_memory_kind(jm.at("kind").get<std::string>());
      mp.frozen = jm.at("frozen").get<bool>();
      mp.energy_threshold = jm.at("energy_threshold").get<double>();
      mp.ridge = jm.at("ridge").get<double>();
      mp.ridge_applied = jm.at("ridge_applied").get<bool>();
      mp.mean = vec(prefix + ".memory.mean");
      mp.basis = matrix(prefix + ".memory.basis");
      mp.eigenvalues = vec(prefix + ".memory.eigenvalues");
      b.memory = std::move(mp);
    }
    model.blocks.push_back(std::move(b));
  }

  const json& jo = m.at("output");
  const std::string kind = jo.at("kind").get<std::string>();
  if (kind == "linear") {
    LinearLayerParams lin;
    lin.activation = parse_output_activation(jo.at("activation").get<std::string>());
    lin.weights = matrix("output.weights");
    lin.bias = vec("output.bias");
    model.output = std::move(lin);
  } else if (kind == "gop") {
    GopLayerParams gop;
    gop.opset = opset_from(jo.at("opset"));
    gop.weights = matrix("output.weights");
    gop.bias = vec("output.bias");
    model.output = std::move(gop);
  } else {
    throw IoError(source + ": unknown output layer kind '" + kind + "'");
  }
  for (const auto& r : m.at("history")) model.history.push_back(step_from(r));

  const json& jm = m.at("metadata");
  file.metadata.run_seed = jm.at("run_seed").get<std::uint64_t>();
  file.metadata.class_names = jm.at("class_names").get<std::vector<std::string>>();
  file.metadata.feature_names = jm.at("feature_names").get<std::vector<std::string>>();
  if (jm.at("standardized").get<bool>())
    file.metadata.standardization = Standardization{vec("standardization.mean"), vec("standardization.stddev")};
  file.metadata.config_json = m.at("config").dump();

  try {
    validate_model(model);
  } catch (const ContractError& e) {
    throw IoError(source + ": inconsistent model: " + e.what());
  }
  return file;
}

}  // namespace

std::string serialize_model(const NetworkModel& model, const ModelMetadata& meta) {
  validate_model(model);
  TensorSink sink;
  const json manifest = build_manifest(model, meta, sink);
  const std::string text = manifest.dump();
  detail::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kModelFormatVersion);
  w.u64(text.size());
  w.bytes(text);
  sink.write_payload(w);
  return w.str();
}

ModelFile deserialize_model(std::string bytes, const std::string& source) {
  const Parsed p = parse_bytes(std::move(bytes), source);
  try {
    return rebuild(p, source);
  } catch (const json::exception& e) {
    throw IoError(source + ": corrupt manifest: " + e.what());
  } catch (const ParseError& e) {
    throw IoError(source + ": corrupt manifest: " + e.what());
  } catch (const ShapeError& e) {
    throw IoError(source + ": corrupt payload: " + e.what());
  }
}

void save_model(const std::filesystem::path& path, const NetworkModel& model, const ModelMetadata& meta) {
  detail::write_file(path, serialize_model(model, meta));
}

ModelFile load_model(const std::filesystem::path& path) {
  return deserialize_model(detail::read_file(path), path.string());
}

std::string manifest_json(const std::filesystem::path& path) {
  const Parsed p = parse_bytes(detail::read_file(path), path.string());
  return p.manifest.dump(2);
}

}  // namespace gopforge
