#include <gtest/gtest.h>

#include <filesystem>

#include "gopforge/data.hpp"
#include "gopforge/error.hpp"
#include "gopforge/model_io.hpp"
#include "gopforge/progressive.hpp"

using namespace gopforge;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  Dataset ds;
  ProgressiveData data;
};

Fixture make_fixture() {
  SyntheticParams p;
  p.samples = 90;
  p.classes = 3;
  p.dims = 4;
  Fixture f;
  f.ds = split_dataset(make_synthetic(p, 2), {}, 2);
  standardize(f.ds);
  f.data = {features_of(f.ds, Split::kTrain), labels_of(f.ds, Split::kTrain), features_of(f.ds, Split::kVal),
            labels_of(f.ds, Split::kVal), 3};
  return f;
}

NetworkModel trained(const Fixture& f, Algorithm a, std::optional<MemoryKind> mem) {
  ProgressiveConfig cfg;
  cfg.algorithm = a;
  cfg.memory_kind = mem;
  cfg.network = {4, {4, 3}, 3};
  cfg.search.epochs = 1;
  cfg.finetune.epochs = 1;
  cfg.stopping = {StopMode::kAbsoluteLoss, 1e-300, MetricSplit::kTrain};
  if (a == Algorithm::kPop) cfg.output_activation = OutputActivation::kIdentity;
  return run_progressive(f.data, cfg).model;
}

ModelMetadata metadata(const Dataset& ds) {
  ModelMetadata m;
  m.run_seed = 77;
  m.class_names = ds.class_names;
  m.feature_names = ds.feature_names;
  m.standardization = ds.standardization;
  m.config_json = R"({"algorithm":"popmem-o"})";
  return m;
}

void expect_same(NetworkModel a, const NetworkModel& b) {
  for (auto& r : a.history) r.seconds = 0.0;
  EXPECT_EQ(a.algorithm, b.algorithm);
  EXPECT_EQ(a.input_dim, b.input_dim);
  EXPECT_EQ(a.output_dim, b.output_dim);
  EXPECT_EQ(a.blocks, b.blocks);
  EXPECT_EQ(a.output, b.output);
  EXPECT_EQ(a.history, b.history);
}

}  // namespace

TEST(ModelIo, RoundTripIsBitwiseForEveryVariant) {
  const Fixture f = make_fixture();
  const std::vector<std::pair<Algorithm, std::optional<MemoryKind>>> variants = {
      {Algorithm::kPop, std::nullopt},
      {Algorithm::kPopFast, std::nullopt},
      {Algorithm::kPopMemH, MemoryKind::kPca},
      {Algorithm::kPopMemO, MemoryKind::kLda}};
  const fs::path dir = fs::temp_directory_path() / "gopforge_model_io";
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const auto& [alg, mem] : variants) {
    const NetworkModel model = trained(f, alg, mem);
    const fs::path path = dir / (std::string(to_string(alg)) + ".gopm-model");
    save_model(path, model, metadata(f.ds));
    const ModelFile back = load_model(path);
    expect_same(model, back.model);
    EXPECT_EQ(back.metadata.run_seed, 77u);
    EXPECT_EQ(back.metadata.class_names, f.ds.class_names);
    EXPECT_EQ(back.metadata.feature_names, f.ds.feature_names);
    EXPECT_EQ(back.metadata.standardization, f.ds.standardization);
    EXPECT_EQ(back.metadata.config_json, R"({"algorithm":"popmem-o"})");
    const Matrix x = features_of(f.ds, Split::kTest);
    EXPECT_EQ(predict(back.model, x), predict(model, x));
    EXPECT_EQ(serialize_model(back.model, back.metadata), serialize_model(model, metadata(f.ds)));
  }
}

TEST(ModelIo, WallTimeIsNotPersisted) {
  const Fixture f = make_fixture();
  NetworkModel a = trained(f, Algorithm::kPopFast, std::nullopt);
  NetworkModel b = a;
  b.history[0].seconds += 12.5;
  EXPECT_EQ(serialize_model(a, {}), serialize_model(b, {}));
}

TEST(ModelIo, CorruptBytesAreIoErrors) {
  const Fixture f = make_fixture();
  const std::string bytes = serialize_model(trained(f, Algorithm::kPopMemO, MemoryKind::kPca), metadata(f.ds));
  EXPECT_NO_THROW(deserialize_model(bytes));
  EXPECT_THROW(deserialize_model(bytes.substr(0, bytes.size() - 5)), IoError);
  EXPECT_THROW(deserialize_model(bytes.substr(0, 10)), IoError);
  EXPECT_THROW(deserialize_model(""), IoError);
  EXPECT_THROW(deserialize_model(bytes + "x"), IoError);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize_model(bad_magic), IoError);
  std::string bad_version = bytes;
  bad_version[8] = 9;
  EXPECT_THROW(deserialize_model(bad_version), IoError);
  std::string bad_json = bytes;
  bad_json[20] = '\x01';
  EXPECT_THROW(deserialize_model(bad_json), IoError);
  EXPECT_THROW(load_model("/nonexistent/model.gopm-model"), IoError);
}

TEST(ModelIo, ManifestListsTheStructure) {
  const Fixture f = make_fixture();
  const fs::path path = fs::temp_directory_path() / "gopforge_manifest.gopm-model";
  save_model(path, trained(f, Algorithm::kPopMemO, MemoryKind::kPca), metadata(f.ds));
  const std::string text = manifest_json(path);
  EXPECT_NE(text.find("\"blocks\""), std::string::npos);
  EXPECT_NE(text.find("block0.memory.basis"), std::string::npos);
  EXPECT_NE(text.find("\"hidden\""), std::string::npos);
}
