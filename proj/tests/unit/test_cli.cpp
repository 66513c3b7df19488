#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "gopforge/model_io.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace gopforge;
using namespace gopforge::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gopforge_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const json& j, const std::string& name = "config.json") {
  const fs::path p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome train(const fs::path& config, std::vector<std::string> overrides = {}) {
  std::ostringstream out, err;
  TrainArgs args;
  args.config = config;
  args.overrides = std::move(overrides);
  args.quiet = true;
  const int code = cmd_train(args, out, err);
  return {code, out.str(), err.str()};
}

Outcome eval(const EvalArgs& args) {
  std::ostringstream out, err;
  const int code = cmd_eval(args, out, err);
  return {code, out.str(), err.str()};
}

Outcome report(const fs::path& dir) {
  std::ostringstream out, err;
  const int code = cmd_report({dir, {}}, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

double stdout_accuracy(const std::string& out) {
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("accuracy,", 0) == 0) return std::stod(line.substr(9));
  ADD_FAILURE() << "no accuracy line in: " << out;
  return -1.0;
}

json base_config(const fs::path& out) {
  json j = json::parse(R"({
    "algorithm": "popfast",
    "template": {"hidden": [6, 6]},
    "search": {"epochs": 2, "lr": 0.1, "loss": "cross_entropy"},
    "finetune": {"epochs": 2},
    "data": {"source": "synthetic", "name": "blobs",
             "synthetic": {"kind": "blobs", "samples": 150, "classes": 3, "dims": 4, "separation": 5}},
    "run_seed": 3
  })");
  j["output"] = {{"dir", out.string()}};
  return j;
}

}  // namespace

TEST(CliTrain, WritesModelAndReports) {
  const fs::path dir = scratch("train");
  const Outcome r = train(write_config(dir, base_config(dir / "run")));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir / "run" / "model.gopm-model"));
  EXPECT_TRUE(fs::exists(dir / "run" / "steps.csv"));
  EXPECT_TRUE(fs::exists(dir / "run" / "curves" / "finetune.csv"));
  EXPECT_TRUE(fs::exists(dir / "run" / "sweeps" / "step1_hidden.csv"));
  const json run = read_json(dir / "run" / "run.json");
  EXPECT_LE(run.at("steps").get<std::size_t>(), 2u);
  EXPECT_EQ(run.at("schema_version").get<int>(), kRunSchemaVersion);
  EXPECT_NE(r.out.find("test,"), std::string::npos);
  const std::string steps = slurp(dir / "run" / "steps.csv");
  EXPECT_EQ(steps.rfind("step,candidates,best_opset_nodal,best_opset_pool,best_opset_act,best_loss,val_acc,stopped,seconds", 0),
            0u);
}

TEST(CliTrain, MissingMemoryKindIsAConfigError) {
  const fs::path dir = scratch("memkind");
  json cfg = base_config(dir / "run");
  cfg["algorithm"] = "popmem-o";
  const Outcome r = train(write_config(dir, cfg));
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("memory_kind"), std::string::npos) << r.err;
  EXPECT_TRUE(r.out.empty());
}

TEST(CliTrain, UnknownKeysAndBadOverridesAreConfigErrors) {
  const fs::path dir = scratch("unknown");
  json cfg = base_config(dir / "run");
  cfg["search"]["epochz"] = 3;
  Outcome r = train(write_config(dir, cfg));
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("search.epochz"), std::string::npos) << r.err;
  r = train(write_config(dir, base_config(dir / "run"), "ok.json"), {"template.hidden=[2]"});
  EXPECT_EQ(r.code, kExitConfig);
  r = train(dir / "missing.json");
  EXPECT_EQ(r.code, kExitIo);
}

TEST(CliTrain, RerunAndConfigEchoReproduceTheModelBytes) {
  const fs::path dir = scratch("rerun");
  ASSERT_EQ(train(write_config(dir, base_config(dir / "a"), "a.json")).code, kExitOk);
  ASSERT_EQ(train(write_config(dir, base_config(dir / "b"), "b.json")).code, kExitOk);
  const std::string a = slurp(dir / "a" / "model.gopm-model");
  EXPECT_EQ(a, slurp(dir / "b" / "model.gopm-model"));

  json echo = json::parse(load_model(dir / "a" / "model.gopm-model").metadata.config_json);
  echo["output"] = {{"dir", (dir / "c").string()}};
  ASSERT_EQ(train(write_config(dir, echo, "echo.json")).code, kExitOk);
  EXPECT_EQ(a, slurp(dir / "c" / "model.gopm-model"));
}

TEST(CliEval, TrainSplitAccuracyMatchesTheRunSummary) {
  const fs::path dir = scratch("eval");
  ASSERT_EQ(train(write_config(dir, base_config(dir / "run"))).code, kExitOk);
  const json run = read_json(dir / "run" / "run.json");
  for (const std::string split : {"train", "val", "test"}) {
    EvalArgs args;
    args.model = dir / "run" / "model.gopm-model";
    args.data = dir / "run" / "dataset.csv";
    args.split_manifest = dir / "run" / "splits.csv";
    args.split = split;
    args.predictions = dir / ("pred_" + split + ".csv");
    const Outcome r = eval(args);
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NEAR(stdout_accuracy(r.out), run.at("accuracy").at(split).get<double>(), 1e-12) << split;
    EXPECT_EQ(slurp(args.predictions).rfind("sample_index,true,predicted,score_", 0), 0u);
  }
}

TEST(CliEval, CsvWithExtraColumnsIsAccepted) {
  const fs::path dir = scratch("extra");
  {
    std::ofstream csv(dir / "d.csv");
    csv << "junk,a,b,label,c\n";
    for (int i = 0; i < 60; ++i) {
      const int cls = i % 2;
      csv << "zz" << i << ',' << (cls ? 3.0 : -3.0) + 0.01 * i << ',' << 0.02 * (i % 7) << ','
          << (cls ? "yes" : "no") << ',' << (cls ? -2.0 : 2.0) << '\n';
    }
  }
  json cfg = base_config(dir / "run");
  cfg["template"]["hidden"] = {4};
  cfg["data"] = {{"source", "csv"}, {"path", (dir / "d.csv").string()}, {"feature_columns", {"a", "b", "c"}}};
  const Outcome t = train(write_config(dir, cfg));
  ASSERT_EQ(t.code, kExitOk) << t.err;
  EvalArgs args;
  args.model = dir / "run" / "model.gopm-model";
  args.data = dir / "d.csv";
  args.predictions = dir / "pred.csv";
  const Outcome r = eval(args);
  EXPECT_EQ(r.code, kExitOk) << r.err;
}

TEST(CliEval, DimensionMismatchAndCorruptModel) {
  const fs::path dir = scratch("evalerr");
  ASSERT_EQ(train(write_config(dir, base_config(dir / "run"))).code, kExitOk);
  std::ofstream(dir / "narrow.csv") << "p,q,label\n1,2,0\n3,4,1\n";
  EvalArgs args;
  args.model = dir / "run" / "model.gopm-model";
  args.data = dir / "narrow.csv";
  args.predictions = dir / "pred.csv";
  Outcome r = eval(args);
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("expects 4 features, data has 2"), std::string::npos) << r.err;

  const std::string bytes = slurp(args.model);
  std::ofstream(dir / "cut.gopm-model", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  args.model = dir / "cut.gopm-model";
  args.data = dir / "run" / "dataset.csv";
  r = eval(args);
  EXPECT_EQ(r.code, kExitIo);
  EXPECT_NE(r.err.find("corrupt"), std::string::npos) << r.err;
}

TEST(CliReport, MediansMatchIndividualRuns) {
  const fs::path dir = scratch("report");
  std::vector<double> test_acc;
  for (int seed : {1, 2, 3}) {
    json cfg = base_config(dir / "runs" / ("fast" + std::to_string(seed)));
    cfg["run_seed"] = seed;
    ASSERT_EQ(train(write_config(dir, cfg)).code, kExitOk);
    test_acc.push_back(read_json(dir / "runs" / ("fast" + std::to_string(seed)) / "run.json")["accuracy"]["test"]);
  }
  json mem = base_config(dir / "runs" / "memo");
  mem["algorithm"] = "popmem-o";
  mem["memory_kind"] = "pca";
  ASSERT_EQ(train(write_config(dir, mem)).code, kExitOk);

  const Outcome r = report(dir / "runs");
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream table(slurp(dir / "runs" / "comparison.csv"));
  std::string line;
  std::getline(table, line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(table, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][0], "popfast");
  EXPECT_EQ(rows[0][2], "3");
  EXPECT_DOUBLE_EQ(std::stod(rows[0][3]), oracle::median(test_acc));
  EXPECT_EQ(rows[1][0], "popmem-o-pca");
  EXPECT_EQ(rows[1][2], "1");
  EXPECT_TRUE(fs::exists(dir / "runs" / "comparison_long.csv"));
}

TEST(CliReport, SingleRunGivesOneRow) {
  const fs::path dir = scratch("report1");
  ASSERT_EQ(train(write_config(dir, base_config(dir / "runs" / "only"))).code, kExitOk);
  const Outcome r = report(dir / "runs");
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 2);
}

TEST(CliReport, MixedSchemaAndEmptyDirectoriesAreConfigErrors) {
  const fs::path dir = scratch("report_bad");
  fs::create_directories(dir / "empty");
  Outcome r = report(dir / "empty");
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_EQ(report(dir / "nope").code, kExitConfig);

  ASSERT_EQ(train(write_config(dir, base_config(dir / "runs" / "a"))).code, kExitOk);
  fs::create_directories(dir / "runs" / "old");
  json old = read_json(dir / "runs" / "a" / "run.json");
  old["schema_version"] = 0;
  std::ofstream(dir / "runs" / "old" / "run.json") << old.dump();
  r = report(dir / "runs");
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find((dir / "runs" / "old" / "run.json").string()), std::string::npos) << r.err;
}

TEST(CliInspect, PrintsManifest) {
  const fs::path dir = scratch("inspect");
  ASSERT_EQ(train(write_config(dir, base_config(dir / "run"))).code, kExitOk);
  std::ostringstream out, err;
  EXPECT_EQ(cmd_inspect(dir / "run" / "model.gopm-model", out, err), kExitOk);
  EXPECT_NE(out.str().find("\"opset_name\""), std::string::npos);
  EXPECT_EQ(cmd_inspect(dir / "missing.gopm-model", out, err), kExitIo);
}
