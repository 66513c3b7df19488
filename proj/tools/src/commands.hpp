#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gopforge::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,       // config, validation, dimension mismatch, bad input
  kExitProgression = 3,  // the progression could not complete
  kExitIo = 4,           // unreadable, unwritable or corrupt files
};

inline constexpr int kRunSchemaVersion = 1;

struct TrainArgs {
  std::filesystem::path config;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::vector<std::string> overrides;  // key.path=value
  bool quiet = false;
};

struct EvalArgs {
  std::filesystem::path model;
  std::filesystem::path data;
  std::filesystem::path split_manifest;
  std::string split;  // restricts rows when a manifest is given
  std::filesystem::path predictions;  // defaults next to the model
};

struct ReportArgs {
  std::filesystem::path run_dir;
  std::filesystem::path out;  // defaults to run_dir
};

// Each command prints machine-readable results on `out`, human messages on
// `err`, and returns an ExitCode.
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);
int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err);
int cmd_inspect(const std::filesystem::path& model, std::ostream& out, std::ostream& err);

// Runs `body`, translating library exceptions into exit codes.
int guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace gopforge::cli
