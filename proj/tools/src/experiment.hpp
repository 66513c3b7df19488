#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gopforge/data.hpp"
#include "gopforge/error.hpp"
#include "gopforge/progressive.hpp"
#include "json.hpp"

namespace gopforge::cli {

// Thrown for malformed or inconsistent configuration; maps to exit code 2.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

enum class DataSource { kCsv, kSynthetic, kGopm };

struct DataSpec {
  DataSource source = DataSource::kSynthetic;
  std::string name;                 // label used in reports
  std::filesystem::path path;       // csv or gopm features
  std::filesystem::path labels_path;  // gopm only: one label per line
  CsvSchema schema;
  SyntheticParams synthetic;
  std::uint64_t synthetic_seed = 1;
  SplitFractions fractions;
  std::optional<std::uint64_t> split_seed;  // defaults to the run seed
  std::filesystem::path split_manifest;     // overrides the seeded split
  bool standardize = true;
};

struct ExperimentConfig {
  ProgressiveConfig run;
  DataSpec data;
  std::filesystem::path out_dir = "run";
};

// Parses a config object. Unknown keys are rejected with their path.
ExperimentConfig parse_experiment(const nlohmann::json& j);
// Fully explicit form of a config, without workers and output; parsing it
// back yields the same run.
nlohmann::json normalized_echo(const ExperimentConfig& cfg);
nlohmann::json load_config_file(const std::filesystem::path& path);

// Applies "a.b.c=value" to a config object. The value is parsed as JSON
// when possible and taken as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& assignment);

struct LoadedData {
  Dataset dataset;       // standardized when requested, split assigned
  Dataset raw;           // before standardization
  ProgressiveData progressive;
};

LoadedData load_experiment_data(const DataSpec& spec, std::uint64_t run_seed);

}  // namespace gopforge::cli
