#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gopforge/data.hpp"
#include "gopforge/network.hpp"

namespace gopforge {

inline constexpr std::uint32_t kModelFormatVersion = 1;

// Run information stored next to the network.
struct ModelMetadata {
  std::uint64_t run_seed = 0;
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;
  std::optional<Standardization> standardization;
  // Echo of the experiment configuration, a JSON object.
  std::string config_json = "{}";
};

struct ModelFile {
  NetworkModel model;
  ModelMetadata metadata;
};

// Layout: "GOPFMODL", u32 format version, u64 manifest length, JSON
// manifest, then every tensor the manifest lists as little-endian f64.
// Wall-clock seconds are not stored, so equal runs give equal bytes.
std::string serialize_model(const NetworkModel& model, const ModelMetadata& meta);
ModelFile deserialize_model(std::string bytes, const std::string& source = "<model>");

void save_model(const std::filesystem::path& path, const NetworkModel& model,
                const ModelMetadata& meta);
// Throws IoError on truncated or corrupt files.
ModelFile load_model(const std::filesystem::path& path);

// Pretty-printed manifest of a model file.
std::string manifest_json(const std::filesystem::path& path);

}  // namespace gopforge
