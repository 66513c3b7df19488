#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gopforge/matrix.hpp"

namespace gopforge {

enum class Split { kTrain, kVal, kTest };

// Per-column statistics fitted on the Train split.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;  // population std; 0 marks a constant column
  bool operator==(const Standardization&) const = default;
};

struct Dataset {
  Matrix x;                          // samples x features
  std::vector<std::size_t> labels;   // dense class indices
  std::vector<Split> split;          // empty until split_dataset
  std::size_t class_count = 0;
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;
  std::optional<Standardization> standardization;
};

struct CsvSchema {
  std::string label_column = "label";
  // Columns used as features, in this order. Empty selects every column
  // other than the label.
  std::vector<std::string> feature_columns;
  // Fixed label vocabulary. Empty maps labels in first-appearance order;
  // otherwise unknown labels are rejected.
  std::vector<std::string> class_names;
};

// Errors: missing column, non-numeric or non-finite cell, empty input, ragged
// rows; ParseError messages carry the source name plus row/column.
Dataset parse_csv(std::istream& in, const CsvSchema& schema, std::string_view source = "<csv>");
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
// Writes features then the label column (class names), with a header.
void write_csv(const std::filesystem::path& path, const Dataset& ds);

struct SplitFractions {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

// Stratified seeded shuffle followed by a contiguous cut. Split sizes are
// round(n * fraction) for train and val, the rest go to test. Every class
// is guaranteed a Train sample.
Dataset split_dataset(Dataset ds, const SplitFractions& fractions, std::uint64_t seed);

// Mean/std of the Train rows (all rows when the dataset is unsplit).
Standardization fit_standardization(const Dataset& ds);
Matrix apply_standardization(const Standardization& s, const Matrix& x);
// Fits on Train and rewrites every row in place.
void standardize(Dataset& ds);

std::vector<std::size_t> indices_of(const Dataset& ds, Split s);
Matrix features_of(const Dataset& ds, Split s);
std::vector<std::size_t> labels_of(const Dataset& ds, Split s);

enum class SyntheticKind { kBlobs, kMoons, kLayeredXor };

struct SyntheticParams {
  SyntheticKind kind = SyntheticKind::kBlobs;
  std::size_t samples = 1000;
  std::size_t classes = 2;
  std::size_t dims = 2;
  // Blobs: distance between any two centers, in units of sigma.
  double separation = 4.0;
  // Blobs: cluster std. Moons/LayeredXor: Gaussian jitter std.
  double noise = 1.0;
};

// Blobs: class c is centered at (separation * noise / sqrt 2) * e_c, so
// dims >= classes. Moons: two half-circles in the first two dims, remaining
// dims are pure noise. LayeredXor: dims/2 pairs, each pair contributing an
// XOR-of-signs factor; the label is their parity (2 classes) or their
// binary code mod classes.
Dataset make_synthetic(const SyntheticParams& params, std::uint64_t seed);

// GOPM binary matrix: "GOPM", u32 version, u64 rows, u64 cols, then
// little-endian f64 row-major.
void write_gopm(const std::filesystem::path& path, const Matrix& m);
Matrix read_gopm(const std::filesystem::path& path);

// CSV with header sample_index,split.
void write_split_manifest(const std::filesystem::path& path, const std::vector<Split>& split);
std::vector<Split> read_split_manifest(const std::filesystem::path& path, std::size_t samples);

std::string_view to_string(Split s) noexcept;
Split parse_split(std::string_view name);
std::string_view to_string(SyntheticKind k) noexcept;
SyntheticKind parse_synthetic_kind(std::string_view name);

}  // namespace gopforge
