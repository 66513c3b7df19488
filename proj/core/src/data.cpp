#include "gopforge/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "binary_io.hpp"
#include "gopforge/error.hpp"
#include "gopforge/rng.hpp"

namespace gopforge {

namespace {

constexpr std::uint32_t kGopmVersion = 1;

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

// Splits one CSV record; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q.push_back('"');
    q.push_back(c);
  }
  q.push_back('"');
  return q;
}

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

Dataset parse_csv(std::istream& in, const CsvSchema& schema, std::string_view source) {
  const std::string src(source);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw ParseError(src + ": empty file (no header row)");

  const std::vector<std::string> header = split_record(line);
  auto find_column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(src + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t label_col = find_column(schema.label_column);
  std::vector<std::size_t> feature_cols;
  Dataset ds;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == label_col) continue;
      feature_cols.push_back(c);
      ds.feature_names.push_back(header[c]);
    }
  } else {
    for (const auto& name : schema.feature_columns) {
      feature_cols.push_back(find_column(name));
      ds.feature_names.push_back(name);
    }
  }
  if (feature_cols.empty()) throw ParseError(src + ": no feature columns");

  std::map<std::string, std::size_t> label_index;
  ds.class_names = schema.class_names;
  for (std::size_t i = 0; i < ds.class_names.size(); ++i) label_index[ds.class_names[i]] = i;
  const bool fixed_vocabulary = !schema.class_names.empty();

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_record(line);
    if (fields.size() != header.size())
      throw ParseError(src + ": row " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields, header has " +
                       std::to_string(header.size()));
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const std::size_t c = feature_cols[k];
      double v = 0.0;
      if (!parse_double(fields[c], v))
        throw ParseError(src + ": row " + std::to_string(line_no) + ", column '" + header[c] +
                         "': not a finite number: '" + fields[c] + "'");
      values.push_back(v);
    }
    const std::string& label = fields[label_col];
    if (label.empty())
      throw ParseError(src + ": row " + std::to_string(line_no) + ": empty label");
    auto it = label_index.find(label);
    if (it == label_index.end()) {
      if (fixed_vocabulary)
        throw ParseError(src + ": row " + std::to_string(line_no) + ": unknown label '" + label + "'");
      it = label_index.emplace(label, ds.class_names.size()).first;
      ds.class_names.push_back(label);
    }
    ds.labels.push_back(it->second);
    ++rows;
  }
  if (rows == 0) throw ParseError(src + ": no data rows");
  ds.x = Matrix(rows, feature_cols.size(), std::move(values));
  ds.class_count = ds.class_names.size();
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return parse_csv(in, schema, path.string());
}

void write_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::ostringstream os;
  for (std::size_t c = 0; c < ds.x.cols(); ++c) {
    const std::string name = c < ds.feature_names.size() ? ds.feature_names[c] : "f" + std::to_string(c);
    os << csv_field(name) << ',';
  }
  os << "label\n";
  for (std::size_t r = 0; r < ds.x.rows(); ++r) {
    for (std::size_t c = 0; c < ds.x.cols(); ++c) os << format_double(ds.x(r, c)) << ',';
    const std::size_t y = ds.labels[r];
    os << csv_field(y < ds.class_names.size() ? ds.class_names[y] : std::to_string(y)) << '\n';
  }
  detail::write_file(path, os.str());
}

Dataset split_dataset(Dataset ds, const SplitFractions& f, std::uint64_t seed) {
  if (f.train < 0 || f.val < 0 || f.test < 0 || std::abs(f.train + f.val + f.test - 1.0) > 1e-9)
    throw ValidationError("split fractions must be non-negative and sum to 1");
  if (!(f.train > 0)) throw ValidationError("train fraction must be positive");
  const std::size_t n = ds.x.rows();
  const std::size_t nonzero = 1 + (f.val > 0) + (f.test > 0);

  std::vector<std::vector<std::size_t>> by_class(ds.class_count);
  for (std::size_t i = 0; i < n; ++i) by_class.at(ds.labels[i]).push_back(i);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < nonzero)
      throw ValidationError("class '" + (c < ds.class_names.size() ? ds.class_names[c] : std::to_string(c)) +
                            "' has " + std::to_string(by_class[c].size()) + " samples, " +
                            std::to_string(nonzero) + " splits need at least one each");
  }

  // Within-class shuffle, then interleave classes by relative position so
  // every prefix of the order is close to class-proportional.
  RngStream rng(seed, derive_stream_id({0x5B117ULL}));
  struct Keyed {
    double key;
    std::uint64_t tie;
    std::size_t index;
    std::size_t cls;
  };
  std::vector<Keyed> order;
  order.reserve(n);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    RngStream class_rng = rng.split(c);
    shuffle(std::span<std::size_t>(by_class[c]), class_rng);
    const double nc = static_cast<double>(by_class[c].size());
    for (std::size_t j = 0; j < by_class[c].size(); ++j)
      order.push_back({(static_cast<double>(j) + 0.5) / nc, class_rng.next_u64(), by_class[c][j], c});
  }
  std::sort(order.begin(), order.end(), [](const Keyed& a, const Keyed& b) {
    return a.key != b.key ? a.key < b.key : a.tie < b.tie;
  });

  const auto count = [n](double frac) {
    return static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
  };
  std::size_t n_train = std::clamp<std::size_t>(count(f.train), 1, n);
  std::size_t n_val = std::min(count(f.val), n - n_train);
  if (f.test == 0) n_val = n - n_train;

  ds.split.assign(n, Split::kTest);
  for (std::size_t p = 0; p < n; ++p) {
    const Split s = p < n_train ? Split::kTrain : p < n_train + n_val ? Split::kVal : Split::kTest;
    ds.split[order[p].index] = s;
  }

  // Guarantee Train presence: swap the class's earliest non-Train sample
  // with the last Train sample of a class that has more than one.
  std::vector<std::size_t> train_count(ds.class_count, 0);
  for (std::size_t p = 0; p < n_train; ++p) ++train_count[order[p].cls];
  for (std::size_t c = 0; c < ds.class_count; ++c) {
    if (train_count[c] > 0) continue;
    std::size_t src = n_train;
    while (order[src].cls != c) ++src;
    std::size_t dst = n_train;
    while (dst-- > 0)
      if (train_count[order[dst].cls] > 1) break;
    if (dst >= n_train) throw ValidationError("cannot place every class in the train split");
    std::swap(ds.split[order[src].index], ds.split[order[dst].index]);
    --train_count[order[dst].cls];
    ++train_count[c];
    std::swap(order[src], order[dst]);
  }
  return ds;
}

Standardization fit_standardization(const Dataset& ds) {
  const std::size_t d = ds.x.cols();
  Standardization s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  std::vector<std::size_t> rows = ds.split.empty() ? std::vector<std::size_t>() : indices_of(ds, Split::kTrain);
  if (ds.split.empty()) {
    rows.resize(ds.x.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  }
  if (rows.empty()) throw ValidationError("standardization needs at least one train row");
  const double n = static_cast<double>(rows.size());
  for (std::size_t r : rows)
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += ds.x(r, c);
  for (auto& m : s.mean) m /= n;
  for (std::size_t r : rows)
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = ds.x(r, c) - s.mean[c];
      s.stddev[c] += dv * dv;
    }
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(s.stddev[c] / n);
    s.stddev[c] = sd > 1e-12 * (1.0 + std::abs(s.mean[c])) ? sd : 0.0;
  }
  return s;
}

Matrix apply_standardization(const Standardization& s, const Matrix& x) {
  if (s.mean.size() != x.cols() || s.stddev.size() != x.cols())
    throw ShapeError("standardization has " + std::to_string(s.mean.size()) +
                     " columns, data has " + std::to_string(x.cols()));
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c)
      out(r, c) = s.stddev[c] == 0.0 ? 0.0 : (x(r, c) - s.mean[c]) / s.stddev[c];
  return out;
}

void standardize(Dataset& ds) {
  Standardization s = fit_standardization(ds);
  ds.x = apply_standardization(s, ds.x);
  ds.standardization = std::move(s);
}

std::vector<std::size_t> indices_of(const Dataset& ds, Split s) {
  if (ds.split.size() != ds.x.rows()) throw ContractError("dataset has not been split");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.split.size(); ++i)
    if (ds.split[i] == s) idx.push_back(i);
  return idx;
}

Matrix features_of(const Dataset& ds, Split s) {
  const auto idx = indices_of(ds, s);
  return select_rows(ds.x, idx);
}

std::vector<std::size_t> labels_of(const Dataset& ds, Split s) {
  std::vector<std::size_t> out;
  for (std::size_t i : indices_of(ds, s)) out.push_back(ds.labels[i]);
  return out;
}

Dataset make_synthetic(const SyntheticParams& p, std::uint64_t seed) {
  if (p.samples < p.classes) throw ValidationError("synthetic: samples must be >= classes");
  if (p.classes < 2) throw ValidationError("synthetic: classes must be >= 2");
  if (p.dims < 1) throw ValidationError("synthetic: dims must be >= 1");
  if (!(p.noise >= 0.0) || !std::isfinite(p.noise)) throw ValidationError("synthetic: noise must be >= 0");

  Dataset ds;
  ds.class_count = p.classes;
  for (std::size_t c = 0; c < p.classes; ++c) ds.class_names.push_back(std::to_string(c));
  for (std::size_t d = 0; d < p.dims; ++d) ds.feature_names.push_back("f" + std::to_string(d));
  ds.x = Matrix(p.samples, p.dims);
  ds.labels.resize(p.samples);
  RngStream rng(seed, derive_stream_id({0xDA7AULL, static_cast<std::uint64_t>(p.kind)}));

  switch (p.kind) {
    case SyntheticKind::kBlobs: {
      if (p.dims < p.classes) throw ValidationError("synthetic blobs: dims must be >= classes");
      if (!(p.separation >= 0.0) || !(p.noise > 0.0))
        throw ValidationError("synthetic blobs: separation must be >= 0 and noise > 0");
      const double offset = p.separation * p.noise / std::numbers::sqrt2;
      for (std::size_t i = 0; i < p.samples; ++i) {
        const std::size_t c = i % p.classes;
        ds.labels[i] = c;
        for (std::size_t d = 0; d < p.dims; ++d)
          ds.x(i, d) = (d == c ? offset : 0.0) + p.noise * rng.normal();
      }
      break;
    }
    case SyntheticKind::kMoons: {
      if (p.classes != 2) throw ValidationError("synthetic moons: classes must be 2");
      if (p.dims < 2) throw ValidationError("synthetic moons: dims must be >= 2");
      for (std::size_t i = 0; i < p.samples; ++i) {
        const std::size_t c = i % 2;
        const double t = std::numbers::pi * rng.next_double();
        ds.labels[i] = c;
        ds.x(i, 0) = (c == 0 ? std::cos(t) : 1.0 - std::cos(t)) + p.noise * rng.normal();
        ds.x(i, 1) = (c == 0 ? std::sin(t) : 0.5 - std::sin(t)) + p.noise * rng.normal();
        for (std::size_t d = 2; d < p.dims; ++d) ds.x(i, d) = p.noise * rng.normal();
      }
      break;
    }
    case SyntheticKind::kLayeredXor: {
      if (p.dims < 2 || p.dims % 2 != 0) throw ValidationError("synthetic layered_xor: dims must be even and >= 2");
      const std::size_t pairs = p.dims / 2;
      if (pairs < 63 && p.classes > (std::size_t{1} << pairs))
        throw ValidationError("synthetic layered_xor: classes must be <= 2^(dims/2)");
      for (std::size_t i = 0; i < p.samples; ++i) {
        std::size_t code = 0;
        std::size_t parity = 0;
        for (std::size_t j = 0; j < pairs; ++j) {
          const double a = rng.uniform(-1.0, 1.0);
          const double b = rng.uniform(-1.0, 1.0);
          const std::size_t factor = (a > 0) != (b > 0) ? 1 : 0;
          parity ^= factor;
          if (j < 63) code |= factor << j;
          ds.x(i, 2 * j) = a + p.noise * rng.normal();
          ds.x(i, 2 * j + 1) = b + p.noise * rng.normal();
        }
        ds.labels[i] = p.classes == 2 ? parity : code % p.classes;
      }
      break;
    }
  }
  check_finite(ds.x, "synthetic data");
  return ds;
}

void write_gopm(const std::filesystem::path& path, const Matrix& m) {
  detail::ByteWriter w;
  w.bytes("GOPM");
  w.u32(kGopmVersion);
  w.u64(m.rows());
  w.u64(m.cols());
  for (double v : m.data()) w.f64(v);
  detail::write_file(path, w.str());
}

Matrix read_gopm(const std::filesystem::path& path) {
  detail::ByteReader r(detail::read_file(path), path.string());
  if (r.bytes(4) != "GOPM") throw IoError(path.string() + ": not a GOPM matrix file");
  const std::uint32_t version = r.u32();
  if (version != kGopmVersion)
    throw IoError(path.string() + ": unsupported GOPM version " + std::to_string(version));
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  if (cols != 0 && rows > r.remaining() / 8 / cols)
    throw IoError(path.string() + ": truncated or corrupt file (header claims " +
                  std::to_string(rows) + "x" + std::to_string(cols) + ")");
  std::vector<double> values(rows * cols);
  for (auto& v : values) v = r.f64();
  if (r.remaining() != 0) throw IoError(path.string() + ": trailing bytes after matrix payload");
  if (!all_finite(values)) throw IoError(path.string() + ": non-finite values in matrix");
  return Matrix(rows, cols, std::move(values));
}

void write_split_manifest(const std::filesystem::path& path, const std::vector<Split>& split) {
  std::ostringstream os;
  os << "sample_index,split\n";
  for (std::size_t i = 0; i < split.size(); ++i) os << i << ',' << to_string(split[i]) << '\n';
  detail::write_file(path, os.str());
}

std::vector<Split> read_split_manifest(const std::filesystem::path& path, std::size_t samples) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != "sample_index,split")
    throw ParseError(path.string() + ": expected header 'sample_index,split'");
  std::vector<Split> split(samples, Split::kTrain);
  std::vector<bool> seen(samples, false);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_record(line);
    std::size_t idx = 0;
    const auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), idx);
    if (fields.size() != 2 || ec != std::errc() || ptr != fields[0].data() + fields[0].size())
      throw ParseError(path.string() + ": row " + std::to_string(line_no) + ": malformed entry");
    if (idx >= samples || seen[idx])
      throw ParseError(path.string() + ": row " + std::to_string(line_no) + ": sample index " +
                       std::to_string(idx) + " out of range or repeated");
    seen[idx] = true;
    split[idx] = parse_split(fields[1]);
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw ParseError(path.string() + ": does not cover all " + std::to_string(samples) + " samples");
  return split;
}

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val" || name == "validation") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ParseError("unknown split '" + std::string(name) + "'");
}

std::string_view to_string(SyntheticKind k) noexcept {
  switch (k) {
    case SyntheticKind::kBlobs: return "blobs";
    case SyntheticKind::kMoons: return "moons";
    case SyntheticKind::kLayeredXor: return "layered_xor";
  }
  return "?";
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "blobs") return SyntheticKind::kBlobs;
  if (name == "moons") return SyntheticKind::kMoons;
  if (name == "layered_xor") return SyntheticKind::kLayeredXor;
  throw ParseError("unknown synthetic dataset kind '" + std::string(name) + "'");
}

}  // namespace gopforge
