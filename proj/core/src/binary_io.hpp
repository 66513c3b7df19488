#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gopforge::detail {

// Little-endian byte sink, independent of host byte order.
class ByteWriter {
 public:
  void bytes(std::string_view s) { out_.append(s); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  const std::string& str() const noexcept { return out_; }

 private:
  std::string out_;
};

// Bounds-checked reader; every underrun throws IoError naming `source`.
class ByteReader {
 public:
  ByteReader(std::string data, std::string source);

  std::string bytes(std::size_t n);
  std::uint32_t u32();
  std::uint64_t u64();
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  const std::string& source() const noexcept { return source_; }

 private:
  void need(std::size_t n) const;
  std::string data_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);
// Writes via a temporary sibling and renames, so readers never see a partial file.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace gopforge::detail
