#include "binary_io.hpp"

#include <fstream>
#include <iterator>

#include "gopforge/error.hpp"

namespace gopforge::detail {

ByteReader::ByteReader(std::string data, std::string source)
    : data_(std::move(data)), source_(std::move(source)) {}

void ByteReader::need(std::size_t n) const {
  if (data_.size() - pos_ < n)
    throw IoError(source_ + ": truncated or corrupt file (needed " + std::to_string(n) +
                  " bytes at offset " + std::to_string(pos_) + ", " +
                  std::to_string(data_.size() - pos_) + " left)");
}

std::string ByteReader::bytes(std::size_t n) {
  need(n);
  std::string s = data_.substr(pos_, n);
  pos_ += n;
  return s;
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
  pos_ += 8;
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return data;
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("error writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

}  // namespace gopforge::detail
