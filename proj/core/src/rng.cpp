#include "gopforge/rng.hpp"

#include <cmath>
#include <numbers>

#include "gopforge/error.hpp"

namespace gopforge {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t derive_stream_id(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x6A09E667F3BCC908ULL;
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p + kGolden));
  return h;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : seed_(seed), stream_id_(stream_id), key_(mix64(seed ^ mix64(stream_id + kGolden))) {}

std::uint64_t RngStream::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::next_double() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  if (!(lo < hi)) throw ValidationError("RngStream::uniform: requires lo < hi");
  const double v = lo + (hi - lo) * next_double();
  return v < hi ? v : std::nextafter(hi, lo);
}

double RngStream::normal() noexcept {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - next_double();
  const double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) throw ValidationError("RngStream::below: n must be positive");
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

RngStream RngStream::split(std::uint64_t child_id) const noexcept {
  return RngStream(seed_, derive_stream_id({stream_id_, child_id}));
}

std::vector<double> rng_uniform(RngStream& stream, double lo, double hi, std::size_t n) {
  if (!(lo < hi)) throw ValidationError("rng_uniform: requires lo < hi");
  std::vector<double> out(n);
  for (double& v : out) v = stream.uniform(lo, hi);
  return out;
}

}  // namespace gopforge
