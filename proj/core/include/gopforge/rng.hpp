#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace gopforge {

// Counter-based generator: draw i of a stream is a pure function of
// (seed, stream_id, i), so sequences are bitwise reproducible on every
// platform and a stream can be split without touching its parent.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t position() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  // Uniform in [0, 1) with 53 random bits.
  double next_double() noexcept;
  // Uniform in [lo, hi); throws ValidationError if lo >= hi.
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller (two draws per value).
  double normal() noexcept;
  // Unbiased integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Independent child stream; the parent's position is unaffected.
  RngStream split(std::uint64_t child_id) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Order-sensitive hash of a tuple of ids, used to name streams, e.g.
// derive_stream_id({step, phase, candidate}).
std::uint64_t derive_stream_id(std::initializer_list<std::uint64_t> parts) noexcept;

std::vector<double> rng_uniform(RngStream& stream, double lo, double hi, std::size_t n);

template <typename T>
void shuffle(std::span<T> items, RngStream& stream) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(stream.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace gopforge
