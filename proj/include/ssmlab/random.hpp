#pragma once

// Counter-based pseudo-random numbers.
//
// Every draw is a pure function of (key, counter):
//   out_i = mix64(key + i * 0x9E3779B97F4A7C15)
// where mix64 is the SplitMix64 finalizer. Keys are derived from the user seed
// and a fixed per-purpose stream offset, so two modules never share a stream
// and results do not depend on the order in which streams are consumed.
//
// Normals use Box-Muller on two consecutive uniforms (u1 in (0,1], u2 in
// [0,1)); the cosine branch is returned first, the sine branch second.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ssmlab {

/// Fixed stream offsets, one per (module, purpose).
enum class Stream : std::uint64_t {
  ChebyshevCoeffs = 1,
  SystemParams = 2,
  DynSysParams = 3,
  DynSysNoise = 4,
  FarPairs = 5,
  Embedding = 6,
  DataSplit = 7,
  FeatureMap = 8,
  Fixture = 9,
};

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Key for the `index`-th substream of `stream` under `seed`.
constexpr std::uint64_t stream_key(std::uint64_t seed, Stream stream,
                                   std::uint64_t index = 0) noexcept {
  constexpr std::uint64_t kStreamStride = 0xD1B54A32D192ED03ULL;
  constexpr std::uint64_t kIndexStride = 0x8CB92BA72F3D8DD7ULL;
  return mix64(mix64(seed) ^ (static_cast<std::uint64_t>(stream) * kStreamStride) ^
               mix64(index * kIndexStride + 1));
}

class CounterRng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}
  constexpr CounterRng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) noexcept
      : key_(stream_key(seed, stream, index)) {}

  constexpr std::uint64_t at(std::uint64_t counter) const noexcept {
    return mix64(key_ + (counter + 1) * kGamma);
  }

  constexpr std::uint64_t next_u64() noexcept { return at(counter_++); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n) by rejection (no modulo bias). n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x < limit) return x % n;
    }
  }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

  constexpr std::uint64_t counter() const noexcept { return counter_; }

  // UniformRandomBitGenerator interface.
  using result_type = std::uint64_t;
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() noexcept { return next_u64(); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ssmlab
