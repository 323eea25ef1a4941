#pragma once

// Counter-based and sequential generators built on the SplitMix64 finalizer.
// The environment is never stored: the value at (k, x) is a pure function of
// (seed, k, x), so any layer can be regenerated or overridden on demand.

#include <cstdint>
#include <limits>
#include <span>

namespace polylab {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 output finalizer (shifts 30/27/31).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Top 53 bits as a double in [0, 1).
constexpr double to_unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Hash of the word sequence (seed, k + 1, x_1, ..., x_d):
//   h = mix(seed ^ golden); h = mix(h ^ w * golden) for each later word w.
std::uint64_t counter_hash(std::uint64_t seed, int k, std::span<const std::int64_t> coords);

// Uniform in [0, 1) keyed by (seed, k, x).
inline double counter_uniform(std::uint64_t seed, int k, std::span<const std::int64_t> coords) {
  return to_unit_interval(counter_hash(seed, k, coords));
}

// seed_r = mix(base + r * golden).
constexpr std::uint64_t replication_seed(std::uint64_t base, std::uint64_t r) {
  return splitmix64_mix(base + r * kGolden);
}

// Sub-seed for an auxiliary stream; the tag separates purposes (sampling,
// layer resampling, ...) drawn from the same disorder seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t tag) {
  std::uint64_t h = splitmix64_mix(seed ^ kGolden);
  h = splitmix64_mix(h ^ (index * kGolden));
  return splitmix64_mix(h ^ (tag * kGolden));
}

enum class StreamTag : std::uint64_t {
  kPathSampling = 1,
  kLayerResample = 2,
  kMonteCarlo = 3,
};

// Sequential SplitMix64; satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += kGolden;
    return splitmix64_mix(state_);
  }

  double uniform() { return to_unit_interval((*this)()); }

 private:
  std::uint64_t state_;
};

}  // namespace polylab
