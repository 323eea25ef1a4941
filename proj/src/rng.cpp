#include "polylab/rng.hpp"

namespace polylab {

std::uint64_t counter_hash(std::uint64_t seed, int k, std::span<const std::int64_t> coords) {
  std::uint64_t h = splitmix64_mix(seed ^ kGolden);
  h = splitmix64_mix(h ^ (static_cast<std::uint64_t>(k + 1) * kGolden));
  for (std::int64_t c : coords) h = splitmix64_mix(h ^ (static_cast<std::uint64_t>(c) * kGolden));
  return h;
}

}  // namespace polylab
