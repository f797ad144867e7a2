#pragma once

#include <cstdint>
#include <random>

namespace speckle {

/// Identifies one realization of the ensemble.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t frame_index = 0;
};

/// Independent random streams used while synthesizing one frame.
enum class Stream : std::uint64_t {
  Aperture0 = 0,
  Aperture1 = 1,
  // Second polarization component: apertures offset by 8.
  OrthogonalAperture0 = 8,
  OrthogonalAperture1 = 9,
  CameraNoise = 64,
};

/// SplitMix64 finalizer (Steele, Lea, Flood 2014), used as the integer hash for
/// seed derivation.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// seed = h(h(h(master) ^ frame_index) ^ stream), h = splitmix64.
constexpr std::uint64_t derive_seed(SeedSpec seed, Stream stream) noexcept {
  std::uint64_t h = splitmix64(seed.master_seed);
  h = splitmix64(h ^ seed.frame_index);
  return splitmix64(h ^ static_cast<std::uint64_t>(stream));
}

/// mt19937_64 with hand-written conversions so that sequences are identical
/// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(SeedSpec seed, Stream stream) : engine_(derive_seed(seed, stream)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; caches the second deviate.
  double normal();

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace speckle
