#pragma once

#include <cstdint>
#include <random>

namespace armle {

/// SplitMix64 finalizer; used to derive independent substream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Deterministic generator: std::mt19937_64 for raw bits, 53-bit uniforms,
/// and Marsaglia's polar method for standard normals. Every value it returns
/// is a pure function of the seed, so a given (seed, replicate) pair replays
/// identically within one build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream for replicate `index` of a run seeded with `seed`.
  static Rng substream(std::uint64_t seed, std::uint64_t index);

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace armle
