#pragma once

#include <cstdint>
#include <string_view>

namespace geoloop {

// FNV-1a, used to derive named substream seeds.
std::uint64_t fnv1a64(std::string_view s);

// Deterministic random generator (splitmix64 core) with hand-rolled
// distributions, so streams are bit-identical across platforms and standard
// library implementations. All randomness in the project flows through this.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  // Same root seed + same name -> same stream, regardless of how the parent
  // stream has been consumed.
  Rng substream(std::string_view name) const {
    return Rng(seed_ ^ (fnv1a64(name) | 1u));
  }

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform();
  double uniform(double lo, double hi);

  // Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace geoloop
