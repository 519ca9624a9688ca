#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace lcsac {

/// Deterministic pseudo-random generator (xoshiro256++ core, splitmix64
/// seeding). Self-contained so that streams are bit-identical across standard
/// libraries and platforms; every stochastic component of the system draws
/// from its own named stream derived from the master seed.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed);

  /// Independent stream for a purpose: seed is mixed with a hash of `tag`
  /// (and an optional index) so e.g. "env" and "action-noise" never collide.
  static Rng derive(std::uint64_t master_seed, std::string_view tag,
                    std::uint64_t index = 0);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n), n > 0. Rejection sampling, no modulo bias.
  std::int64_t uniform_int(std::int64_t n);
  /// Standard normal via Box-Muller; the spare value is cached.
  double normal();

 private:
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// 64-bit FNV-1a, used for stream tags and content hashes (context freshness
/// checks, config hashing).
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t seed = 14695981039346656037ull);

}  // namespace lcsac
