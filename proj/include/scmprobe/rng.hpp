#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace scmprobe {

// Deterministic 64-bit generator (splitmix64). The standard <random>
// distributions are implementation-defined, so every seeded draw in this
// project goes through this engine to keep datasets, interventions and
// simulated transcripts byte-identical across platforms and reruns.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform in [0, bound), bound > 0. Rejection sampling, no modulo bias.
  std::uint64_t uniform(std::uint64_t bound);

  // Uniform in [lo, hi], inclusive on both ends.
  std::int64_t uniform_range(std::int64_t lo, std::int64_t hi);

  // Uniform in [0, 1) with 53 random bits.
  double uniform_real();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// FNV-1a over bytes; stable across platforms.
std::uint64_t fnv1a64(std::string_view s);

// Mixes a seed, a string id and a small channel tag into one 64-bit value.
// Used to derive per-instance latent draws that must not depend on call
// order (the simulator keys instance behavior off these).
std::uint64_t stable_hash64(std::uint64_t seed, std::string_view id,
                            std::uint64_t channel);

}  // namespace scmprobe
