#include "scmprobe/rng.hpp"

#include <stdexcept>

namespace scmprobe {

namespace {

std::uint64_t splitmix64_step(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() { return splitmix64_step(state_); }

std::uint64_t Rng::uniform(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::uniform: bound must be > 0");
  // Reject the tail of the 64-bit range that would bias small residues.
  std::uint64_t threshold = (0ULL - bound) % bound;
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

std::int64_t Rng::uniform_range(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw std::invalid_argument("Rng::uniform_range: lo > hi");
  std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  // span == 0 means the full 64-bit range.
  std::uint64_t r = (span == 0) ? next_u64() : uniform(span);
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + r);
}

double Rng::uniform_real() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t stable_hash64(std::uint64_t seed, std::string_view id,
                            std::uint64_t channel) {
  std::uint64_t x = seed;
  std::uint64_t a = splitmix64_step(x);
  x ^= fnv1a64(id);
  std::uint64_t b = splitmix64_step(x);
  x ^= channel * 0x9e3779b97f4a7c15ULL;
  std::uint64_t c = splitmix64_step(x);
  return a ^ (b << 1) ^ c;
}

}  // namespace scmprobe
