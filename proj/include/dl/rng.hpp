#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace dl {

// Deterministic xoshiro256** generator. We avoid std::uniform_* distributions
// so that byte-identical artifacts do not depend on the standard library
// implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) {
    // splitmix64 expansion of the seed into the full state
    uint64_t x = seed;
    for (auto& si : s_) si = splitmix(x);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t uniform_int(uint64_t n) { return n ? next_u64() % n : 0; }

  bool coin() { return (next_u64() & 1u) != 0; }

  // Box-Muller; deterministic, no internal caching.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Independent substream for (this seed, tag). Order-independent: useful for
  // per-episode and per-window streams that must not depend on scheduling.
  static Rng substream(uint64_t seed, uint64_t tag) {
    uint64_t x = seed;
    uint64_t a = splitmix(x);
    x = tag ^ 0x9e3779b97f4a7c15ULL;
    uint64_t b = splitmix(x);
    return Rng(a ^ rotl(b, 31));
  }

  static uint64_t hash_str(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  static uint64_t splitmix(uint64_t& x) {
    uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t s_[4];
};

}  // namespace dl
