#pragma once

#include <cmath>
#include <cstdint>

namespace rpw {

// Counter-based keyed randomness. Every consumer derives a key from the
// master seed plus a tag path (cell coordinates, trial index, ...) and then
// reads an independent stream. Streams are pure functions of (key, counter),
// so point fields and trial outputs do not depend on query or thread order.

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

inline std::uint64_t mix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (b * 0xd6e8feb86659fd93ull) ^ kGolden);
}

// Stream tags; keep distinct so independent subsystems never share a stream.
enum : std::uint64_t {
  kTagCell = 0x11,
  kTagChain = 0x22,
  kTagTrial = 0x33,
  kTagReference = 0x44,
  kTagBootstrap = 0x55,
  kTagScratch = 0x66,
};

struct StreamRng {
  std::uint64_t key = 0;
  std::uint64_t ctr = 0;

  StreamRng() = default;
  explicit StreamRng(std::uint64_t k) : key(k) {}
  StreamRng(std::uint64_t seed, std::uint64_t tag) : key(mix_key(seed, tag)) {}
  StreamRng(std::uint64_t seed, std::uint64_t tag, std::uint64_t a)
      : key(mix_key(mix_key(seed, tag), a)) {}
  StreamRng(std::uint64_t seed, std::uint64_t tag, std::uint64_t a, std::uint64_t b)
      : key(mix_key(mix_key(mix_key(seed, tag), a), b)) {}

  std::uint64_t next_u64() { return mix64(key + (++ctr) * kGolden); }

  // uniform in [0,1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in (0,1], safe as log() argument
  double next_open() { return 1.0 - next_double(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  double exponential() { return -std::log(next_open()); }

  // Box-Muller pair, one value kept per call
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_open();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925287 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Knuth's method; all intensities here have cell means of order 1.
  int poisson(double mean) {
    if (mean <= 0.0) return 0;
    double limit = std::exp(-mean);
    double prod = 1.0;
    int k = 0;
    do {
      prod *= next_double();
      ++k;
    } while (prod > limit);
    return k - 1;
  }

 private:
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace rpw
