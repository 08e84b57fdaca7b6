#pragma once

#include <cstdint>
#include <vector>

namespace tbp {

// splitmix64: tiny, fast, and bit-reproducible across platforms.  The standard
// library distributions are implementation-defined, so everything that must be
// byte-identical between runs draws from this.
inline uint64_t splitmix64_mix(uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform in [-b, b].
  double symmetric(double b) { return (2.0 * uniform01() - 1.0) * b; }

  uint64_t below(uint64_t n) { return next() % n; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

// Independent per-record stream: deterministic in (master_seed, index) and
// order-independent, so records can be produced by any number of workers.
inline Rng record_stream(uint64_t master_seed, uint64_t index) {
  return Rng(splitmix64_mix(master_seed) ^ splitmix64_mix(index ^ 0x517CC1B727220A95ULL));
}

}  // namespace tbp
