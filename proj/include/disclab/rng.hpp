#pragma once

#include <cstdint>
#include <cmath>

namespace disclab {

// Counter-derived random stream: (master seed, stream index) fully determines
// the draw sequence, so parallel Monte Carlo gives the same numbers regardless
// of how tasks are scheduled. Core generator is xoshiro256++, seeded through
// splitmix64. Normal variates use the Marsaglia polar transform with a cached
// spare; the transform is fixed so golden outputs stay stable.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : master_(master_seed), index_(stream_index) {
    std::uint64_t x = master_seed ^ (0x9E3779B97F4A7C15ULL * (stream_index + 1));
    for (auto& word : state_) word = splitmix64(x);
    // xoshiro must not start from the all-zero state
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t master_seed() const { return master_; }
  std::uint64_t stream_index() const { return index_; }

  // Child stream with a derived index; used to give sub-tasks their own streams.
  RngStream substream(std::uint64_t k) const {
    return RngStream(master_, mix_index(index_, k));
  }

  static std::uint64_t mix_index(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a * 0x100000001B3ULL + b + 0x9E3779B97F4A7C15ULL;
    x ^= x >> 31;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 29;
    return x;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // uniform in [0, 1), 53-bit resolution
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in (lo, hi)
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // standard normal, Marsaglia polar method
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_double() - 1.0;
      v = 2.0 * next_double() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t master_;
  std::uint64_t index_;
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace disclab
