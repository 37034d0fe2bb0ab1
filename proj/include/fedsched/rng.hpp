#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace fedsched {

/// Deterministic random stream. All draws are derived from raw
/// xoshiro-style 64-bit outputs so traces reproduce bit-exactly for a
/// given seed regardless of the standard library in use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // splitmix64 expansion of the seed into the 4-word state.
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
  }

  std::uint64_t next_u64() {
    // xoshiro256** step.
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  int uniform_int(int n) {
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t bound = std::uint64_t(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return int(x % bound);
  }

  /// Exponential with the given rate (mean 1/rate).
  double exponential(double rate) {
    return -std::log1p(-uniform()) / rate;
  }

  /// Standard normal via Box-Muller (second value discarded, keeping the
  /// stream state a pure function of the draw count).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// exp(mu + sigma * Z).
  double lognormal(double mu, double sigma) {
    return std::exp(mu + sigma * normal());
  }

  void shuffle(std::vector<int>& v) {
    for (int i = int(v.size()) - 1; i > 0; --i) {
      std::swap(v[size_t(i)], v[size_t(uniform_int(i + 1))]);
    }
  }

  /// k distinct elements of pool, uniformly, returned sorted.
  std::vector<int> sample_without_replacement(std::vector<int> pool, int k) {
    for (int i = 0; i < k; ++i) {
      const int j = i + uniform_int(int(pool.size()) - i);
      std::swap(pool[size_t(i)], pool[size_t(j)]);
    }
    pool.resize(size_t(k));
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  std::vector<int> permutation(int n) {
    std::vector<int> p(static_cast<size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    shuffle(p);
    return p;
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Deterministic substream seed for (seed, salt, index) triples.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t salt,
                              std::uint64_t index = 0) {
    std::uint64_t x = seed ^ (salt * 0x9e3779b97f4a7c15ULL);
    (void)splitmix64(x);
    x ^= index * 0xd1b54a32d192ed03ULL;
    std::uint64_t x2 = x;
    return splitmix64(x2);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

// Fixed salts for the simulator's named substreams.
namespace stream {
inline constexpr std::uint64_t kFleet = 0x01;
inline constexpr std::uint64_t kData = 0x02;
inline constexpr std::uint64_t kModelInit = 0x03;
inline constexpr std::uint64_t kDeviceTime = 0x04;
inline constexpr std::uint64_t kCurveNoise = 0x05;
inline constexpr std::uint64_t kScheduler = 0x06;
inline constexpr std::uint64_t kPolicyInit = 0x07;
inline constexpr std::uint64_t kPretrain = 0x08;
inline constexpr std::uint64_t kLocalSgd = 0x09;
}  // namespace stream

}  // namespace fedsched
