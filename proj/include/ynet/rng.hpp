#pragma once

// Seedable, portable random number generation. Every stochastic choice in the
// project flows from one top-level seed through derive_seed(), so datasets and
// training runs are reproducible across platforms and compilers.
//
// Generators:
//  * SplitMix64 (Steele/Lea/Flood): state += 0x9E3779B97F4A7C15; output mix is
//    z ^= z>>30, z *= 0xBF58476D1CE4E5B9, z ^= z>>27, z *= 0x94D049BB133111EB,
//    z ^= z>>31. Used for seed derivation and to seed the main generator.
//  * xoshiro256++ (Blackman/Vigna): 4x64-bit state, output rotl(s0+s3,23)+s0.
//    Used for all draws.
//
// Mappings:
//  * uniform01() takes the top 53 bits: (u64 >> 11) * 2^-53, giving [0,1).
//  * uniform_below(n) is Lemire's unbiased multiply-with-rejection method.
//  * gaussian() is Box-Muller; consumes exactly two uniforms per call.
//  * shuffle() is backwards Fisher-Yates driven by uniform_below.

#include <cmath>
#include <cstdint>
#include <vector>

namespace ynet {

struct SplitMix64 {
  uint64_t state = 0;
  uint64_t next() {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

// derived = SplitMix64 output of (base + (stream+1) * golden-gamma). Distinct
// streams of one base seed never collide for stream < 2^63.
inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
  SplitMix64 sm{base + (stream + 1) * 0x9E3779B97F4A7C15ull};
  return sm.next();
}

// Fixed stream tags; sub-seeds are derive_seed(derive_seed(seed, tag), index).
namespace seed_tag {
constexpr uint64_t kInit = 1;     // parameter initialization
constexpr uint64_t kPhantom = 2;  // per-volume phantom generation
constexpr uint64_t kEpoch = 3;    // per-epoch shuffling
constexpr uint64_t kNoise = 4;    // voxel noise within one phantom
}  // namespace seed_tag

class Rng {
public:
  explicit Rng(uint64_t seed) {
    SplitMix64 sm{seed};
    for (auto& s : s_) s = sm.next();
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  uint64_t uniform_below(uint64_t n) {
    unsigned __int128 m = (unsigned __int128)next_u64() * n;
    auto lo = (uint64_t)m;
    if (lo < n) {
      const uint64_t t = (0 - n) % n;
      while (lo < t) {
        m = (unsigned __int128)next_u64() * n;
        lo = (uint64_t)m;
      }
    }
    return (uint64_t)(m >> 64);
  }

  double gaussian(double mean, double stddev) {
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = (size_t)uniform_below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
};

}  // namespace ynet
