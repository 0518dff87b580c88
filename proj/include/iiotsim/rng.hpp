#ifndef IIOTSIM_RNG_HPP_
#define IIOTSIM_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace iiotsim::rng {

// Counter-style splitmix64 stream. Every stochastic draw in the project goes
// through this type so that runs are bit-reproducible across platforms;
// <random> distributions are implementation-defined and would break the
// byte-identical replay contract. State is a single u64, which makes
// checkpointing trivial.
class Stream {
 public:
  Stream() : state_(0x9e3779b97f4a7c15ull) {}
  explicit Stream(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform real in [lo, hi].
  double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [lo, hi], inclusive, rejection-sampled (no modulo bias).
  int64_t uniform_int(int64_t lo, int64_t hi) {
    const uint64_t range = static_cast<uint64_t>(hi - lo) + 1;
    if (range == 0) return lo + static_cast<int64_t>(next_u64());  // full 2^64 span
    const uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return lo + static_cast<int64_t>(r % range);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller (one value per call, the pair's second
  // half is discarded to keep the draw count predictable).
  double normal01();

  uint64_t state() const { return state_; }
  void set_state(uint64_t s) { state_ = s; }

 private:
  uint64_t state_;
};

inline double Stream::normal01() {
  // u in (0,1] so log() stays finite.
  double u = 1.0 - uniform01();
  double v = uniform01();
  constexpr double two_pi = 6.283185307179586476925286766559;
  double r = -2.0 * std::log(u);
  return std::sqrt(r) * std::cos(two_pi * v);
}

// Hash-combines seed components into a fresh stream seed. Used to derive
// independent substreams (per episode, per update, per seed) from one master
// seed so that parallel collection stays order-independent.
inline uint64_t mix(std::initializer_list<uint64_t> parts) {
  uint64_t h = 0x243f6a8885a308d3ull;  // arbitrary nonzero start
  for (uint64_t p : parts) {
    h ^= p + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    Stream s(h);
    h = s.next_u64();
  }
  return h;
}

}  // namespace iiotsim::rng

#endif  // IIOTSIM_RNG_HPP_
