#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace mmloco {

// Deterministic counter-style RNG built on splitmix64. Streams can be derived
// from arbitrary key tuples (episode seed, step, point index, ...), which keeps
// every draw reproducible regardless of evaluation order or threading.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  // Hash-combines a key tuple into an independent stream.
  static RngStream keyed(std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = 0x2545f4914f6cdd1dULL;
    for (std::uint64_t k : keys) h = mix(h ^ mix(k));
    return RngStream(h);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  // Uniform in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double uniform01_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Cacheless Box-Muller; two uniforms per draw, no hidden state.
  double normal() {
    double u1 = uniform01_open();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double std) { return mean + std * normal(); }

  // Index in [0, n).
  std::uint64_t index(std::uint64_t n) { return next_u64() % n; }

  std::uint64_t state() const { return state_; }
  void set_state(std::uint64_t s) { state_ = s; }

 private:
  std::uint64_t state_ = 0x853c49e6748fea9bULL;
};

}  // namespace mmloco
