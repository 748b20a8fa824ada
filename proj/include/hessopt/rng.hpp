#pragma once

#include <cmath>
#include <cstdint>

namespace hessopt {

// Counter-based pseudo-random stream: the i-th output is a pure function of
// (key, i), so replaying a stream never depends on how far a sibling stream
// has advanced. A run seed is split into independent child streams by label
// (oracle sampling, iterate selection, data generation), which keeps
// trajectories byte-stable when tracing or measurement code is added.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_label = 0)
      : key_(mix(mix(seed) ^ mix(stream_label ^ 0x5851f42d4c957f2dULL))) {}

  // Child stream with an independent key; does not advance this stream.
  RngStream split(std::uint64_t label) const {
    RngStream child(0);
    child.key_ = mix(key_ ^ mix(label + 0x9e3779b97f4a7c15ULL));
    child.counter_ = 0;
    return child;
  }

  std::uint64_t next_u64() { return mix(key_ + 0xd1b54a32d192ed03ULL * ++counter_); }

  // Uniform in [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; always consumes exactly two outputs.
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();  // guard log(0); astronomically rare
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace hessopt
