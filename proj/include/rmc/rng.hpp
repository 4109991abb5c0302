#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>

namespace rmc {

// splitmix64 mix of (seed, label); used to derive independent substreams
// from one master seed so that e.g. the observation mask does not move when
// the corruption rate changes.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t label) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (label + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic random source. Distributions are hand-rolled on top of
// mt19937_64 so a seed produces the same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal, Box-Muller
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double rad = std::sqrt(-2.0 * std::log(u1));
    double ang = 6.283185307179586476925286766559 * u2;
    spare_ = rad * std::sin(ang);
    have_spare_ = true;
    return rad * std::cos(ang);
  }

  // unbiased index in [0, n)
  std::size_t index(std::size_t n) {
    std::uint64_t bound = UINT64_MAX - UINT64_MAX % static_cast<std::uint64_t>(n);
    std::uint64_t x = gen_();
    while (x >= bound) x = gen_();
    return static_cast<std::size_t>(x % static_cast<std::uint64_t>(n));
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace rmc
