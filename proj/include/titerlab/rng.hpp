#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace titerlab {

// Seeded RNG with explicit draw algorithms. Uniforms come straight from the
// top 53 bits of the engine and exponentials through the inverse CDF, so a
// seed pins down every draw exactly (the std distribution objects leave the
// algorithm implementation-defined).
class RngStream {
public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  // Independent stream for a path index within a master-seeded ensemble.
  static RngStream derive(std::uint64_t master_seed, std::uint64_t index) {
    return RngStream(mix(mix(master_seed) ^ mix(index + 0x9e3779b97f4a7c15ULL)));
  }

  std::uint64_t raw() { return gen_(); }

  // Uniform on [0,1).
  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 gen_;
};

}  // namespace titerlab
