#pragma once

#include <array>
#include <cstdint>

namespace heiv {

// Deterministic, splittable random source: xoshiro256++ streams seeded
// through splitmix64. Stream k of a given seed initializes splitmix64 at
// seed + (k+1) * 0x9E3779B97F4A7C15 (the splitmix64 golden-ratio increment),
// then draws the four state words; distinct (seed, stream) pairs give
// decorrelated, individually reproducible sequences. Standard normals use
// the Box-Muller transform with the second variate cached, so a stream
// yields the same normal sequence regardless of interleaving with other
// streams (never with other draws from the same stream).
class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();
    double uniform();                    // [0, 1), 53-bit resolution
    double uniform(double a, double b);  // [a, b)
    double normal();                     // standard normal

  private:
    std::array<std::uint64_t, 4> s_{};
    double cached_normal_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace heiv
