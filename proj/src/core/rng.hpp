#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace flint {

// Deterministic RNG wrapper. The uniform/normal draws are implemented on raw
// mt19937_64 output so sequences do not depend on the standard library's
// distribution internals.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::uint64_t index(std::uint64_t n) {
    // rejection sampling to avoid modulo bias
    std::uint64_t lim = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = bits();
    } while (x >= lim);
    return x % n;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Independent child stream; distinct ids give distinct streams.
  Rng fork(std::uint64_t id) {
    std::uint64_t s = bits();
    return Rng(s ^ (0x9e3779b97f4a7c15ULL * (id + 1)));
  }

private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace flint
