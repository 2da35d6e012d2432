#pragma once

#include <cmath>
#include <cstdint>

namespace kst {

// Counter-based generator: output n = mix(seed, n). Stateless per draw, so streams
// are reproducible bit-for-bit across platforms and split points.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(splitmix(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)))) {}

  std::uint64_t next_u64() { return splitmix(key_ + 0x9e3779b97f4a7c15ULL * (++counter_)); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// von Mises sampler (rejection against the uniform envelope), mean direction mu.
// kappa = 0 degenerates to the uniform distribution on [0, 2pi).
inline double sample_von_mises(CounterRng& rng, double kappa, double mu) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  if (kappa <= 1e-12) {
    double a = mu + two_pi * rng.uniform();
    a = std::fmod(a, two_pi);
    return a < 0 ? a + two_pi : a;
  }
  for (;;) {
    const double theta = two_pi * rng.uniform() - 3.141592653589793238462643383279;
    const double accept = std::exp(kappa * (std::cos(theta) - 1.0));
    if (rng.uniform() < accept) {
      double a = std::fmod(mu + theta, two_pi);
      return a < 0 ? a + two_pi : a;
    }
  }
}

}  // namespace kst
