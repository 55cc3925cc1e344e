#pragma once
// Deterministic RNG helpers. std::mt19937 output is pinned by the standard;
// the distribution mappings are hand-rolled so streams reproduce across
// standard libraries.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace eat {

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(static_cast<uint32_t>(seed ^ (seed >> 32))) {}

  uint32_t u32() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    const uint64_t a = u32() >> 6;  // 26 bits
    const uint64_t b = u32() >> 5;  // 27 bits
    return (double(a) * 134217728.0 + double(b)) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inclusive bounds.
  int uniform_int(int lo, int hi) {
    const uint32_t span = static_cast<uint32_t>(hi - lo) + 1u;
    return lo + static_cast<int>(u32() % span);
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0, u2 = 0;
    do {
      u1 = uniform();
    } while (u1 <= 1e-300);
    u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  template <class V>
  void shuffle(std::vector<V>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(u32() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937 gen_;
  bool has_spare_ = false;
  double spare_ = 0;
};

}  // namespace eat
