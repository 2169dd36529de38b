#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace morphsim {

// Deterministic random stream. Raw 64-bit draws come from std::mt19937_64,
// floating-point conversion and the distributions are done by hand so the
// stream is identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [-1, 1).
  double next_symmetric() { return 2.0 * next_double() - 1.0; }

  // Exp(1). -log1p(-u) keeps the tail well conditioned and never hits log(0).
  double next_exp() { return -std::log1p(-next_double()); }

  // Uniform integer in [0, n). Rejection sampling, unbiased.
  uint64_t next_below(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_below(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace morphsim
