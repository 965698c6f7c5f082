// Copyright 2026 The ctrn authors. Apache 2.0 License.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ctrn {

// Seeded generator used everywhere randomness is needed (init, shuffling,
// dropout, sampling). Uniform doubles are built from the raw 64-bit stream
// so results are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n). n must be > 0; modulo bias is irrelevant at these scales but the
  // mapping must stay deterministic.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(eng_() % static_cast<std::uint64_t>(n));
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace ctrn
