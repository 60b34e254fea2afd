#pragma once

#include <cmath>
#include <cstdint>

#include "homopt/tensor.hpp"

namespace homopt {

/*
 * Deterministic generator (splitmix64 core). Avoids std:: distributions so
 * that identical seeds give identical streams on every platform.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    // Box-Muller; one value per call keeps the stream simple.
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  index_t index(index_t n) { return static_cast<index_t>(next_u64() % static_cast<std::uint64_t>(n)); }

  Tensor uniform_tensor(const Shape& shape, double lo, double hi) {
    Tensor t(shape);
    for (index_t i = 0; i < t.size(); ++i) t[i] = uniform(lo, hi);
    return t;
  }

  Tensor normal_tensor(const Shape& shape) {
    Tensor t(shape);
    for (index_t i = 0; i < t.size(); ++i) t[i] = normal();
    return t;
  }

 private:
  std::uint64_t state_;
};

}  // namespace homopt
