#pragma once

// Test-only oracles: central finite differences, a 1-D golden-section
// minimizer, and a triple-loop dense product. These stay independent of the
// library's own evaluation paths.

#include <cmath>
#include <functional>

#include "homopt/linalg.hpp"
#include "homopt/problem.hpp"
#include "homopt/rng.hpp"

namespace testsupport {

using homopt::FactorSet;
using homopt::index_t;
using homopt::Tensor;

// d/deps f(x + eps) at eps=0 by central differences.
inline double central_diff(const std::function<double(double)>& f, double step = 1e-6) {
  return (f(step) - f(-step)) / (2.0 * step);
}

// Finite-difference gradient of scalar(fs) with respect to every factor entry.
inline FactorSet fd_factor_gradient(const std::function<double(const FactorSet&)>& scalar,
                                    const FactorSet& fs, double step = 1e-6) {
  FactorSet g = fs;
  for (index_t k = 0; k < fs.num_factors(); ++k) {
    for (index_t j = 0; j < fs.factor(k).size(); ++j) {
      FactorSet plus = fs, minus = fs;
      plus.factor(k)[j] += step;
      minus.factor(k)[j] -= step;
      g.factor(k)[j] = (scalar(plus) - scalar(minus)) / (2.0 * step);
    }
  }
  return g;
}

inline double golden_section(const std::function<double(double)>& f, double lo, double hi,
                             double tol = 1e-12) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Parabolic refinement of a 1-D minimizer; exact for quadratics, locally
// convergent otherwise. Keeps golden-section results below the sqrt(eps)
// localization floor.
inline double refine_parabolic(const std::function<double(double)>& f, double x0, double lo,
                               double hi, double h = 1e-3, int iters = 4) {
  double x = x0;
  for (int it = 0; it < iters; ++it) {
    const double f1 = f(x - h), f2 = f(x), f3 = f(x + h);
    const double denom = f1 - 2.0 * f2 + f3;
    if (denom <= 0.0) break;
    x = x + h * (f1 - f3) / (2.0 * denom);
    h *= 1e-2;
  }
  return std::min(hi, std::max(lo, x));
}

// Dense U V^T by explicit triple loop.
inline Tensor dense_product_oracle(const Tensor& u, const Tensor& v) {
  const index_t d1 = u.shape().extent(0), d2 = v.shape().extent(0), r = u.shape().extent(1);
  Tensor out(homopt::Shape({d1, d2}));
  for (index_t i = 0; i < d1; ++i) {
    for (index_t j = 0; j < d2; ++j) {
      double s = 0.0;
      for (index_t k = 0; k < r; ++k) s += u[i * r + k] * v[j * r + k];
      out[i * d2 + j] = s;
    }
  }
  return out;
}

inline FactorSet random_factor_set(const homopt::HomogeneousMap& map, index_t r,
                                   std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  homopt::Rng rng(seed);
  std::vector<Tensor> fs;
  for (const homopt::Shape& s : map.factor_shapes(r)) fs.push_back(rng.uniform_tensor(s, lo, hi));
  return FactorSet(std::move(fs));
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-300, std::abs(a), std::abs(b)});
}

inline double sigma_max(const Tensor& m) { return homopt::spectral_norm(homopt::as_matrix(m)); }

}  // namespace testsupport
