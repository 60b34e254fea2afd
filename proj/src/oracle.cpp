#include "homopt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "homopt/certificate.hpp"
#include "homopt/linalg.hpp"
#include "homopt/rng.hpp"

namespace homopt {

Tensor svt(const Tensor& m, double tau) {
  const Svd svd = thin_svd(as_matrix(m));
  Eigen::VectorXd s = svd.sigma;
  for (index_t i = 0; i < s.size(); ++i) s(i) = std::max(0.0, s(i) - tau);
  Tensor out(m.shape());
  as_matrix(out) = svd.u * s.asDiagonal() * svd.v.transpose();
  return out;
}

double nuclear_norm(const Tensor& m) { return thin_svd(as_matrix(m)).sigma.sum(); }

OracleResult solve_convex_nuclear(const Tensor& y, double lambda, double tol, double step,
                                  int max_iters) {
  if (y.shape().rank() != 2) throw std::invalid_argument("solve_convex_nuclear: Y must be a matrix");
  if (lambda <= 0.0) throw std::invalid_argument("solve_convex_nuclear: lambda must be positive");
  if (step <= 0.0 || step > 1.0) throw std::invalid_argument("solve_convex_nuclear: step in (0,1]");

  OracleResult res;
  Tensor x(y.shape());
  const double scale_ref = 1.0 + frobenius_norm(y);
  for (int it = 1; it <= max_iters; ++it) {
    // gradient of (1/2)||X - Y||^2 is X - Y
    Tensor stepped = x;
    for (index_t i = 0; i < stepped.size(); ++i) stepped[i] -= step * (x[i] - y[i]);
    Tensor next = svt(stepped, step * lambda);
    const double moved = frobenius_norm(sub(next, x));
    x = std::move(next);
    res.iterations = it;
    if (moved <= tol * scale_ref) {
      res.converged = true;
      break;
    }
  }
  res.closed_form_gap = frobenius_norm(sub(x, svt(y, lambda)));
  const Tensor r = sub(x, y);
  res.objective = 0.5 * inner(r, r) + lambda * nuclear_norm(x);
  res.xstar = std::move(x);
  return res;
}

FactorSet factor_oracle_solution(const Tensor& xstar, double rank_tol) {
  if (xstar.shape().rank() != 2) {
    throw std::invalid_argument("factor_oracle_solution: input must be a matrix");
  }
  const index_t d1 = xstar.shape().extent(0);
  const index_t d2 = xstar.shape().extent(1);
  const Svd svd = thin_svd(as_matrix(xstar));
  const double top = svd.sigma.size() > 0 ? svd.sigma(0) : 0.0;
  index_t rank = 0;
  for (index_t i = 0; i < svd.sigma.size(); ++i) {
    if (svd.sigma(i) > rank_tol * top && svd.sigma(i) > 0.0) ++rank;
  }
  if (rank == 0) {
    return FactorSet({Tensor(Shape({d1, 1})), Tensor(Shape({d2, 1}))});
  }
  Tensor u(Shape({d1, rank}));
  Tensor v(Shape({d2, rank}));
  const Eigen::VectorXd root = svd.sigma.head(rank).cwiseSqrt();
  as_matrix(u) = svd.u.leftCols(rank) * root.asDiagonal();
  as_matrix(v) = svd.v.leftCols(rank) * root.asDiagonal();
  return FactorSet({std::move(u), std::move(v)});
}

namespace {

// Direction samples on the unit l2 sphere: exact constructions for 1-D and
// 2-D, a Fibonacci spiral for 3-D, normalized Halton points above.
std::vector<Tensor> sphere_directions(const Shape& shape, int resolution) {
  const index_t d = shape.cardinality();
  std::vector<Tensor> out;
  if (d == 1) {
    Tensor plus(shape), minus(shape);
    plus[0] = 1.0;
    minus[0] = -1.0;
    out.push_back(plus);
    out.push_back(minus);
  } else if (d == 2) {
    for (int j = 0; j < resolution; ++j) {
      const double a = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(resolution);
      Tensor t(shape);
      t[0] = std::cos(a);
      t[1] = std::sin(a);
      out.push_back(std::move(t));
    }
  } else if (d == 3) {
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    const int n = resolution * resolution / 4 + resolution;
    for (int j = 0; j < n; ++j) {
      const double z = 1.0 - 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(n);
      const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = golden * static_cast<double>(j);
      Tensor t(shape);
      t[0] = rad * std::cos(a);
      t[1] = rad * std::sin(a);
      t[2] = z;
      out.push_back(std::move(t));
    }
  } else {
    // d >= 4: deterministic normalized-Gaussian points
    Rng rng(0xd1c0 + static_cast<std::uint64_t>(d));
    const int n = resolution * resolution / 4 + resolution;
    for (int j = 0; j < n; ++j) {
      Tensor t = rng.normal_tensor(shape);
      const double nn = frobenius_norm(t);
      if (nn <= 1e-12) continue;
      for (index_t i = 0; i < t.size(); ++i) t[i] /= nn;
      out.push_back(std::move(t));
    }
  }
  // axis points
  for (index_t i = 0; i < d; ++i) {
    Tensor plus(shape), minus(shape);
    plus[i] = 1.0;
    minus[i] = -1.0;
    out.push_back(std::move(plus));
    out.push_back(std::move(minus));
  }
  return out;
}

// HOMOPT_THREADS caps internal parallelism; unset means hardware concurrency.
static unsigned thread_cap() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("HOMOPT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1 && static_cast<unsigned>(v) < hw) hw = static_cast<unsigned>(v);
  }
  return hw;
}

}  // namespace

double brute_polar(const HomogeneousMap& map, const Regularizer& reg, const Tensor& w,
                   int grid_resolution, bool polish) {
  index_t total = 0;
  for (const Shape& s : map.input_shapes()) total += s.cardinality();
  if (total > 6) {
    throw std::invalid_argument("brute_polar: total factor dimensions must be <= 6");
  }
  if (w.shape() != map.output_shape()) throw std::invalid_argument("brute_polar: W shape mismatch");

  const index_t kk = map.num_factors();
  std::vector<std::vector<Tensor>> dirs(static_cast<size_t>(kk));
  const bool conic = reg.kind() == Regularizer::Kind::ConicNormProduct;
  for (index_t k = 0; k < kk; ++k) {
    dirs[static_cast<size_t>(k)] =
        sphere_directions(map.input_shapes()[static_cast<size_t>(k)], grid_resolution);
    if (conic) {
      const size_t base = dirs[static_cast<size_t>(k)].size();
      for (size_t j = 0; j < base; ++j) {
        Tensor t = dirs[static_cast<size_t>(k)][j];
        for (index_t i = 0; i < t.size(); ++i) t[i] = std::abs(t[i]);
        dirs[static_cast<size_t>(k)].push_back(std::move(t));
      }
    }
  }

  std::uint64_t combos = 1;
  for (const auto& d : dirs) combos *= d.size();

  struct ShardResult {
    double best = 0.0;
    std::vector<double> top_values;
    std::vector<std::vector<Tensor>> top_tuples;
  };

  // deterministic sharding by combo index range; results are merged in
  // shard order so the outcome does not depend on scheduling
  auto scan = [&](std::uint64_t lo, std::uint64_t hi, ShardResult& out) {
    std::vector<Tensor> tuple(static_cast<size_t>(kk));
    for (std::uint64_t c = lo; c < hi; ++c) {
      std::uint64_t rem = c;
      for (index_t k = kk - 1; k >= 0; --k) {
        const auto& dk = dirs[static_cast<size_t>(k)];
        tuple[static_cast<size_t>(k)] = dk[rem % dk.size()];
        rem /= dk.size();
      }
      const double g = reg.eval(tuple);
      if (!std::isfinite(g) || g <= 1e-14) continue;
      const double v = inner(w, eval_elemental(map, tuple)) / g;
      if (v > out.best) out.best = v;
      if (polish && (out.top_values.size() < 5 || v > out.top_values.back())) {
        out.top_values.push_back(v);
        out.top_tuples.push_back(tuple);
        for (size_t j = out.top_values.size() - 1;
             j > 0 && out.top_values[j] > out.top_values[j - 1]; --j) {
          std::swap(out.top_values[j], out.top_values[j - 1]);
          std::swap(out.top_tuples[j], out.top_tuples[j - 1]);
        }
        if (out.top_values.size() > 5) {
          out.top_values.pop_back();
          out.top_tuples.pop_back();
        }
      }
    }
  };

  const std::uint64_t min_chunk = 4096;
  const unsigned n_threads = static_cast<unsigned>(
      std::min<std::uint64_t>(thread_cap(), std::max<std::uint64_t>(1, combos / min_chunk)));
  std::vector<ShardResult> shards(n_threads);
  if (n_threads <= 1) {
    scan(0, combos, shards[0]);
  } else {
    std::vector<std::thread> workers;
    const std::uint64_t span = (combos + n_threads - 1) / n_threads;
    for (unsigned t = 0; t < n_threads; ++t) {
      const std::uint64_t lo = t * span;
      const std::uint64_t hi = std::min(combos, lo + span);
      workers.emplace_back([&, lo, hi, t] { scan(lo, hi, shards[t]); });
    }
    for (auto& th : workers) th.join();
  }

  double best = 0.0;
  std::vector<std::vector<Tensor>> top_tuples;
  std::vector<double> top_values;
  for (const ShardResult& s : shards) {
    if (s.best > best) best = s.best;
    for (size_t j = 0; j < s.top_values.size(); ++j) {
      if (top_values.size() < 5 || s.top_values[j] > top_values.back()) {
        top_values.push_back(s.top_values[j]);
        top_tuples.push_back(s.top_tuples[j]);
        for (size_t m = top_values.size() - 1; m > 0 && top_values[m] > top_values[m - 1]; --m) {
          std::swap(top_values[m], top_values[m - 1]);
          std::swap(top_tuples[m], top_tuples[m - 1]);
        }
        if (top_values.size() > 5) {
          top_values.pop_back();
          top_tuples.pop_back();
        }
      }
    }
  }

  if (polish) {
    for (auto& z : top_tuples) {
      // normalize per-factor declared norms to 1 (keeps g near 1, ascent
      // re-normalizes through the feasibility check)
      for (index_t k = 0; k < kk; ++k) {
        const double n = norm_value(reg.norms().empty() ? NormKind::L2
                                                        : reg.norms()[static_cast<size_t>(k)],
                                    z[static_cast<size_t>(k)]);
        if (n > 0) {
          for (index_t i = 0; i < z[static_cast<size_t>(k)].size(); ++i) {
            z[static_cast<size_t>(k)][i] /= n;
          }
        }
      }
      const PolarResult refined = polar_local_ascent(map, reg, w, z, 200);
      if (refined.value > best) best = refined.value;
    }
  }
  return std::max(0.0, best);
}

DegreeMismatchReport degree_mismatch_probe(const HomogeneousMap& map,
                                           const Regularizer& reg_mismatched, const Loss& loss,
                                           double lambda, const std::vector<double>& eps_grid,
                                           int n_directions, std::uint64_t seed) {
  if (reg_mismatched.degree() >= map.degree()) {
    throw std::invalid_argument("degree_mismatch_probe: regularizer degree must be below the map degree");
  }
  DegreeMismatchReport rep;
  Rng rng(seed);
  const Tensor zero_img(map.output_shape());
  const double f0 = loss.eval(zero_img, nullptr);

  rep.mismatched_min_delta = std::numeric_limits<double>::infinity();
  int kept = 0;
  while (kept < n_directions) {
    std::vector<Tensor> z;
    for (const Shape& s : map.input_shapes()) z.push_back(rng.normal_tensor(s));
    const Tensor img = eval_elemental(map, z);
    if (max_abs(img) <= 1e-10) continue;
    ++kept;
    for (double eps : eps_grid) {
      std::vector<Tensor> ze;
      ze.reserve(z.size());
      for (const Tensor& t : z) ze.push_back(scale(t, eps));
      const double f = loss.eval(eval_elemental(map, ze), nullptr) + lambda * reg_mismatched.eval(ze);
      const double delta = f - f0;
      rep.rows.push_back({"mismatched", kept - 1, eps, delta});
      rep.mismatched_min_delta = std::min(rep.mismatched_min_delta, delta);
    }
  }
  rep.mismatched_all_increase = rep.mismatched_min_delta > 0.0;

  // matched-degree companion: direction from the polar of the dual variable
  // at the origin
  std::vector<NormKind> norms(static_cast<size_t>(map.num_factors()), NormKind::L2);
  const Regularizer matched = Regularizer::norm_product(norms);
  const Tensor w0 = scale(loss.grad_x(zero_img, nullptr), -1.0 / lambda);
  const PolarResult pol = polar(map, matched, w0);
  rep.matched_best_delta = std::numeric_limits<double>::infinity();
  if (pol.value > 0.0) {
    for (double eps : eps_grid) {
      std::vector<Tensor> ze;
      for (const Tensor& t : pol.maximizer) ze.push_back(scale(t, eps));
      const double f = loss.eval(eval_elemental(map, ze), nullptr) + lambda * matched.eval(ze);
      const double delta = f - f0;
      rep.rows.push_back({"matched", 0, eps, delta});
      rep.matched_best_delta = std::min(rep.matched_best_delta, delta);
    }
  }
  rep.matched_descent_exists = rep.matched_best_delta < 0.0;
  return rep;
}

DuplicationReport duplication_scaling_probe(const FactorSet& fs, double q_power) {
  if (fs.num_factors() != 2) {
    throw std::invalid_argument("duplication_scaling_probe: expects a two-factor set");
  }
  const double c = std::sqrt(2.0) / 2.0;
  DuplicationReport rep;

  auto g_of = [&](const FactorSet& f) {
    double s = 0.0;
    for (index_t i = 0; i < f.r(); ++i) {
      s += std::pow(frobenius_norm(f.slice(0, i)), q_power) +
           std::pow(frobenius_norm(f.slice(1, i)), q_power);
    }
    return s;
  };

  FactorSet dup({concat_last(scale(fs.factor(0), c), scale(fs.factor(0), c)),
                 concat_last(scale(fs.factor(1), c), scale(fs.factor(1), c))});

  const double g_before = g_of(fs);
  rep.g_ratio = g_before > 0 ? g_of(dup) / g_before : 0.0;

  const auto prod = [](const FactorSet& f) {
    Eigen::MatrixXd m = as_matrix(f.factor(0)) * as_matrix(f.factor(1)).transpose();
    return m;
  };
  rep.phi_diff = (prod(fs) - prod(dup)).cwiseAbs().maxCoeff();
  rep.decreased = rep.g_ratio < 1.0 && rep.phi_diff <= 1e-10;
  return rep;
}

}  // namespace homopt
