#include "homopt/descent.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "homopt/rng.hpp"

namespace homopt {

namespace {

struct BlockTrial {
  Tensor candidate;  // whole factor
  double step = 0.0;
  double disp_sq = 0.0;
  double objective = 0.0;  // full factored objective with the candidate in place
  bool moved = false;
};

// Prox-gradient candidate for factor block k at step t: per-slice gradient
// step followed by the regularizer's block prox.
Tensor factor_candidate(const Problem& prob, const FactorSet& fs, const Tensor& grad_k, index_t k,
                        double t) {
  const index_t r = fs.r();
  Tensor cand = fs.factor(k);
  const Tensor& cur = fs.factor(k);
  const index_t n = cur.size() / r;
  Tensor step_slice(cur.shape().drop_last());
  for (index_t i = 0; i < r; ++i) {
    for (index_t j = 0; j < n; ++j) step_slice[j] = cur[j * r + i] - t * grad_k[j * r + i];
    const Tensor prox = prox_block(prob.reg(), k, fs.slices(i), step_slice, prob.lambda(), t);
    for (index_t j = 0; j < n; ++j) cand[j * r + i] = prox[j];
  }
  return cand;
}

// Backtracked block step: shrink t until the smooth part of the objective is
// majorized at the candidate (and the full objective does not increase).
BlockTrial factor_block_step(const Problem& prob, const FactorSet& fs,
                             const std::optional<Tensor>& q, index_t k, double f_cur,
                             double loss_cur, const Tensor& grad_k, double t_start,
                             double shrink) {
  BlockTrial out;
  double t = t_start;
  for (int tries = 0; tries < 60; ++tries) {
    Tensor cand = factor_candidate(prob, fs, grad_k, k, t);
    double disp_sq = 0.0, ip = 0.0;
    const Tensor& cur = fs.factor(k);
    for (index_t j = 0; j < cand.size(); ++j) {
      const double d = cand[j] - cur[j];
      disp_sq += d * d;
      ip += grad_k[j] * d;
    }
    if (disp_sq == 0.0) {
      out.candidate = std::move(cand);
      out.step = t;
      out.objective = f_cur;
      return out;  // prox fixed point at this step
    }
    FactorSet trial = fs;
    trial.factor(k) = cand;
    const Tensor x_trial = eval_full(prob.map(), trial);
    const double loss_trial = prob.loss().eval(x_trial, q.has_value() ? &*q : nullptr);
    const bool majorized = loss_trial <= loss_cur + ip + disp_sq / (2.0 * t) + 1e-12 * (1.0 + std::abs(loss_cur));
    if (majorized) {
      double f_trial = loss_trial + prob.lambda() * prob.sum_g(trial);
      if (q.has_value()) f_trial += prob.h().eval(*q);
      if (std::isfinite(f_trial) && f_trial <= f_cur) {
        out.candidate = std::move(cand);
        out.step = t;
        out.disp_sq = disp_sq;
        out.objective = f_trial;
        out.moved = true;
        return out;
      }
    }
    t *= shrink;
  }
  out.candidate = fs.factor(k);
  out.step = t;
  out.objective = f_cur;
  return out;
}

struct QTrial {
  Tensor candidate;
  double step = 0.0;
  double disp_sq = 0.0;
  double objective = 0.0;
  bool moved = false;
};

QTrial q_block_step(const Problem& prob, const FactorSet& fs, const Tensor& q, double f_cur,
                    double t_start, double shrink) {
  QTrial out;
  const Tensor x = eval_full(prob.map(), fs);
  const double loss_cur = prob.loss().eval(x, &q);
  const Tensor grad = prob.loss().grad_x(x, &q);
  double t = t_start;
  for (int tries = 0; tries < 60; ++tries) {
    Tensor stepped = q;
    axpy(stepped, -t, grad);
    Tensor cand = prob.h().prox(stepped, t);
    double disp_sq = 0.0, ip = 0.0;
    for (index_t j = 0; j < cand.size(); ++j) {
      const double d = cand[j] - q[j];
      disp_sq += d * d;
      ip += grad[j] * d;
    }
    if (disp_sq == 0.0) {
      out.candidate = std::move(cand);
      out.step = t;
      out.objective = f_cur;
      return out;
    }
    const double loss_trial = prob.loss().eval(x, &cand);
    if (loss_trial <= loss_cur + ip + disp_sq / (2.0 * t) + 1e-12 * (1.0 + std::abs(loss_cur))) {
      const double f_trial = loss_trial + prob.lambda() * prob.sum_g(fs) + prob.h().eval(cand);
      if (std::isfinite(f_trial) && f_trial <= f_cur) {
        out.candidate = std::move(cand);
        out.step = t;
        out.disp_sq = disp_sq;
        out.objective = std::min(f_trial, f_cur);
        out.moved = true;
        return out;
      }
    }
    t *= shrink;
  }
  out.candidate = q;
  out.step = t;
  out.objective = f_cur;
  return out;
}

}  // namespace

void rebalance_slices(const HomogeneousMap& map, const Regularizer& reg, FactorSet& fs) {
  if (reg.kind() == Regularizer::Kind::Custom) return;
  const index_t kk = fs.num_factors();
  if (kk < 2) return;
  for (index_t i = 0; i < fs.r(); ++i) {
    std::vector<double> norms(static_cast<size_t>(kk));
    double logsum = 0.0;
    bool ok = true;
    for (index_t k = 0; k < kk; ++k) {
      const double a = norm_value(reg.norms()[static_cast<size_t>(k)], fs.slice(k, i));
      if (a <= 0.0 || !std::isfinite(a)) {
        ok = false;
        break;
      }
      norms[static_cast<size_t>(k)] = a;
      logsum += std::log(a);
    }
    if (!ok) continue;
    const double gm = std::exp(logsum / static_cast<double>(kk));
    for (index_t k = 0; k < kk; ++k) {
      const double s = gm / norms[static_cast<size_t>(k)];
      Tensor& f = fs.factor(k);
      const index_t n = f.size() / fs.r();
      for (index_t j = 0; j < n; ++j) f[j * fs.r() + i] *= s;
    }
  }
  map.check_compatible(fs);
}

namespace {

// Residual of a non-committing probe plus the floating-point floor below
// which no representable objective decrease remains at the achieved steps.
std::pair<double, double> probe_residual_and_floor(const Problem& prob, const FactorSet& fs,
                                                   const std::optional<Tensor>& q,
                                                   const DescentConfig& cfg) {
  const Tensor x = eval_full(prob.map(), fs);
  const double loss_cur = prob.loss().eval(x, q.has_value() ? &*q : nullptr);
  const double f_cur = prob.objective_factored(fs, q);
  const double eps_f =
      std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f_cur));
  const Tensor lgrad = prob.loss().grad_x(x, q.has_value() ? &*q : nullptr);
  double res_sq = 0.0, floor_sq = 0.0;
  for (index_t k = 0; k < fs.num_factors(); ++k) {
    const Tensor grad_k = adjoint_grad_factor(prob.map(), fs, lgrad, k);
    const BlockTrial t = factor_block_step(prob, fs, q, k, f_cur, loss_cur, grad_k,
                                           cfg.initial_step, cfg.backtrack_shrink);
    res_sq += t.disp_sq / (t.step * t.step);
    floor_sq += 2.0 * eps_f / t.step;
  }
  if (q.has_value() && prob.h().present()) {
    const QTrial t = q_block_step(prob, fs, *q, f_cur, cfg.initial_step, cfg.backtrack_shrink);
    res_sq += t.disp_sq / (t.step * t.step);
    floor_sq += 2.0 * eps_f / t.step;
  }
  return {std::sqrt(res_sq), std::sqrt(floor_sq)};
}

}  // namespace

double stationarity_residual(const Problem& prob, const FactorSet& fs,
                             const std::optional<Tensor>& q, const DescentConfig& cfg) {
  return probe_residual_and_floor(prob, fs, q, cfg).first;
}

DescentResult descend(const Problem& prob, FactorSet init, std::optional<Tensor> q_init,
                      const DescentConfig& cfg) {
  prob.map().check_compatible(init);
  double f = prob.objective_factored(init, q_init);
  if (!std::isfinite(f)) {
    throw std::invalid_argument("descend: objective not finite at the initial point");
  }

  DescentResult res;
  res.factors = std::move(init);
  res.q = std::move(q_init);

  const auto [res0, floor0] = probe_residual_and_floor(prob, res.factors, res.q, cfg);
  res.trace.push_back({0, f, res0});
  if (res0 <= std::max(cfg.stationarity_tol, floor0)) {
    res.objective = f;
    res.iterations = 0;
    res.stationarity_residual = res0;
    res.stop = DescentStop::Stationary;
    return res;
  }

  const index_t kk = res.factors.num_factors();
  std::vector<double> steps(static_cast<size_t>(kk) + 1, cfg.initial_step);
  int stalled = 0;

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const double f_before = f;
    double res_sq = 0.0, floor_sq = 0.0;
    const double eps_f = std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f));
    for (index_t k = 0; k < kk; ++k) {
      const Tensor x = eval_full(prob.map(), res.factors);
      const double loss_cur = prob.loss().eval(x, res.q.has_value() ? &*res.q : nullptr);
      const Tensor lgrad = prob.loss().grad_x(x, res.q.has_value() ? &*res.q : nullptr);
      const Tensor grad_k = adjoint_grad_factor(prob.map(), res.factors, lgrad, k);
      double& tk = steps[static_cast<size_t>(k)];
      const BlockTrial trial = factor_block_step(prob, res.factors, res.q, k, f, loss_cur, grad_k,
                                                 2.0 * tk, cfg.backtrack_shrink);
      tk = trial.step;
      if (trial.moved) {
        res.factors.factor(k) = trial.candidate;
        f = trial.objective;
      }
      res_sq += trial.disp_sq / (trial.step * trial.step);
      floor_sq += 2.0 * eps_f / trial.step;
    }
    if (res.q.has_value() && prob.h().present()) {
      double& tq = steps.back();
      const QTrial trial = q_block_step(prob, res.factors, *res.q, f, 2.0 * tq,
                                        cfg.backtrack_shrink);
      tq = trial.step;
      if (trial.moved) {
        res.q = trial.candidate;
        f = trial.objective;
      }
      res_sq += trial.disp_sq / (trial.step * trial.step);
      floor_sq += 2.0 * eps_f / trial.step;
    }

    {
      FactorSet balanced = res.factors;
      rebalance_slices(prob.map(), prob.reg(), balanced);
      const double fb = prob.objective_factored(balanced, res.q);
      if (std::isfinite(fb) && fb <= f) {
        res.factors = std::move(balanced);
        f = fb;
      }
    }

    if (std::isnan(f)) {
      throw std::runtime_error("descend: objective became NaN at iteration " +
                               std::to_string(iter));
    }

    const double residual = std::sqrt(res_sq);
    res.trace.push_back({iter, f, residual});
    res.iterations = iter;
    res.stationarity_residual = residual;
    // below the floating-point floor no representable decrease remains
    if (residual <= std::max(cfg.stationarity_tol, std::sqrt(floor_sq))) {
      res.stop = DescentStop::Stationary;
      res.objective = prob.objective_factored(res.factors, res.q);
      return res;
    }
    if (cfg.min_objective_decrease > 0.0 && f_before - f < cfg.min_objective_decrease) {
      if (++stalled >= 30) {
        res.stop = DescentStop::Stalled;
        res.objective = prob.objective_factored(res.factors, res.q);
        return res;
      }
    } else {
      stalled = 0;
    }
  }
  res.stop = DescentStop::MaxIters;
  res.objective = prob.objective_factored(res.factors, res.q);
  return res;
}

FactorSet random_init(const HomogeneousMap& map, const Regularizer& reg, index_t r,
                      std::uint64_t seed) {
  if (r < 1) throw std::invalid_argument("random_init: r must be >= 1");
  Rng rng(seed);
  for (int attempt = 0; attempt < 50; ++attempt) {
    std::vector<Tensor> factors;
    for (const Shape& s : map.factor_shapes(r)) factors.push_back(rng.uniform_tensor(s, -0.5, 0.5));
    FactorSet fs(std::move(factors));
    if (reg.kind() == Regularizer::Kind::ConicNormProduct) {
      for (index_t i = 0; i < r; ++i) {
        for (index_t k = 0; k < fs.num_factors(); ++k) {
          fs.set_slice(k, i, reg.project_cone(k, fs.slice(k, i)));
        }
      }
    }
    double g = 0.0;
    bool finite = true;
    for (index_t i = 0; i < r; ++i) {
      const double gi = reg.eval(fs.slices(i));
      if (!std::isfinite(gi)) {
        finite = false;
        break;
      }
      g += gi;
    }
    if (!finite || g <= 1e-12) continue;
    const double s = std::pow(g, -1.0 / static_cast<double>(map.degree()));
    for (index_t k = 0; k < fs.num_factors(); ++k) {
      Tensor& fkt = fs.factor(k);
      for (index_t j = 0; j < fkt.size(); ++j) fkt[j] *= s;
    }
    return fs;
  }
  throw std::runtime_error("random_init: could not draw a feasible nonzero start");
}

}  // namespace homopt
