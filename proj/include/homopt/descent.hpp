#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "homopt/problem.hpp"

namespace homopt {

struct DescentConfig {
  int max_iters = 20000;
  double stationarity_tol = 1e-8;
  double backtrack_shrink = 0.5;
  double initial_step = 1.0;
  double min_objective_decrease = 1e-12;
  std::uint64_t seed = 0;
};

enum class DescentStop { Stationary, MaxIters, Stalled };

struct TracePoint {
  int iteration;
  double objective;
  double residual;
};

struct DescentResult {
  FactorSet factors;
  std::optional<Tensor> q;
  double objective = 0.0;
  int iterations = 0;
  double stationarity_residual = 0.0;
  DescentStop stop = DescentStop::MaxIters;
  std::vector<TracePoint> trace;  // objectives are non-increasing
};

/*
 * Cyclic block proximal gradient with per-block backtracking: one block per
 * factor tensor plus a Q block when H is present. The stationarity residual
 * is the norm of the composite gradient mapping (prox-gradient displacement
 * over step size, accumulated across blocks).
 */
DescentResult descend(const Problem& prob, FactorSet init, std::optional<Tensor> q_init,
                      const DescentConfig& cfg);

// Residual of one non-committing prox-gradient probe at the given point.
double stationarity_residual(const Problem& prob, const FactorSet& fs,
                             const std::optional<Tensor>& q, const DescentConfig& cfg);

// Random initialization: entries i.i.d. uniform in [-0.5, 0.5] (cone-projected
// for conic regularizers), scaled so the initial regularization term is 1.
FactorSet random_init(const HomogeneousMap& map, const Regularizer& reg, index_t r,
                      std::uint64_t seed);

// Norm-balance the slices across factors; never increases the objective for
// the built-in regularizers and preserves Phi_r.
void rebalance_slices(const HomogeneousMap& map, const Regularizer& reg, FactorSet& fs);

}  // namespace homopt
