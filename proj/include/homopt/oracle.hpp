#pragma once

#include <cstdint>
#include <vector>

#include "homopt/problem.hpp"

namespace homopt {

struct OracleResult {
  Tensor xstar;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double closed_form_gap = 0.0;  // distance between iterate and SVT closed form
};

// min_X (1/2)||Y - X||_F^2 + lambda ||X||_*, solved by proximal gradient with
// the singular-value-thresholding prox; cross-checked against the closed-form
// soft-thresholded SVD of Y.
OracleResult solve_convex_nuclear(const Tensor& y, double lambda, double tol,
                                  double step = 0.5, int max_iters = 500);

// Singular value soft-thresholding prox of tau * ||.||_*.
Tensor svt(const Tensor& m, double tau);

double nuclear_norm(const Tensor& m);

// Balanced SVD factorization U = P sqrt(S), V = R sqrt(S), truncated to the
// numerical rank; the zero matrix factors to a single zero slice.
FactorSet factor_oracle_solution(const Tensor& xstar, double rank_tol = 1e-12);

/*
 * Exhaustive polar on desk-scale instances (total factor dimensions <= 6):
 * low-discrepancy directions per factor plus axis points, the g <= 1 scale
 * made binding through homogeneity. With polish enabled the best grid tuples
 * are refined by local ascent; either way the result is a feasible-point
 * lower bound on the exact polar.
 */
double brute_polar(const HomogeneousMap& map, const Regularizer& reg, const Tensor& w,
                   int grid_resolution, bool polish = true);

struct DegreeMismatchReport {
  bool mismatched_all_increase = false;
  double mismatched_min_delta = 0.0;  // min over directions/eps of f(eps X) - f(0)
  bool matched_descent_exists = false;
  double matched_best_delta = 0.0;  // most negative delta found with matched degrees
  struct Row {
    std::string kind;  // "mismatched" or "matched"
    int direction;
    double eps;
    double delta;
  };
  std::vector<Row> rows;
};

// Demonstrates the degree-balance phenomenon: with reg degree p' < map degree
// p the origin is a local minimum (every sampled ray increases f), while the
// matched-degree problem admits a strict descent ray whenever the polar of
// the dual variable at zero exceeds one.
DegreeMismatchReport degree_mismatch_probe(const HomogeneousMap& map,
                                           const Regularizer& reg_mismatched, const Loss& loss,
                                           double lambda, const std::vector<double>& eps_grid,
                                           int n_directions, std::uint64_t seed);

struct DuplicationReport {
  double g_ratio = 0.0;    // regularizer after duplicate-and-scale over before
  double phi_diff = 0.0;   // max |Phi difference|
  bool decreased = false;  // g_ratio < 1 with Phi preserved
};

// p' > p side of the argument: duplicating the slices of a matrix
// factorization scaled by sqrt(2)/2 preserves the product and shrinks
// sum_i (||u_i||^q + ||v_i||^q) whenever q > 2.
DuplicationReport duplication_scaling_probe(const FactorSet& fs, double q_power);

}  // namespace homopt
