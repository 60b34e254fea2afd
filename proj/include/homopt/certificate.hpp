#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "homopt/problem.hpp"

namespace homopt {

struct PolarConfig {
  int restarts = 20;
  int max_iters = 500;
  std::uint64_t seed = 1u << 16;
};

/*
 * Result of the polar problem  sup <W, phi(z)> s.t. g(z) <= 1.
 * Exact only for the matrix product with the (l2,l2) norm product, where the
 * value is the spectral norm; every other pair gets a multi-restart local
 * ascent and the value is a lower bound.
 */
struct PolarResult {
  double value = 0.0;
  std::vector<Tensor> maximizer;
  bool exact = false;
};

PolarResult polar(const HomogeneousMap& map, const Regularizer& reg, const Tensor& w,
                  const PolarConfig& cfg = {});

// Local ascent from a given start; used by the polar restarts and by the
// brute-force polish. Returns the best feasible iterate seen.
PolarResult polar_local_ascent(const HomogeneousMap& map, const Regularizer& reg, const Tensor& w,
                               std::vector<Tensor> z0, int max_iters);

enum class CertStatus { CertifiedGlobal, LikelyGlobal, EscapeFound, Indeterminate };

std::string cert_status_name(CertStatus s);

struct Certificate {
  CertStatus status = CertStatus::Indeterminate;
  double polar_value = 0.0;
  double alignment_residual = 0.0;  // |<W, Phi_r> - sum g|
  std::optional<std::vector<Tensor>> escape_direction;
  std::string caveat;
  bool polar_exact = false;
  double sum_g = 0.0;
  double cert_tol = 0.0;
};

/*
 * Global-optimality test at a stationary point: computes the dual variable
 * W = -(1/lambda) grad_X loss, the alignment residual, and the polar value,
 * then classifies. A polar violator is returned as an escape direction;
 * appending it as a fresh slice strictly decreases the objective.
 */
Certificate check_global(const Problem& prob, const FactorSet& fs, const std::optional<Tensor>& q,
                         double cert_tol, const PolarConfig& polar_cfg = {});

// Per-slice residuals g(slice_i) - <W, phi(slice_i)>.
std::vector<double> per_slice_alignment(const HomogeneousMap& map, const Regularizer& reg,
                                        const FactorSet& fs, const Tensor& w);

std::string format_certificate(const Certificate& cert);

}  // namespace homopt
