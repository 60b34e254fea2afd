#pragma once

#include <optional>
#include <string>
#include <vector>

#include "homopt/certificate.hpp"
#include "homopt/descent.hpp"
#include "homopt/problem.hpp"

namespace homopt {

/*
 * Null-space direction over the slice images: theta with
 * sum_i theta_i * vec(phi(slice_i)) ~= 0, scaled so min_i theta_i = -1.
 */
struct ThetaDirection {
  std::vector<double> theta;
  double null_residual = 0.0;  // ||sum theta_i vec(phi_i)||
  double g_residual = 0.0;     // sum theta_i g(slice_i)
};

std::optional<ThetaDirection> find_null_theta(const HomogeneousMap& map, const Regularizer& reg,
                                              const FactorSet& fs, double null_tol);

// Scale slice i by (1 + theta_i)^(1/p); the minimal entries land exactly at
// zero while Phi_r and the summed regularizer are preserved up to the theta
// residuals.
FactorSet collapse_slice(const HomogeneousMap& map, const FactorSet& fs,
                         const ThetaDirection& theta);

// Objectives along the interpolated path gamma in [0,1].
std::vector<double> collapse_path_objectives(const Problem& prob, const FactorSet& fs,
                                             const std::optional<Tensor>& q,
                                             const ThetaDirection& theta,
                                             const std::vector<double>& gammas);

// r -> r+1 with an all-zero slice; the objective is unchanged exactly.
FactorSet append_zero_slice(const FactorSet& fs);

struct MetaConfig {
  DescentConfig descent;
  int outer_cap = 50;
  double null_tol = 1e-10;   // relative to the largest singular value
  double path_tol = 1e-8;    // relative, outer-loop monotonicity
  double cert_tol = 1e-6;
  double escape_eps = 1e-3;
  PolarConfig polar;
  double zero_slice_tol = 1e-14;  // relative slice-zero detection
};

enum class MetaEventKind { Descended, Collapsed, Appended, Seeded, Certified };

std::string meta_event_name(MetaEventKind k);

struct MetaEvent {
  int outer = 0;
  MetaEventKind kind = MetaEventKind::Descended;
  index_t r = 0;
  double objective = 0.0;
};

struct MetaResult {
  FactorSet factors;
  std::optional<Tensor> q;
  Certificate certificate;
  index_t r_final = 0;
  int outer_iterations = 0;
  std::vector<MetaEvent> events;
  std::vector<std::vector<TracePoint>> descent_traces;
};

/*
 * Local Descent Meta-Algorithm: descend to stationarity; certify when a zero
 * slice exists; otherwise collapse along a null-space direction or append a
 * zero slice; seed an escape direction into the zero slice when the polar
 * finds a violator. Objectives are non-increasing across events up to
 * path_tol, and the size never exceeds max(r_init, card(D)+1).
 */
MetaResult run_meta(const Problem& prob, FactorSet init, std::optional<Tensor> q_init,
                    const MetaConfig& cfg);

}  // namespace homopt
