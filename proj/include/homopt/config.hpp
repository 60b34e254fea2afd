#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "homopt/meta.hpp"
#include "homopt/problem.hpp"

namespace homopt {

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& path, int line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_number(line) {}
  int line_number;
};

/*
 * Declarative run configuration, parsed from a line-oriented key = value
 * format with [map], [regularizer], [loss] and [solver] sections.
 */
struct RunConfig {
  // [map]
  std::string map_kind;  // matrix-product | cp-outer-product | relu-network
  index_t rows = 0, cols = 0;
  std::vector<index_t> cp_dims;
  std::string relu_data_path;
  std::vector<index_t> relu_widths;
  index_t relu_out = 0;

  // [regularizer]
  std::string reg_kind = "norm-product";  // norm-product | power-sum | conic-norm-product
  std::vector<std::string> norms;
  std::vector<std::string> cones;  // none | nonneg | support:N

  // [loss]
  std::string loss_kind = "squared-frobenius";  // squared-frobenius | logistic
  std::string data_path;
  std::string qterm = "absent";  // absent | l1 | squared-l2
  double q_weight = 0.0;

  // [solver]
  double lambda = -1.0;
  index_t r_init = 1;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int max_iters = 20000;
  double stationarity_tol = 1e-8;
  double backtrack_shrink = 0.5;
  double initial_step = 1.0;
  double min_objective_decrease = 1e-12;
  int outer_cap = 50;
  double null_tol = 1e-10;
  double path_tol = 1e-8;
  double cert_tol = 1e-6;
  double escape_eps = 1e-3;
  int polar_restarts = 20;
  int polar_iters = 500;

  std::string source_path;
};

RunConfig parse_config(const std::string& path);

// File existence and shape consistency checks; throws ConfigError before any
// computation happens.
void validate_config(const RunConfig& cfg);

HomogeneousMap build_map(const RunConfig& cfg);
Regularizer build_regularizer(const RunConfig& cfg);
Problem build_problem(const RunConfig& cfg);
MetaConfig build_meta_config(const RunConfig& cfg);

}  // namespace homopt
