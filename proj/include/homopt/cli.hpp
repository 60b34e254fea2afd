#pragma once

#include <optional>
#include <string>

#include "homopt/config.hpp"

namespace homopt {

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<double> cert_tol;  // --tol
};

// Exit codes: 0 certified or likely global, 1 config/runtime error,
// 2 not certified (indeterminate or escape direction emitted).
int cmd_solve(const std::string& config_path, const CliOverrides& ov = {});
int cmd_certify(const std::string& config_path, const std::string& factors_path,
                const CliOverrides& ov = {}, const std::optional<std::string>& q_path = {});
int cmd_oracle(const std::string& config_path, const CliOverrides& ov = {});
int cmd_experiment(const std::string& name, const std::string& config_path,
                   const CliOverrides& ov = {});

}  // namespace homopt
