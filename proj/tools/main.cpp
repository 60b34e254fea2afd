#include <CLI11.hpp>

#include "homopt/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"homopt: positively homogeneous factorization solver with global-optimality "
               "certificates"};
  app.require_subcommand(1);

  std::string config_path, factors_path, experiment_name;
  std::string q_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  double tol = 0.0;
  bool seed_set = false, out_set = false, tol_set = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
      seed_set = true;
    });
    cmd->add_option("--out", out_dir, "override the output directory")->each([&](const std::string&) {
      out_set = true;
    });
    cmd->add_option("--tol", tol, "override the certificate tolerance")->each([&](const std::string&) {
      tol_set = true;
    });
  };

  CLI::App* solve = app.add_subcommand("solve", "run the local descent meta-algorithm");
  solve->add_option("config", config_path, "run configuration")->required();
  add_common(solve);

  CLI::App* certify = app.add_subcommand("certify", "test global optimality of stored factors");
  certify->add_option("config", config_path, "run configuration")->required();
  certify->add_option("factors", factors_path, "factor-set file")->required();
  certify->add_option("--q", q_path, "optional Q tensor file");
  add_common(certify);

  CLI::App* oracle = app.add_subcommand("oracle", "solve the convex nuclear-norm reference");
  oracle->add_option("config", config_path, "run configuration")->required();
  add_common(oracle);

  CLI::App* experiment = app.add_subcommand("experiment", "run a named experiment");
  experiment->add_option("name", experiment_name,
                         "degree-mismatch | omega-equivalence | path-sweep")->required();
  experiment->add_option("config", config_path, "run configuration")->required();
  add_common(experiment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 1 : 0;
  }

  homopt::CliOverrides ov;
  if (seed_set) ov.seed = seed;
  if (out_set) ov.out_dir = out_dir;
  if (tol_set) ov.cert_tol = tol;

  if (solve->parsed()) return homopt::cmd_solve(config_path, ov);
  if (certify->parsed()) {
    std::optional<std::string> q;
    if (!q_path.empty()) q = q_path;
    return homopt::cmd_certify(config_path, factors_path, ov, q);
  }
  if (oracle->parsed()) return homopt::cmd_oracle(config_path, ov);
  if (experiment->parsed()) return homopt::cmd_experiment(experiment_name, config_path, ov);
  return 1;
}
