#include "homopt/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "homopt/io.hpp"
#include "homopt/oracle.hpp"
#include "homopt/rng.hpp"

namespace homopt {

namespace {

namespace fs = std::filesystem;

RunConfig load_config(const std::string& path, const CliOverrides& ov) {
  RunConfig cfg = parse_config(path);
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  if (ov.cert_tol) cfg.cert_tol = *ov.cert_tol;
  return cfg;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[64];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", std::gmtime(&t));
  return buf;
}

void write_certificate_file(const std::string& path, const Certificate& cert, double objective,
                            index_t r_final, int outer_iterations) {
  std::ofstream out(path);
  out << "# generated: " << timestamp() << "\n";
  out << format_certificate(cert);
  out << "objective: " << format_double(objective) << "\n";
  out << "r_final: " << r_final << "\n";
  out << "outer_iterations: " << outer_iterations << "\n";
}

void write_event_log(const std::string& path, const MetaResult& res) {
  std::ofstream out(path);
  out << "# generated: " << timestamp() << "\n";
  out << "# collapse scaling: (1+theta_i)^(1/p), per the non-increasing path construction\n";
  for (const MetaEvent& e : res.events) {
    out << "outer=" << e.outer << " event=" << meta_event_name(e.kind) << " r=" << e.r
        << " objective=" << format_double(e.objective) << "\n";
  }
}

void write_traces(const std::string& dir, const MetaResult& res) {
  int n = 0;
  for (const auto& trace : res.descent_traces) {
    ++n;
    char name[32];
    std::snprintf(name, sizeof(name), "trace_%04d.csv", n);
    std::vector<std::vector<double>> rows;
    rows.reserve(trace.size());
    for (const TracePoint& p : trace) {
      rows.push_back({static_cast<double>(p.iteration), p.objective, p.residual});
    }
    write_csv((fs::path(dir) / name).string(), {"iteration", "objective", "residual"}, rows);
  }
}

int status_exit_code(CertStatus s) {
  switch (s) {
    case CertStatus::CertifiedGlobal:
    case CertStatus::LikelyGlobal:
      return 0;
    case CertStatus::EscapeFound:
    case CertStatus::Indeterminate:
      return 2;
  }
  return 2;
}

}  // namespace

int cmd_solve(const std::string& config_path, const CliOverrides& ov) {
  try {
    const RunConfig cfg = load_config(config_path, ov);
    const Problem prob = build_problem(cfg);
    const MetaConfig meta_cfg = build_meta_config(cfg);

    FactorSet init = random_init(prob.map(), prob.reg(), cfg.r_init, cfg.seed);
    std::optional<Tensor> q;
    if (prob.h().present()) q = Tensor(prob.map().output_shape());

    MetaResult res = run_meta(prob, std::move(init), std::move(q), meta_cfg);
    for (const MetaEvent& e : res.events) {
      std::cerr << "outer=" << e.outer << " event=" << meta_event_name(e.kind) << " r=" << e.r
                << " objective=" << format_double(e.objective) << "\n";
    }

    fs::create_directories(cfg.out_dir);
    write_factor_set((fs::path(cfg.out_dir) / "factors.txt").string(), res.factors);
    if (res.q.has_value()) {
      write_tensor_file((fs::path(cfg.out_dir) / "q.txt").string(), *res.q);
    }
    const double objective = prob.objective_factored(res.factors, res.q);
    write_certificate_file((fs::path(cfg.out_dir) / "certificate.txt").string(), res.certificate,
                           objective, res.r_final, res.outer_iterations);
    write_event_log((fs::path(cfg.out_dir) / "events.log").string(), res);
    write_traces(cfg.out_dir, res);
    return status_exit_code(res.certificate.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_certify(const std::string& config_path, const std::string& factors_path,
                const CliOverrides& ov, const std::optional<std::string>& q_path) {
  try {
    const RunConfig cfg = load_config(config_path, ov);
    const Problem prob = build_problem(cfg);
    const MetaConfig meta_cfg = build_meta_config(cfg);

    FactorSet factors = read_factor_set(factors_path, prob.map().num_factors());
    prob.map().check_compatible(factors);
    std::optional<Tensor> q;
    if (q_path.has_value()) {
      q = read_tensor_file(*q_path);
    } else if (prob.h().present()) {
      q = Tensor(prob.map().output_shape());
    }

    const Certificate cert = check_global(prob, factors, q, meta_cfg.cert_tol, meta_cfg.polar);
    std::cout << format_certificate(cert);

    fs::create_directories(cfg.out_dir);
    const double objective = prob.objective_factored(factors, q);
    write_certificate_file((fs::path(cfg.out_dir) / "certificate.txt").string(), cert, objective,
                           factors.r(), 0);
    if (cert.status == CertStatus::EscapeFound && cert.escape_direction.has_value()) {
      std::ofstream out((fs::path(cfg.out_dir) / "escape_direction.txt").string());
      for (const Tensor& t : *cert.escape_direction) write_tensor_text(out, t);
    }
    return status_exit_code(cert.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_oracle(const std::string& config_path, const CliOverrides& ov) {
  try {
    const RunConfig cfg = load_config(config_path, ov);
    validate_config(cfg);
    const bool nuclear = cfg.map_kind == "matrix-product" &&
                         cfg.loss_kind == "squared-frobenius" &&
                         cfg.reg_kind == "norm-product" && cfg.norms.size() == 2 &&
                         cfg.norms[0] == "l2" && cfg.norms[1] == "l2";
    if (!nuclear) {
      std::cerr << "error: the convex oracle exists only for the matrix-product map with the "
                   "(l2,l2) norm product and squared-frobenius loss\n";
      return 1;
    }
    const Tensor y = read_tensor_file(cfg.data_path);
    const OracleResult res = solve_convex_nuclear(y, cfg.lambda, 1e-12);
    const FactorSet factors = factor_oracle_solution(res.xstar);

    fs::create_directories(cfg.out_dir);
    write_tensor_file((fs::path(cfg.out_dir) / "xstar.txt").string(), res.xstar);
    write_factor_set((fs::path(cfg.out_dir) / "oracle_factors.txt").string(), factors);
    std::ofstream out((fs::path(cfg.out_dir) / "objective.txt").string());
    out << format_double(res.objective) << "\n";
    std::cout << "objective: " << format_double(res.objective) << " iterations: " << res.iterations
              << " converged: " << (res.converged ? "true" : "false") << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_experiment(const std::string& name, const std::string& config_path,
                   const CliOverrides& ov) {
  try {
    const RunConfig cfg = load_config(config_path, ov);
    fs::create_directories(cfg.out_dir);

    if (name == "degree-mismatch") {
      validate_config(cfg);
      const HomogeneousMap map = build_map(cfg);
      Tensor y = read_tensor_file(cfg.data_path);
      const Loss loss = Loss::squared_frobenius(std::move(y));
      // sum of slice norms: positively homogeneous with degree 1 < p
      const Regularizer mism = Regularizer::custom(
          "norm-sum", 1, [](const std::vector<Tensor>& s) {
            double v = 0.0;
            for (const Tensor& t : s) v += frobenius_norm(t);
            return v;
          });
      std::vector<double> eps_grid;
      for (double e = 1e-4; e <= 1.0000001e-2; e *= std::pow(100.0, 1.0 / 8.0)) eps_grid.push_back(e);
      const DegreeMismatchReport rep =
          degree_mismatch_probe(map, mism, loss, cfg.lambda, eps_grid, 100, cfg.seed);
      std::vector<std::vector<double>> rows;
      for (const auto& r : rep.rows) {
        rows.push_back({r.kind == "mismatched" ? 0.0 : 1.0, static_cast<double>(r.direction),
                        r.eps, r.delta});
      }
      write_csv((fs::path(cfg.out_dir) / "degree_mismatch.csv").string(),
                {"kind", "direction", "eps", "delta"}, rows);

      Rng rng(cfg.seed + 7);
      FactorSet dup_fs({rng.uniform_tensor(Shape({cfg.rows, 2}), -1.0, 1.0),
                        rng.uniform_tensor(Shape({cfg.cols, 2}), -1.0, 1.0)});
      const DuplicationReport dup = duplication_scaling_probe(dup_fs, 3.0);
      write_csv((fs::path(cfg.out_dir) / "duplication.csv").string(),
                {"q_power", "g_ratio", "phi_diff"}, {{3.0, dup.g_ratio, dup.phi_diff}});

      std::cerr << "degree-mismatch: origin locally minimal in mismatched problem: "
                << (rep.mismatched_all_increase ? "yes" : "no")
                << "; matched descent direction exists: "
                << (rep.matched_descent_exists ? "yes" : "no")
                << "; duplication ratio: " << dup.g_ratio << "\n";
      return (rep.mismatched_all_increase && rep.matched_descent_exists && dup.decreased) ? 0 : 2;
    }

    if (name == "omega-equivalence") {
      const MetaConfig meta_cfg = build_meta_config(cfg);
      std::vector<std::vector<double>> rows;
      double worst = 0.0;
      RunConfig c12 = cfg;
      c12.reg_kind = "norm-product";
      RunConfig c13 = cfg;
      c13.reg_kind = "power-sum";
      const Problem p12 = build_problem(c12);
      const Problem p13 = build_problem(c13);
      const FactorSet init12 = random_init(p12.map(), p12.reg(), cfg.r_init, cfg.seed);
      const FactorSet init13 = random_init(p13.map(), p13.reg(), cfg.r_init, cfg.seed);
      const MetaResult r12 = run_meta(p12, init12, std::nullopt, meta_cfg);
      const MetaResult r13 = run_meta(p13, init13, std::nullopt, meta_cfg);
      const double f12 = p12.objective_factored(r12.factors, r12.q);
      const double f13 = p13.objective_factored(r13.factors, r13.q);
      const double gap = std::abs(f12 - f13) / std::max(1e-300, std::abs(f12));
      worst = gap;
      rows.push_back({0.0, f12, f13, gap});
      write_csv((fs::path(cfg.out_dir) / "omega_equivalence.csv").string(),
                {"instance", "objective_norm_product", "objective_power_sum", "rel_gap"}, rows);
      std::cerr << "omega-equivalence: rel gap " << worst << "\n";
      return worst <= 1e-4 ? 0 : 2;
    }

    if (name == "path-sweep") {
      const Problem prob = build_problem(cfg);
      const MetaConfig meta_cfg = build_meta_config(cfg);
      FactorSet init = random_init(prob.map(), prob.reg(), cfg.r_init, cfg.seed);
      const DescentResult d = descend(prob, std::move(init), std::nullopt, meta_cfg.descent);
      const auto theta = find_null_theta(prob.map(), prob.reg(), d.factors, meta_cfg.null_tol);
      if (!theta.has_value()) {
        std::cerr << "error: no null direction at the stationary point; use r_init > card(D)\n";
        return 1;
      }
      std::vector<double> gammas;
      for (int j = 0; j <= 16; ++j) gammas.push_back(static_cast<double>(j) / 16.0);
      const std::vector<double> objs =
          collapse_path_objectives(prob, d.factors, d.q, *theta, gammas);
      std::vector<std::vector<double>> rows;
      for (size_t j = 0; j < gammas.size(); ++j) rows.push_back({gammas[j], objs[j]});
      write_csv((fs::path(cfg.out_dir) / "path_sweep.csv").string(), {"gamma", "objective"}, rows);
      const auto [mn, mx] = std::minmax_element(objs.begin(), objs.end());
      std::cerr << "path-sweep: objective range " << (*mx - *mn) << " over gamma in [0,1]\n";
      return 0;
    }

    std::cerr << "error: unknown experiment '" << name
              << "' (expected degree-mismatch, omega-equivalence, path-sweep)\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace homopt
