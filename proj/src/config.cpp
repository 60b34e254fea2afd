#include "homopt/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "homopt/io.hpp"

namespace homopt {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<index_t> parse_index_list(const std::string& s, const std::string& path, int line) {
  std::vector<index_t> out;
  for (const std::string& tok : split_ws(s)) {
    try {
      out.push_back(std::stoll(tok));
    } catch (...) {
      throw ConfigError(path, line, "expected an integer list, got '" + tok + "'");
    }
  }
  return out;
}

double parse_double(const std::string& s, const std::string& path, int line) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ConfigError(path, line, "expected a number, got '" + s + "'");
  }
}

index_t parse_index(const std::string& s, const std::string& path, int line) {
  try {
    return std::stoll(s);
  } catch (...) {
    throw ConfigError(path, line, "expected an integer, got '" + s + "'");
  }
}

// paths in the config are relative to the config file's directory
std::string resolve_path(const std::string& cfg_path, const std::string& p) {
  if (p.empty() || p.front() == '/') return p;
  const std::filesystem::path base = std::filesystem::path(cfg_path).parent_path();
  return (base / p).string();
}

}  // namespace

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  RunConfig cfg;
  cfg.source_path = path;
  std::string section;
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(path, ln, "unterminated section header");
      section = line.substr(1, line.size() - 2);
      if (section != "map" && section != "regularizer" && section != "loss" &&
          section != "solver") {
        throw ConfigError(path, ln, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path, ln, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(path, ln, "key outside of any section");

    if (section == "map") {
      if (key == "kind") cfg.map_kind = val;
      else if (key == "rows") cfg.rows = parse_index(val, path, ln);
      else if (key == "cols") cfg.cols = parse_index(val, path, ln);
      else if (key == "dims") cfg.cp_dims = parse_index_list(val, path, ln);
      else if (key == "data") cfg.relu_data_path = resolve_path(path, val);
      else if (key == "widths") cfg.relu_widths = parse_index_list(val, path, ln);
      else if (key == "out") cfg.relu_out = parse_index(val, path, ln);
      else throw ConfigError(path, ln, "unknown [map] key '" + key + "'");
    } else if (section == "regularizer") {
      if (key == "kind") cfg.reg_kind = val;
      else if (key == "norms") cfg.norms = split_ws(val);
      else if (key == "cones") cfg.cones = split_ws(val);
      else throw ConfigError(path, ln, "unknown [regularizer] key '" + key + "'");
    } else if (section == "loss") {
      if (key == "kind") cfg.loss_kind = val;
      else if (key == "data") cfg.data_path = resolve_path(path, val);
      else if (key == "qterm") cfg.qterm = val;
      else if (key == "qweight") cfg.q_weight = parse_double(val, path, ln);
      else throw ConfigError(path, ln, "unknown [loss] key '" + key + "'");
    } else {  // solver
      if (key == "lambda") cfg.lambda = parse_double(val, path, ln);
      else if (key == "r_init") cfg.r_init = parse_index(val, path, ln);
      else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_index(val, path, ln));
      else if (key == "out") cfg.out_dir = val;
      else if (key == "max_iters") cfg.max_iters = static_cast<int>(parse_index(val, path, ln));
      else if (key == "stationarity_tol") cfg.stationarity_tol = parse_double(val, path, ln);
      else if (key == "backtrack_shrink") cfg.backtrack_shrink = parse_double(val, path, ln);
      else if (key == "initial_step") cfg.initial_step = parse_double(val, path, ln);
      else if (key == "min_objective_decrease") cfg.min_objective_decrease = parse_double(val, path, ln);
      else if (key == "outer_cap") cfg.outer_cap = static_cast<int>(parse_index(val, path, ln));
      else if (key == "null_tol") cfg.null_tol = parse_double(val, path, ln);
      else if (key == "path_tol") cfg.path_tol = parse_double(val, path, ln);
      else if (key == "cert_tol") cfg.cert_tol = parse_double(val, path, ln);
      else if (key == "escape_eps") cfg.escape_eps = parse_double(val, path, ln);
      else if (key == "polar_restarts") cfg.polar_restarts = static_cast<int>(parse_index(val, path, ln));
      else if (key == "polar_iters") cfg.polar_iters = static_cast<int>(parse_index(val, path, ln));
      else throw ConfigError(path, ln, "unknown [solver] key '" + key + "'");
    }
  }
  return cfg;
}

void validate_config(const RunConfig& cfg) {
  const std::string& p = cfg.source_path;
  if (cfg.map_kind.empty()) throw ConfigError(p, 0, "[map] kind is required");
  if (cfg.loss_kind != "squared-frobenius" && cfg.loss_kind != "logistic") {
    throw ConfigError(p, 0, "[loss] kind must be squared-frobenius or logistic");
  }
  if (cfg.data_path.empty()) throw ConfigError(p, 0, "[loss] data file is required");
  if (!std::filesystem::exists(cfg.data_path)) {
    throw ConfigError(p, 0, "loss data file does not exist: " + cfg.data_path);
  }
  if (cfg.map_kind == "relu-network") {
    if (cfg.relu_data_path.empty()) throw ConfigError(p, 0, "[map] data file is required for relu-network");
    if (!std::filesystem::exists(cfg.relu_data_path)) {
      throw ConfigError(p, 0, "map data file does not exist: " + cfg.relu_data_path);
    }
  }
  if (cfg.lambda <= 0.0) throw ConfigError(p, 0, "[solver] lambda is required and must be positive");
  if (cfg.r_init < 1) throw ConfigError(p, 0, "[solver] r_init must be >= 1");
  if (cfg.norms.empty()) throw ConfigError(p, 0, "[regularizer] norms are required");
}

HomogeneousMap build_map(const RunConfig& cfg) {
  if (cfg.map_kind == "matrix-product") {
    if (cfg.rows < 1 || cfg.cols < 1) {
      throw ConfigError(cfg.source_path, 0, "matrix-product needs rows and cols");
    }
    return HomogeneousMap::matrix_product(cfg.rows, cfg.cols);
  }
  if (cfg.map_kind == "cp-outer-product") {
    if (cfg.cp_dims.size() < 2) {
      throw ConfigError(cfg.source_path, 0, "cp-outer-product needs dims with K >= 2 entries");
    }
    return HomogeneousMap::cp_outer_product(cfg.cp_dims);
  }
  if (cfg.map_kind == "relu-network") {
    Tensor v = read_tensor_file(cfg.relu_data_path);
    if (cfg.relu_out < 1) throw ConfigError(cfg.source_path, 0, "relu-network needs out >= 1");
    if (cfg.relu_widths.empty()) return HomogeneousMap::relu_network(std::move(v), cfg.relu_out);
    return HomogeneousMap::relu_network(std::move(v), cfg.relu_widths, cfg.relu_out);
  }
  throw ConfigError(cfg.source_path, 0, "unknown map kind '" + cfg.map_kind + "'");
}

Regularizer build_regularizer(const RunConfig& cfg) {
  std::vector<NormKind> norms;
  for (const std::string& n : cfg.norms) {
    try {
      norms.push_back(parse_norm(n));
    } catch (const std::exception& e) {
      throw ConfigError(cfg.source_path, 0, e.what());
    }
  }
  if (cfg.reg_kind == "norm-product") return Regularizer::norm_product(norms);
  if (cfg.reg_kind == "power-sum") return Regularizer::power_sum(norms);
  if (cfg.reg_kind == "conic-norm-product") {
    std::vector<std::optional<Cone>> cones;
    if (cfg.cones.empty()) {
      cones.assign(norms.size(), std::nullopt);
    } else {
      if (cfg.cones.size() != norms.size()) {
        throw ConfigError(cfg.source_path, 0, "cones list must match norms list length");
      }
      for (const std::string& c : cfg.cones) {
        if (c == "none") {
          cones.push_back(std::nullopt);
        } else if (c == "nonneg") {
          cones.push_back(Cone::nonneg_orthant());
        } else if (c.rfind("support:", 0) == 0) {
          cones.push_back(Cone::support_bound(std::stoll(c.substr(8))));
        } else {
          throw ConfigError(cfg.source_path, 0, "unknown cone '" + c + "'");
        }
      }
    }
    return Regularizer::conic_norm_product(norms, cones);
  }
  throw ConfigError(cfg.source_path, 0, "unknown regularizer kind '" + cfg.reg_kind + "'");
}

Problem build_problem(const RunConfig& cfg) {
  validate_config(cfg);
  HomogeneousMap map = build_map(cfg);
  Regularizer reg = build_regularizer(cfg);

  Tensor y = read_tensor_file(cfg.data_path);
  if (y.shape() != map.output_shape()) {
    throw ConfigError(cfg.source_path, 0,
                      "loss data shape " + y.shape().str() + " does not match map output shape " +
                          map.output_shape().str());
  }
  Loss loss = cfg.loss_kind == "logistic" ? Loss::logistic(std::move(y))
                                          : Loss::squared_frobenius(std::move(y));
  QTerm h = QTerm::absent();
  if (cfg.qterm == "l1") h = QTerm::l1(cfg.q_weight);
  else if (cfg.qterm == "squared-l2") h = QTerm::squared_l2(cfg.q_weight);
  else if (cfg.qterm != "absent") throw ConfigError(cfg.source_path, 0, "unknown qterm '" + cfg.qterm + "'");

  try {
    return Problem(std::move(map), std::move(reg), std::move(loss), h, cfg.lambda);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.source_path, 0, e.what());
  }
}

MetaConfig build_meta_config(const RunConfig& cfg) {
  MetaConfig m;
  m.descent.max_iters = cfg.max_iters;
  m.descent.stationarity_tol = cfg.stationarity_tol;
  m.descent.backtrack_shrink = cfg.backtrack_shrink;
  m.descent.initial_step = cfg.initial_step;
  m.descent.min_objective_decrease = cfg.min_objective_decrease;
  m.descent.seed = cfg.seed;
  m.outer_cap = cfg.outer_cap;
  m.null_tol = cfg.null_tol;
  m.path_tol = cfg.path_tol;
  m.cert_tol = cfg.cert_tol;
  m.escape_eps = cfg.escape_eps;
  m.polar.restarts = cfg.polar_restarts;
  m.polar.max_iters = cfg.polar_iters;
  m.polar.seed = cfg.seed + 0x517cc1b7ULL;
  return m;
}

}  // namespace homopt
