#include "kolpinn/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace kolpinn {

namespace {

using nlohmann::json;

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ConfigError(std::string("missing config key: ") + key);
  }
  return *it;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  return it->get<T>();
}

std::vector<double> flatten_matrix(const json& j, int d, const char* what) {
  std::vector<double> out;
  if (j.is_array() && !j.empty() && j.front().is_array()) {
    for (const auto& row : j) {
      for (const auto& v : row) out.push_back(v.get<double>());
    }
  } else {
    out = j.get<std::vector<double>>();
  }
  if (out.size() != static_cast<std::size_t>(d) * static_cast<std::size_t>(d)) {
    throw ConfigError(std::string(what) + " must be a d x d matrix");
  }
  return out;
}

KolmogorovPde build_pde(const json& j) {
  const std::string kind = require(j, "kind").get<std::string>();
  KolmogorovPde pde;
  if (kind == "heat") {
    const int d = require(j, "dim").get<int>();
    const double kappa = get_or(j, "kappa", 1.0);
    pde = heat_instance(d, kappa);
    std::vector<int> modes = get_or(j, "modes", std::vector<int>(d, 1));
    attach_sine_data(pde, std::move(modes));
  } else if (kind == "black-scholes") {
    const auto beta = require(j, "beta").get<std::vector<double>>();
    const int d = static_cast<int>(beta.size());
    std::vector<double> rho(static_cast<std::size_t>(d) * d, 0.0);
    if (j.contains("rho")) {
      rho = flatten_matrix(j["rho"], d, "rho");
    } else {
      for (int i = 0; i < d; ++i) {
        rho[static_cast<std::size_t>(i) * d + i] = 1.0;
      }
    }
    pde = black_scholes_instance(beta, rho, get_or(j, "mu_rate", 0.0));
    std::vector<double> weights =
        get_or(j, "weights", std::vector<double>(beta.size(), 1.0 / d));
    attach_basket_call(pde, std::move(weights), get_or(j, "strike", 1.0),
                       get_or(j, "smoothing_width", 0.05));
  } else {
    throw ConfigError("unknown pde kind: " + kind);
  }
  if (j.contains("horizon")) pde.horizon = j["horizon"].get<double>();
  if (j.contains("box_lo")) pde.box_lo = j["box_lo"].get<double>();
  if (j.contains("box_hi")) pde.box_hi = j["box_hi"].get<double>();
  if (!(pde.horizon > 0.0) || !(pde.box_hi > pde.box_lo)) {
    throw ConfigError("pde requires horizon > 0 and box_hi > box_lo");
  }
  pde.validate();
  return pde;
}

Architecture build_arch(const json& j, int pde_dim) {
  Architecture arch;
  if (j.contains("widths")) {
    arch.widths = j["widths"].get<std::vector<int>>();
  } else {
    const int L = get_or(j, "depth", 3);
    const int W = get_or(j, "width", 20);
    arch.widths.assign(static_cast<std::size_t>(L + 1), W);
    arch.widths.front() = pde_dim + 1;
    arch.widths.back() = 1;
  }
  arch.weight_bound = get_or(j, "weight_bound", 2.0);
  arch.activation =
      activation_from_string(get_or<std::string>(j, "activation", "tanh"));
  if (arch.widths.size() < 2 || arch.widths.front() != pde_dim + 1 ||
      arch.widths.back() != 1 || arch.weight_bound <= 0.0) {
    throw ConfigError(
        "architecture must map pde dim + 1 inputs to 1 output with R > 0");
  }
  return arch;
}

}  // namespace

RunConfig parse_config(const json& j) {
  RunConfig cfg;
  cfg.raw = j;
  if (!j.contains("seed")) {
    throw ConfigError("config must set an explicit seed");
  }
  cfg.seed = j["seed"].get<std::uint64_t>();
  cfg.threads = get_or(j, "threads", 0);
  cfg.out_dir = get_or<std::string>(j, "out", ".");

  cfg.pde = build_pde(require(j, "pde"));
  cfg.arch = build_arch(j.contains("architecture") ? j["architecture"]
                                                   : json::object(),
                        cfg.pde.dim);

  if (j.contains("collocation")) {
    const json& c = j["collocation"];
    cfg.n_interior = get_or<std::size_t>(c, "interior", cfg.n_interior);
    cfg.n_boundary = get_or<std::size_t>(c, "boundary", cfg.n_boundary);
    cfg.n_initial = get_or<std::size_t>(c, "initial", cfg.n_initial);
  }
  if (cfg.n_interior < 1 || cfg.n_boundary < 1 || cfg.n_initial < 1) {
    throw ConfigError("collocation counts must be positive");
  }
  cfg.m_eval = get_or<std::size_t>(j, "m_eval", cfg.m_eval);

  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    cfg.optimizer.adam_iterations =
        get_or(o, "adam_iterations", cfg.optimizer.adam_iterations);
    cfg.optimizer.adam_step = get_or(o, "adam_step", cfg.optimizer.adam_step);
    cfg.optimizer.adam_beta1 =
        get_or(o, "adam_beta1", cfg.optimizer.adam_beta1);
    cfg.optimizer.adam_beta2 =
        get_or(o, "adam_beta2", cfg.optimizer.adam_beta2);
    cfg.optimizer.lbfgs_iterations =
        get_or(o, "lbfgs_iterations", cfg.optimizer.lbfgs_iterations);
    cfg.optimizer.lbfgs_memory =
        get_or(o, "lbfgs_memory", cfg.optimizer.lbfgs_memory);
    cfg.optimizer.history_stride =
        get_or(o, "history_stride", cfg.optimizer.history_stride);
    const std::string mode =
        get_or<std::string>(o, "gradient_mode", "analytic");
    if (mode == "analytic") {
      cfg.optimizer.gradient_mode = GradientMode::Analytic;
    } else if (mode == "finite-difference") {
      cfg.optimizer.gradient_mode = GradientMode::FiniteDifference;
    } else {
      throw ConfigError("unknown gradient_mode: " + mode);
    }
    if (cfg.optimizer.adam_iterations < 0 ||
        cfg.optimizer.lbfgs_iterations < 0) {
      throw ConfigError("iteration counts must be non-negative");
    }
  }
  cfg.optimizer.threads = cfg.threads;

  if (j.contains("dynkin")) {
    const json& d = j["dynkin"];
    cfg.dynkin.N = get_or(d, "N", cfg.dynkin.N);
    cfg.dynkin.M = get_or<std::size_t>(d, "M", cfg.dynkin.M);
    cfg.dynkin.substeps = get_or(d, "substeps", cfg.dynkin.substeps);
    if (d.contains("scheme")) {
      cfg.dynkin.scheme = scheme_from_string(d["scheme"].get<std::string>());
    }
    if (d.contains("points")) {
      for (const auto& p : d["points"]) {
        cfg.dynkin.points.push_back(p.get<std::vector<double>>());
      }
    }
    if (d.contains("times")) {
      cfg.dynkin.times = d["times"].get<std::vector<double>>();
    }
    if (cfg.dynkin.N < 1 || cfg.dynkin.M < 1 || cfg.dynkin.substeps < 1) {
      throw ConfigError("dynkin N, M and substeps must be positive");
    }
    for (const auto& p : cfg.dynkin.points) {
      if (p.size() != static_cast<std::size_t>(cfg.pde.dim)) {
        throw ConfigError("dynkin points must have pde dimension");
      }
    }
  }
  if (cfg.dynkin.points.empty()) {
    cfg.dynkin.points.push_back(std::vector<double>(
        static_cast<std::size_t>(cfg.pde.dim),
        0.5 * (cfg.pde.box_lo + cfg.pde.box_hi)));
  }
  if (cfg.dynkin.times.empty()) cfg.dynkin.times.push_back(cfg.pde.horizon);

  if (j.contains("sample_size")) {
    const json& s = j["sample_size"];
    cfg.sample_size.kind = get_or<std::string>(s, "kind", "supervised");
    cfg.sample_size.eps = get_or(s, "eps", cfg.sample_size.eps);
    cfg.sample_size.eta = get_or(s, "eta", cfg.sample_size.eta);
    cfg.sample_size.cq = get_or<std::string>(s, "cq", "ledger");
    cfg.sample_size.cq_trials =
        get_or<std::size_t>(s, "cq_trials", cfg.sample_size.cq_trials);
    cfg.sample_size.k = get_or(s, "k", cfg.sample_size.k);
    cfg.sample_size.a = get_or(s, "a", cfg.sample_size.a);
    cfg.sample_size.c = get_or(s, "c", cfg.sample_size.c);
    cfg.sample_size.lipschitz =
        get_or(s, "lipschitz", cfg.sample_size.lipschitz);
    cfg.sample_size.mode = get_or<std::string>(s, "mode", "probabilistic");
    if (cfg.sample_size.kind != "supervised" &&
        cfg.sample_size.kind != "pinn" && cfg.sample_size.kind != "generic") {
      throw ConfigError("unknown sample_size kind: " + cfg.sample_size.kind);
    }
    if (!(cfg.sample_size.eps > 0.0)) {
      throw ConfigError("sample_size eps must be positive");
    }
  }

  if (j.contains("certify")) {
    const json& c = j["certify"];
    cfg.certify.c2_mode = get_or<std::string>(c, "c2_mode", "oracle");
    cfg.certify.c2_value = get_or(c, "c2_value", 0.0);
    cfg.certify.fd_step = get_or(c, "fd_step", cfg.certify.fd_step);
    cfg.certify.checkpoint = get_or<std::string>(c, "checkpoint", "");
    if (cfg.certify.c2_mode != "oracle" && cfg.certify.c2_mode != "user" &&
        cfg.certify.c2_mode != "heuristic") {
      throw ConfigError("unknown c2_mode: " + cfg.certify.c2_mode);
    }
    if (cfg.certify.c2_mode == "user" && cfg.certify.c2_value < 0.0) {
      throw ConfigError("user c2_value must be non-negative");
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path + ": " + e.what());
  }
  try {
    return parse_config(j);
  } catch (const json::exception& e) {
    throw ConfigError("bad config value in " + path + ": " + e.what());
  }
}

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace kolpinn
