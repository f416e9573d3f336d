#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "kolpinn/dynkin.hpp"
#include "kolpinn/pde.hpp"
#include "kolpinn/training.hpp"

namespace kolpinn {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dynkin probe table request.
struct DynkinConfig {
  int N = 128;
  std::size_t M = 20000;
  Scheme scheme = Scheme::ExactConstant;
  int substeps = 16;
  std::vector<std::vector<double>> points;
  std::vector<double> times;
};

struct SampleSizeConfig {
  std::string kind = "supervised";  // supervised | pinn | generic
  double eps = 0.1;
  double eta = 0.01;
  std::string cq = "ledger";  // ledger | empirical (pinn kind)
  std::size_t cq_trials = 1000;
  // generic kind inputs
  double k = 1.0, a = 1.0, c = 1.0, lipschitz = 1.0;
  std::string mode = "probabilistic";  // probabilistic | cumulative
};

struct CertifyConfig {
  std::string c2_mode = "oracle";  // oracle | user | heuristic
  double c2_value = 0.0;           // user mode
  double fd_step = 1e-4;           // heuristic mode (Dynkin finite differences)
  std::string checkpoint;
};

// One fully seeded run description; `raw` is echoed into every artifact.
struct RunConfig {
  nlohmann::json raw;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out_dir = ".";

  KolmogorovPde pde;
  Architecture arch;

  std::size_t n_interior = 512, n_boundary = 512, n_initial = 512;
  std::size_t m_eval = 4096;
  OptimizerConfig optimizer;

  DynkinConfig dynkin;
  SampleSizeConfig sample_size;
  CertifyConfig certify;
};

// Throws ConfigError on unreadable files, malformed JSON, missing seeds or
// inconsistent PDE/architecture specs.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// 17-significant-digit decimal (round-trip exact for doubles).
std::string format_full(double v);

// Write-to-temp then atomic rename; no partial artifacts on failure.
void atomic_write(const std::string& path, const std::string& content);

}  // namespace kolpinn
