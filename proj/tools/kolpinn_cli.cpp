#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "kolpinn/certificates.hpp"
#include "kolpinn/config.hpp"
#include "kolpinn/dynkin.hpp"
#include "kolpinn/net.hpp"
#include "kolpinn/rng.hpp"
#include "kolpinn/training.hpp"
#include "kolpinn/verify.hpp"

namespace {

using nlohmann::json;
using namespace kolpinn;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  int threads = -1;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
  auto* opt = cmd->add_option("--config", flags.config_path, "config file");
  if (config_required) opt->required();
  cmd->add_option("--seed", flags.seed, "seed override");
  cmd->add_option("--threads", flags.threads, "thread count override");
  cmd->add_option("--out", flags.out_dir, "output directory override");
}

RunConfig load_with_overrides(const CommonFlags& flags) {
  std::ifstream in(flags.config_path);
  if (!in) throw ConfigError("cannot read config file: " + flags.config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + flags.config_path + ": " +
                      e.what());
  }
  // Seed and output overrides become part of the echoed config; the thread
  // count is an execution detail and never changes artifacts.
  if (flags.seed >= 0) j["seed"] = static_cast<std::uint64_t>(flags.seed);
  if (!flags.out_dir.empty()) j["out"] = flags.out_dir;
  RunConfig cfg;
  try {
    cfg = parse_config(j);
  } catch (const json::exception& e) {
    throw ConfigError("bad config value in " + flags.config_path + ": " +
                      e.what());
  }
  if (flags.threads >= 0) {
    cfg.threads = flags.threads;
    cfg.optimizer.threads = flags.threads;
  }
  return cfg;
}

std::string artifact(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

json json_estimate(const McEstimate& e) {
  return {{"estimate", e.estimate}, {"standard_error", e.standard_error}};
}

int cmd_train(const CommonFlags& flags) {
  const RunConfig cfg = load_with_overrides(flags);
  const CollocationSets sets = sample_sets(
      cfg.pde, cfg.n_interior, cfg.n_boundary, cfg.n_initial, cfg.seed);
  const ParameterVector start = random_params(cfg.arch, cfg.seed);
  const TrainingReport report = train(start, cfg.pde, sets, cfg.optimizer);

  std::ostringstream ckpt;
  save_checkpoint(report.params, ckpt);
  atomic_write(artifact(cfg, "checkpoint.txt"), ckpt.str());

  std::ostringstream csv;
  csv << "iteration,interior,spatial,temporal,total\n";
  for (const HistoryRow& row : report.history) {
    csv << row.iteration << ',' << format_full(row.interior) << ','
        << format_full(row.spatial) << ',' << format_full(row.temporal) << ','
        << format_full(row.total) << '\n';
  }
  atomic_write(artifact(cfg, "loss.csv"), csv.str());

  json summary;
  summary["config"] = cfg.raw;
  summary["checkpoint"] = "checkpoint.txt";
  summary["loss_csv"] = "loss.csv";
  summary["iterations"] = report.iterations;
  summary["final"] = {{"interior", report.final_parts.interior},
                      {"spatial", report.final_parts.spatial},
                      {"temporal", report.final_parts.temporal},
                      {"total", report.final_total}};
  atomic_write(artifact(cfg, "summary.json"), summary.dump(2) + "\n");

  std::cout << "trained " << report.iterations << " iterations, E_T = "
            << format_full(report.final_total) << "\n";
  std::cerr << "wall seconds: " << report.wall_seconds << "\n";
  return kExitOk;
}

int cmd_certify(const CommonFlags& flags, const std::string& ckpt_flag) {
  const RunConfig cfg = load_with_overrides(flags);
  std::string ckpt_path =
      !ckpt_flag.empty() ? ckpt_flag : cfg.certify.checkpoint;
  if (ckpt_path.empty()) ckpt_path = artifact(cfg, "checkpoint.txt");
  std::ifstream ck(ckpt_path);
  if (!ck) throw ConfigError("cannot read checkpoint: " + ckpt_path);
  const ParameterVector params = load_checkpoint(ck);

  const StabilityConstants constants = stability_constants(cfg.pde);
  const ResidualNorms norms =
      residual_l2_norms(params, cfg.pde, cfg.m_eval,
                        counter_hash(cfg.seed, 0xCE01), cfg.threads);
  double C2 = 0.0;
  C2Mode mode = C2Mode::Oracle;
  if (cfg.certify.c2_mode == "oracle") {
    if (!cfg.pde.oracle || !cfg.pde.oracle->spatial_gradient) {
      throw ConfigError("oracle C2 mode requires a pde with a known solution");
    }
    C2 = c2_oracle(cfg.pde, params, cfg.m_eval,
                   counter_hash(cfg.seed, 0xCE02), cfg.threads);
  } else if (cfg.certify.c2_mode == "user") {
    mode = C2Mode::User;
    C2 = cfg.certify.c2_value;
  } else {
    mode = C2Mode::Heuristic;
    const PathEnsemble ens = simulate_base_paths(
        cfg.pde, cfg.dynkin.N, cfg.dynkin.M, counter_hash(cfg.seed, 0xCE03),
        cfg.dynkin.scheme, cfg.dynkin.substeps, cfg.threads);
    const double h = cfg.certify.fd_step;
    const int threads = cfg.threads;
    const KolmogorovPde& pde = cfg.pde;
    ReferenceGradient grad = [&ens, &pde, h, threads](
                                 std::span<const double> y, double t) {
      std::vector<double> g(y.size());
      std::vector<double> w(y.begin(), y.end());
      for (std::size_t i = 0; i < y.size(); ++i) {
        w[i] = y[i] + h;
        const double up = dynkin_estimate(pde, ens, w, t, threads);
        w[i] = y[i] - h;
        const double dn = dynkin_estimate(pde, ens, w, t, threads);
        w[i] = y[i];
        g[i] = (up - dn) / (2.0 * h);
      }
      return g;
    };
    C2 = c2_from_reference(cfg.pde, params, grad, cfg.m_eval,
                           counter_hash(cfg.seed, 0xCE02), cfg.threads);
  }

  Certificate cert = l2_certificate(norms, constants, C2, mode);
  json report;
  report["config"] = cfg.raw;
  report["checkpoint"] = ckpt_path;
  report["constants"] = {{"C0", constants.C0},
                         {"C1", constants.C1},
                         {"C2", C2},
                         {"C3", constants.C3},
                         {"div_mu_norm", constants.div_mu_norm},
                         {"mu_sup", constants.mu_sup},
                         {"provenance", to_string(constants.source)}};
  report["residual_norms"] = {{"interior2", json_estimate(norms.interior2)},
                              {"spatial2", json_estimate(norms.spatial2)},
                              {"temporal2", json_estimate(norms.temporal2)},
                              {"m_eval", norms.m_eval}};
  report["c2_mode"] = to_string(mode);
  report["heuristic"] = cert.heuristic;
  report["bound"] = cert.bound;

  if (cfg.pde.oracle && cfg.pde.oracle->value) {
    cert.measured2 =
        measured_l2_error(params, cfg.pde, cfg.m_eval,
                          counter_hash(cfg.seed, 0xCE04), cfg.threads);
    report["measured2"] = json_estimate(*cert.measured2);
    const bool valid = cert.measured2->estimate <= cert.bound;
    report["valid"] = valid;
    std::cout << "measured <= bound: " << (valid ? "true" : "false") << "\n";
  }
  std::cout << "bound on squared L2 error: " << format_full(cert.bound)
            << (cert.heuristic ? "  [non-rigorous heuristic C2]" : "")
            << "\n";
  atomic_write(artifact(cfg, "certificate.json"), report.dump(2) + "\n");
  return kExitOk;
}

int cmd_dynkin(const CommonFlags& flags) {
  const RunConfig cfg = load_with_overrides(flags);
  std::ostringstream csv;
  for (int i = 0; i < cfg.pde.dim; ++i) csv << "x" << i << ',';
  csv << "t,estimate,standard_error\n";
  for (const auto& x : cfg.dynkin.points) {
    for (double t : cfg.dynkin.times) {
      const McEstimate est = riemann_reference(
          cfg.pde, x, t, cfg.dynkin.N, cfg.dynkin.M,
          counter_hash(cfg.seed, 0xD11E), cfg.dynkin.scheme,
          cfg.dynkin.substeps, cfg.threads);
      for (double xi : x) csv << format_full(xi) << ',';
      csv << format_full(t) << ',' << format_full(est.estimate) << ','
          << format_full(est.standard_error) << '\n';
    }
  }
  atomic_write(artifact(cfg, "dynkin.csv"), csv.str());
  std::cout << csv.str();
  return kExitOk;
}

int cmd_sample_size(const CommonFlags& flags) {
  const RunConfig cfg = load_with_overrides(flags);
  const SampleSizeConfig& s = cfg.sample_size;
  json out;
  out["config"] = cfg.raw;
  auto json_size = [](const SampleSize& m) {
    return json{{"raw", m.raw},
                {"count", m.count},
                {"floored", m.floored},
                {"exact", m.exact}};
  };
  std::ostringstream table;
  table << "part,raw,count\n";
  if (s.kind == "generic") {
    const SampleSize m = sample_size_generic(
        s.k, s.a, s.c, s.lipschitz, s.eps, s.eta,
        s.mode == "cumulative" ? SampleSizeMode::Cumulative
                               : SampleSizeMode::Probabilistic);
    out["generic"] = json_size(m);
    table << "all," << format_full(m.raw) << ',' << m.count << '\n';
  } else {
    const LipschitzLedger ledger = lipschitz_ledger(cfg.pde, cfg.arch);
    double c_i = ledger.c_i;
    if (s.kind == "pinn" && s.cq == "empirical") {
      c_i = cq_empirical(cfg.pde, cfg.arch, s.cq_trials,
                         counter_hash(cfg.seed, 0xC4), cfg.threads);
      out["cq_empirical"] = c_i;
    }
    const SampleSizePlan plan = sample_size_specialized(
        cfg.pde, cfg.arch, s.eps,
        s.kind == "pinn" ? PlanKind::Pinn : PlanKind::Supervised, c_i,
        ledger.c_s, ledger.c_t);
    out["plan"] = {{"kind", s.kind},
                   {"eps", s.eps},
                   {"interior", json_size(plan.interior)},
                   {"spatial", json_size(plan.spatial)},
                   {"temporal", json_size(plan.temporal)}};
    table << "interior," << format_full(plan.interior.raw) << ','
          << plan.interior.count << '\n'
          << "spatial," << format_full(plan.spatial.raw) << ','
          << plan.spatial.count << '\n'
          << "temporal," << format_full(plan.temporal.raw) << ','
          << plan.temporal.count << '\n';
  }
  atomic_write(artifact(cfg, "sample_size.json"), out.dump(2) + "\n");
  atomic_write(artifact(cfg, "sample_size.csv"), table.str());
  std::cout << table.str();
  return kExitOk;
}

int cmd_verify(const std::string& suite_id, std::uint64_t seed, int threads) {
  SuiteResult suite;
  try {
    suite = run_suite(suite_id, seed, threads);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  for (const CheckResult& c : suite.checks) {
    std::cout << (c.passed ? "PASS" : "FAIL") << "  " << suite.suite << '/'
              << c.name << "  " << c.detail << "\n";
  }
  return suite.all_passed() ? kExitOk : kExitNumerical;
}

int cmd_report(const std::string& dir) {
  namespace fs = std::filesystem;
  bool found = false;
  for (const char* name : {"summary.json", "certificate.json",
                           "sample_size.json"}) {
    const fs::path p = fs::path(dir) / name;
    std::ifstream in(p);
    if (!in) continue;
    found = true;
    json j;
    in >> j;
    std::cout << "== " << name << " ==\n";
    if (j.contains("final")) {
      std::cout << "  E_T = " << format_full(j["final"]["total"].get<double>())
                << " after " << j["iterations"].get<int>() << " iterations\n";
    }
    if (j.contains("bound")) {
      std::cout << "  bound = " << format_full(j["bound"].get<double>());
      if (j.contains("measured2")) {
        std::cout << ", measured = "
                  << format_full(j["measured2"]["estimate"].get<double>())
                  << ", valid = " << (j.value("valid", false) ? "true" : "false");
      }
      std::cout << "\n";
    }
    if (j.contains("plan")) {
      std::cout << "  sample sizes: interior "
                << j["plan"]["interior"]["count"].get<long long>()
                << ", spatial "
                << j["plan"]["spatial"]["count"].get<long long>()
                << ", temporal "
                << j["plan"]["temporal"]["count"].get<long long>() << "\n";
    }
  }
  if (!found) {
    std::cerr << "no artifacts found in " << dir << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PINN training, Dynkin solving and error certification for "
               "linear Kolmogorov PDEs"};
  app.require_subcommand(1);

  CommonFlags train_flags, certify_flags, dynkin_flags, size_flags;
  std::string certify_checkpoint;
  std::string verify_suite;
  std::uint64_t verify_seed = 1;
  int verify_threads = 0;
  std::string report_dir = ".";

  auto* train = app.add_subcommand("train", "train a PINN");
  add_common(train, train_flags, true);

  auto* certify = app.add_subcommand("certify", "emit an L2 certificate");
  add_common(certify, certify_flags, true);
  certify->add_option("--checkpoint", certify_checkpoint, "checkpoint path");

  auto* dynkin = app.add_subcommand("dynkin", "Dynkin-formula solution table");
  add_common(dynkin, dynkin_flags, true);

  auto* size = app.add_subcommand("sample-size", "Hoeffding sample-size plan");
  add_common(size, size_flags, true);

  auto* verify = app.add_subcommand("verify", "run an invariant suite");
  verify->add_option("suite", verify_suite, "gradients|lipschitz|rates|certificate")
      ->required();
  verify->add_option("--seed", verify_seed, "suite seed");
  verify->add_option("--threads", verify_threads, "thread count");

  auto* report = app.add_subcommand("report", "summarize output artifacts");
  report->add_option("--out", report_dir, "artifact directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train->parsed()) return cmd_train(train_flags);
    if (certify->parsed()) return cmd_certify(certify_flags, certify_checkpoint);
    if (dynkin->parsed()) return cmd_dynkin(dynkin_flags);
    if (size->parsed()) return cmd_sample_size(size_flags);
    if (verify->parsed())
      return cmd_verify(verify_suite, verify_seed, verify_threads);
    if (report->parsed()) return cmd_report(report_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
