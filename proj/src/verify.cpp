#include "kolpinn/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "kolpinn/certificates.hpp"
#include "kolpinn/derivatives.hpp"
#include "kolpinn/dynkin.hpp"
#include "kolpinn/pde.hpp"
#include "kolpinn/rng.hpp"
#include "kolpinn/training.hpp"

namespace kolpinn {

bool SuiteResult::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.passed; });
}

std::vector<std::string> suite_names() {
  return {"gradients", "lipschitz", "rates", "certificate"};
}

double fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("slope fit needs matched samples, n >= 2");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double heat_sine_riemann(double kappa, std::span<const int> modes,
                         std::span<const double> x, double t, double T,
                         int N) {
  double m2 = 0.0;
  double phi = 1.0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    m2 += static_cast<double>(modes[i]) * modes[i];
    phi *= std::sin(std::numbers::pi * modes[i] * x[i]);
  }
  const double lambda = kappa * std::numbers::pi * std::numbers::pi * m2;
  double sum = 0.0;
  for (int n = 1; n <= N; ++n) {
    const double w = ramp(N * t / T - n + 1.0);
    if (w == 0.0) continue;
    sum += w * (-lambda) * std::exp(-lambda * n * T / N);
  }
  return phi * (1.0 + (T / N) * sum);
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

CheckResult make_check(const std::string& name, bool passed,
                       const std::string& detail) {
  return {name, passed, detail};
}

SuiteResult suite_gradients(std::uint64_t seed, int /*threads*/) {
  SuiteResult suite{"gradients", {}};
  const std::vector<Architecture> archs = {
      Architecture({2, 8, 1}, 1.0),
      Architecture({3, 6, 6, 1}, 1.5),
      Architecture({5, 4, 4, 4, 1}, 1.0),
  };
  double worst_j = 0.0, worst_h = 0.0;
  const double fd = 1e-5;
  for (std::size_t a = 0; a < archs.size(); ++a) {
    const auto& arch = archs[a];
    const ParameterVector params =
        random_params(arch, counter_hash(seed, 0x6AD0, a));
    const int din = arch.input_dim();
    for (int p = 0; p < 20; ++p) {
      std::vector<double> z(static_cast<std::size_t>(din));
      for (int i = 0; i < din; ++i) {
        z[static_cast<std::size_t>(i)] =
            uniform(-1.0, 1.0, seed, 0x6AD1, a, static_cast<std::uint64_t>(
                                                    p * din + i));
      }
      const JacobianResult J = input_jacobian(params, z);
      const HessianResult H = input_hessian(params, z);
      auto shifted = [&](int i, double h) {
        std::vector<double> w = z;
        w[static_cast<std::size_t>(i)] += h;
        return w;
      };
      for (int i = 0; i < din; ++i) {
        const double up = forward(params, shifted(i, fd))[0];
        const double dn = forward(params, shifted(i, -fd))[0];
        const double ref = (up - dn) / (2.0 * fd);
        worst_j = std::max(worst_j, std::abs(J(0, i) - ref) /
                                        std::max(1.0, std::abs(ref)));
        const JacobianResult Ju = input_jacobian(params, shifted(i, fd));
        const JacobianResult Jd = input_jacobian(params, shifted(i, -fd));
        for (int j = 0; j < din; ++j) {
          const double href = (Ju(0, j) - Jd(0, j)) / (2.0 * fd);
          worst_h = std::max(worst_h, std::abs(H(0, i, j) - href) /
                                          std::max(1.0, std::abs(href)));
        }
      }
    }
  }
  suite.checks.push_back(make_check("jacobian-matches-fd", worst_j <= 1e-6,
                                    "max rel err " + fmt(worst_j)));
  suite.checks.push_back(make_check("hessian-matches-fd", worst_h <= 1e-5,
                                    "max rel err " + fmt(worst_h)));

  // Analytic parameter gradient of E_T^2 against central differences.
  KolmogorovPde pde = heat_instance(1, 1.0);
  attach_sine_data(pde, {1});
  const CollocationSets sets = sample_sets(pde, 8, 8, 8, seed);
  const LossFunction loss = make_training_loss(pde, sets, 1);
  const Architecture arch({2, 6, 1}, 1.0);
  const ParameterVector params =
      random_params(arch, counter_hash(seed, 0x6AD2));
  const auto ga = loss.gradient(params);
  const auto gf = param_gradient(loss, params, GradientMode::FiniteDifference);
  double worst_g = 0.0;
  for (std::size_t i = 0; i < ga.size(); ++i) {
    worst_g = std::max(worst_g,
                       std::abs(ga[i] - gf[i]) / std::max(1.0, std::abs(gf[i])));
  }
  suite.checks.push_back(make_check("param-gradient-matches-fd",
                                    worst_g <= 1e-5,
                                    "max rel err " + fmt(worst_g)));
  return suite;
}

SuiteResult suite_lipschitz(std::uint64_t seed, int threads) {
  SuiteResult suite{"lipschitz", {}};
  KolmogorovPde pde = heat_instance(1, 1.0);
  attach_sine_data(pde, {1});
  const Architecture arch({2, 4, 1}, 1.0);
  const LipschitzLedger ledger = lipschitz_ledger(pde, arch);
  const int din = arch.input_dim();

  double rnet = 0.0, rjac = 0.0, rhess = 0.0;
  for (std::size_t p = 0; p < 200; ++p) {
    const ParameterVector a = random_params(arch, counter_hash(seed, 0x11B, p));
    const ParameterVector b =
        random_params(arch, counter_hash(seed, 0x11C, p));
    double dist = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      dist = std::max(dist, std::abs(a.values[i] - b.values[i]));
    }
    if (dist == 0.0) continue;
    std::vector<double> z(static_cast<std::size_t>(din));
    for (int i = 0; i < din; ++i) {
      z[static_cast<std::size_t>(i)] =
          uniform(pde.box_lo, pde.box_hi, seed, 0x11D, p,
                  static_cast<std::uint64_t>(i));
    }
    rnet = std::max(rnet,
                    std::abs(forward(a, z)[0] - forward(b, z)[0]) / dist);
    const JacobianResult Ja = input_jacobian(a, z);
    const JacobianResult Jb = input_jacobian(b, z);
    const HessianResult Ha = input_hessian(a, z);
    const HessianResult Hb = input_hessian(b, z);
    for (int i = 0; i < din; ++i) {
      rjac = std::max(rjac, std::abs(Ja(0, i) - Jb(0, i)) / dist);
      for (int j = 0; j < din; ++j) {
        rhess = std::max(rhess, std::abs(Ha(0, i, j) - Hb(0, i, j)) / dist);
      }
    }
  }
  suite.checks.push_back(make_check(
      "network-bound-dominates", rnet <= ledger.network_bound,
      "ratio " + fmt(rnet) + " <= " + fmt(ledger.network_bound)));
  suite.checks.push_back(make_check(
      "jacobian-bound-dominates", rjac <= ledger.jacobian_bound,
      "ratio " + fmt(rjac) + " <= " + fmt(ledger.jacobian_bound)));
  suite.checks.push_back(make_check(
      "hessian-bound-dominates", rhess <= ledger.hessian_bound,
      "ratio " + fmt(rhess) + " <= " + fmt(ledger.hessian_bound)));
  const double cq = cq_empirical(pde, arch, 200, seed, threads);
  suite.checks.push_back(make_check(
      "empirical-cq-below-analytic", cq <= ledger.c_i,
      fmt(cq) + " <= " + fmt(ledger.c_i)));
  return suite;
}

SuiteResult suite_rates(std::uint64_t seed, int threads) {
  SuiteResult suite{"rates", {}};
  KolmogorovPde pde = heat_instance(1, 1.0);
  const std::vector<int> modes = {1};
  attach_sine_data(pde, modes);
  const std::vector<double> x = {0.3};
  const double t = pde.horizon;

  // Monte-Carlo rate in M at fixed N around the exact Riemann value.
  {
    const int N = 8;
    const double exact = heat_sine_riemann(1.0, modes, x, t, pde.horizon, N);
    const std::vector<std::size_t> sizes = {256, 1024, 4096, 16384};
    std::vector<double> ms, errs;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      double acc = 0.0;
      const int reps = 12;
      for (int r = 0; r < reps; ++r) {
        const PathEnsemble ens = simulate_base_paths(
            pde, N, sizes[s],
            counter_hash(seed, 0x3A7E, s, static_cast<std::uint64_t>(r)),
            Scheme::ExactConstant, 16, threads);
        acc += std::abs(dynkin_estimate(pde, ens, x, t, threads) - exact);
      }
      ms.push_back(static_cast<double>(sizes[s]));
      errs.push_back(acc / reps);
    }
    const double slope = fit_loglog_slope(ms, errs);
    suite.checks.push_back(make_check(
        "mc-slope-half", std::abs(slope + 0.5) <= 0.15,
        "fitted slope " + fmt(slope)));
  }

  // Riemann-sum rate in N from the closed form.
  {
    std::vector<double> ns, errs;
    const double u = pde.oracle->value(x, t);
    for (int N : {8, 16, 32, 64, 128, 256}) {
      ns.push_back(N);
      errs.push_back(
          std::abs(heat_sine_riemann(1.0, modes, x, t, pde.horizon, N) - u));
    }
    const double slope = fit_loglog_slope(ns, errs);
    suite.checks.push_back(make_check("riemann-slope", slope <= -0.4,
                                      "fitted slope " + fmt(slope)));
  }
  return suite;
}

SuiteResult suite_certificate(std::uint64_t seed, int threads) {
  SuiteResult suite{"certificate", {}};
  KolmogorovPde pde = heat_instance(1, 1.0);
  attach_sine_data(pde, {1});
  const Architecture arch({2, 8, 1}, 1.0);
  const ParameterVector params =
      random_params(arch, counter_hash(seed, 0xCE47));

  const StabilityConstants constants = stability_constants(pde);
  suite.checks.push_back(make_check(
      "c1-recomputable",
      std::abs(constants.C1 -
               pde.horizon * std::exp((constants.C0 + constants.div_mu_norm +
                                       1.0) *
                                      pde.horizon)) <= 1e-12,
      "C1 " + fmt(constants.C1)));

  const ResidualNorms norms =
      residual_l2_norms(params, pde, 4000, counter_hash(seed, 0xCE48),
                        threads);
  const double C2 =
      c2_oracle(pde, params, 2000, counter_hash(seed, 0xCE49), threads);
  Certificate cert = l2_certificate(norms, constants, C2, C2Mode::Oracle);
  cert.measured2 =
      measured_l2_error(params, pde, 4000, counter_hash(seed, 0xCE4A),
                        threads);
  const double slack =
      3.0 * (cert.measured2->standard_error +
             constants.C1 * (norms.interior2.standard_error +
                             norms.temporal2.standard_error +
                             constants.C3 * norms.spatial2.standard_error));
  suite.checks.push_back(make_check(
      "measured-below-bound",
      cert.measured2->estimate <= cert.bound + slack,
      fmt(cert.measured2->estimate) + " <= " + fmt(cert.bound)));
  return suite;
}

}  // namespace

SuiteResult run_suite(const std::string& name, std::uint64_t seed,
                      int threads) {
  if (name == "gradients") return suite_gradients(seed, threads);
  if (name == "lipschitz") return suite_lipschitz(seed, threads);
  if (name == "rates") return suite_rates(seed, threads);
  if (name == "certificate") return suite_certificate(seed, threads);
  throw std::invalid_argument("unknown verify suite: " + name);
}

}  // namespace kolpinn
