#include "kolpinn/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kolpinn/derivatives.hpp"
#include "kolpinn/dynkin.hpp"
#include "kolpinn/parallel.hpp"
#include "kolpinn/rng.hpp"

namespace kolpinn {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Analytic: return "analytic";
    case Provenance::McEstimated: return "mc-estimated";
    case Provenance::UserSupplied: return "user-supplied";
  }
  return "?";
}

std::string to_string(C2Mode m) {
  switch (m) {
    case C2Mode::Oracle: return "oracle";
    case C2Mode::User: return "user";
    case C2Mode::Heuristic: return "heuristic";
  }
  return "?";
}

namespace {

// Sup over the box of |g0 + sum_a g_a x_a|; affine functions attain box
// extrema at vertices, equivalently |g(center)| + sum |g_a| halfwidth.
double affine_box_sup(double g0, std::span<const double> g, double lo,
                      double hi) {
  const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  double v = g0;
  double spread = 0.0;
  for (double ga : g) {
    v += ga * c;
    spread += std::abs(ga) * h;
  }
  return std::abs(v) + spread;
}

double sup_mu(const KolmogorovPde& pde) {
  const std::size_t n = static_cast<std::size_t>(pde.dim);
  double sup = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sup = std::max(
        sup, affine_box_sup(pde.drift.b[i],
                            std::span<const double>(
                                pde.drift.A.data() + i * n, n),
                            pde.box_lo, pde.box_hi));
  }
  return sup;
}

}  // namespace

StabilityConstants stability_constants(const KolmogorovPde& pde) {
  const std::size_t n = static_cast<std::size_t>(pde.dim);
  const auto& S0 = pde.diffusion.S0;
  const auto& Sx = pde.diffusion.Sx;
  StabilityConstants sc;

  // d2_{ij} (sigma sigma^T)_{ij} is constant for affine sigma:
  //   sum_k (S_i)_ik (S_j)_jk + (S_j)_ik (S_i)_jk.
  double c0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        v += Sx[i][i * n + k] * Sx[j][j * n + k] +
             Sx[j][i * n + k] * Sx[i][j * n + k];
      }
      c0 += std::abs(v);
    }
  }
  sc.C0 = c0;
  sc.div_mu_norm = std::abs(pde.drift.divergence());
  sc.C1 = pde.horizon *
          std::exp((sc.C0 + sc.div_mu_norm + 1.0) * pde.horizon);
  sc.mu_sup = sup_mu(pde);

  // d_i (sigma_ik sigma_jk) is affine: coefficient of x_a is
  // (S_i)_ik (S_a)_jk + (S_a)_ik (S_i)_jk, constant part from S0.
  double deriv_sum = 0.0;
  std::vector<double> coeff(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        const double g0 =
            Sx[i][i * n + k] * S0[j * n + k] + S0[i * n + k] * Sx[i][j * n + k];
        for (std::size_t a = 0; a < n; ++a) {
          coeff[a] = Sx[i][i * n + k] * Sx[a][j * n + k] +
                     Sx[a][i * n + k] * Sx[i][j * n + k];
        }
        deriv_sum += affine_box_sup(g0, coeff, pde.box_lo, pde.box_hi);
      }
    }
  }
  sc.C3 = sc.mu_sup + deriv_sum;
  return sc;
}

ResidualNorms residual_l2_norms(const ParameterVector& params,
                                const KolmogorovPde& pde, std::size_t m_eval,
                                std::uint64_t seed, int threads) {
  const GeneralizationReport rep =
      generalization_error_mc(params, pde, m_eval, seed, threads);
  auto scaled = [](const McEstimate& e, double volume) {
    return McEstimate{e.estimate * volume, e.standard_error * volume};
  };
  ResidualNorms norms;
  norms.interior2 = scaled(rep.interior, pde.volume_interior());
  norms.spatial2 = scaled(rep.spatial, pde.volume_boundary());
  norms.temporal2 = scaled(rep.temporal, pde.volume_initial());
  norms.m_eval = m_eval;
  norms.seed = seed;
  return norms;
}

double c2_from_reference(const KolmogorovPde& pde,
                         const ParameterVector& params,
                         const ReferenceGradient& grad_ref, std::size_t m_eval,
                         std::uint64_t seed, int threads) {
  const int d = pde.dim;
  const std::size_t nd = static_cast<std::size_t>(d);
  const CollocationSets sets = sample_sets(pde, 1, m_eval, 1, seed);
  // Per-sample squared components of sigma sigma^T (grad u - grad u_theta).
  std::vector<std::vector<double>> comp(
      nd, std::vector<double>(m_eval, 0.0));
  parallel_map(
      m_eval,
      [&](std::size_t m) {
        const auto& y = sets.boundary_y[m];
        const double t = sets.boundary_t[m];
        std::vector<double> z(y.begin(), y.end());
        z.push_back(t);
        const JacobianResult J = input_jacobian(params, z);
        std::vector<double> diff = grad_ref(y, t);
        for (int i = 0; i < d; ++i) {
          diff[static_cast<std::size_t>(i)] -= J(0, i);
        }
        const auto g = pde.diffusion.gram(y);
        for (std::size_t i = 0; i < nd; ++i) {
          double v = 0.0;
          for (std::size_t j = 0; j < nd; ++j) v += g[i * nd + j] * diff[j];
          comp[i][m] = v * v;
        }
        return 0.0;
      },
      threads);
  const double volume = pde.volume_boundary();
  double c2 = 0.0;
  for (std::size_t i = 0; i < nd; ++i) {
    c2 += std::sqrt(std::max(0.0, mc_mean(comp[i]).estimate * volume));
  }
  return c2;
}

double c2_oracle(const KolmogorovPde& pde, const ParameterVector& params,
                 std::size_t m_eval, std::uint64_t seed, int threads) {
  if (!pde.oracle || !pde.oracle->spatial_gradient) {
    throw std::runtime_error(
        "oracle C2 mode requires a solution oracle with a spatial gradient");
  }
  const auto grad = pde.oracle->spatial_gradient;
  return c2_from_reference(
      pde, params,
      [grad](std::span<const double> y, double t) { return grad(y, t); },
      m_eval, seed, threads);
}

Certificate l2_certificate(const ResidualNorms& norms,
                           const StabilityConstants& constants, double C2,
                           C2Mode mode) {
  if (!(C2 >= 0.0)) throw std::invalid_argument("C2 must be non-negative");
  Certificate cert;
  cert.norms = norms;
  cert.constants = constants;
  cert.c2_mode = mode;
  cert.C2 = C2;
  cert.heuristic = mode == C2Mode::Heuristic;
  const double rs = std::sqrt(std::max(0.0, norms.spatial2.estimate));
  cert.bound = constants.C1 *
               (norms.interior2.estimate + norms.temporal2.estimate +
                C2 * rs + constants.C3 * norms.spatial2.estimate);
  return cert;
}

McEstimate measured_l2_error(const ParameterVector& params,
                             const KolmogorovPde& pde, std::size_t m_eval,
                             std::uint64_t seed, int threads) {
  if (!pde.oracle || !pde.oracle->value) {
    throw std::runtime_error("measured error requires a solution oracle");
  }
  const CollocationSets sets = sample_sets(pde, m_eval, 1, 1, seed);
  const auto sq = parallel_map(
      m_eval,
      [&](std::size_t m) {
        const auto& x = sets.interior_x[m];
        const double t = sets.interior_t[m];
        std::vector<double> z(x.begin(), x.end());
        z.push_back(t);
        const double diff =
            pde.oracle->value(x, t) - forward(params, z)[0];
        return diff * diff;
      },
      threads);
  McEstimate mc = mc_mean(sq);
  const double volume = pde.volume_interior();
  return {mc.estimate * volume, mc.standard_error * volume};
}

namespace {

double activation_beta(Activation a) {
  // max{1, ||s'||, ||s''||, ||s'''||}: tanh has ||s'''|| = 2; the sigmoid
  // derivatives are all below 1.
  return a == Activation::Tanh ? 2.0 : 1.0;
}

double coefficient_C(const KolmogorovPde& pde) {
  const std::size_t n = static_cast<std::size_t>(pde.dim);
  // 1 + sum |mu_i| is affine-dominated at vertices; the sigma sigma^T
  // entries are quadratic, so a probe grid supplements the vertex sweep.
  auto value_at = [&](std::span<const double> x) {
    double v = 1.0;
    const auto mu = pde.drift(x);
    for (double m : mu) v += std::abs(m);
    const auto g = pde.diffusion.gram(x);
    for (double e : g) v += std::abs(e);
    return v;
  };
  double best = 0.0;
  std::vector<double> x(n);
  if (pde.dim <= 16) {
    for (std::uint64_t mask = 0; mask < (1ULL << pde.dim); ++mask) {
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = (mask >> i) & 1 ? pde.box_hi : pde.box_lo;
      }
      best = std::max(best, value_at(x));
    }
  }
  std::size_t probes = 1;
  for (int i = 0; i < std::min(pde.dim, 3); ++i) probes *= 64;
  for (std::size_t p = 0; p < probes; ++p) {
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = uniform(pde.box_lo, pde.box_hi, 0xC0EF, p, i);
    }
    best = std::max(best, value_at(x));
  }
  return best;
}

}  // namespace

LipschitzLedger lipschitz_ledger(const KolmogorovPde& pde,
                                 const Architecture& arch) {
  LipschitzLedger ledger;
  ledger.alpha = std::max(
      {1.0, std::abs(pde.box_lo), std::abs(pde.box_hi), 1.0});
  ledger.beta = activation_beta(arch.activation);
  ledger.C = coefficient_C(pde);

  const double L = arch.depth();
  const double W = arch.max_width();
  const double R = arch.weight_bound;
  const double b = ledger.beta;
  // The network-level bounds are stated in the input dimension of the net
  // itself (d+1 for space-time PINNs).
  const double din = arch.input_dim();
  ledger.network_bound =
      ledger.alpha * (din + 4.0) * std::pow(W, L - 1) * std::pow(R, L - 1) *
      std::pow(b, L);
  ledger.jacobian_bound = 2.0 * ledger.alpha * (din + 7.0) * L *
                          std::pow(R, 2 * L - 1) * std::pow(W, 2 * L - 2) *
                          std::pow(b, L - 1);
  ledger.hessian_bound = 4.0 * ledger.alpha * (din + 7.0) * L * L *
                         std::pow(R, 3 * L - 1) * std::pow(W, 3 * L - 3) *
                         std::pow(b, L);
  // The residual-functional constants are stated in the PDE dimension d.
  const double d = pde.dim;
  ledger.residual_bound = 32.0 * ledger.C * ledger.C * (d + 7.0) * (d + 7.0) *
                          std::pow(L, 4) * std::pow(R, 6 * L - 1) *
                          std::pow(W, 6 * L - 6) * std::pow(b, 2 * L);
  ledger.c_i = 4.0 * ledger.alpha * ledger.C * (d + 7.0) * L * L *
               std::pow(R, 3 * L) * std::pow(W, 3 * L - 3) * std::pow(b, L);
  ledger.c_t = 2.0 * W * R;
  ledger.c_s = 2.0 * W * R;
  return ledger;
}

namespace {

SampleSize finish_sample_size(double raw) {
  SampleSize s;
  s.raw = raw;
  const double up = std::ceil(raw);
  if (up < 1.0) {
    s.count = 1;
    s.floored = true;
  } else if (up <= 9.0e18) {
    s.count = static_cast<long long>(up);
    s.exact = up <= 9007199254740992.0;  // 2^53
  } else {
    s.count = 9000000000000000000LL;
    s.exact = false;
  }
  return s;
}

}  // namespace

SampleSize sample_size_generic(double k, double a, double c, double lipschitz,
                               double eps, double eta, SampleSizeMode mode) {
  if (!(k > 0.0 && a > 0.0 && c > 0.0 && lipschitz > 0.0 && eps > 0.0)) {
    throw std::invalid_argument("sample-size inputs must be positive");
  }
  const double e2 = eps * eps;
  double raw = 0.0;
  if (mode == SampleSizeMode::Probabilistic) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    raw = c * c / (2.0 * e2 * e2) *
          (k * std::log(2.0 * a * lipschitz / e2) + std::log(1.0 / eta));
  } else {
    raw = 2.0 * c * c / (e2 * e2) *
          (k * std::log(4.0 * a * lipschitz / e2) + std::log(2.0 * c / e2));
  }
  return finish_sample_size(raw);
}

SampleSizePlan sample_size_specialized(const KolmogorovPde& pde,
                                       const Architecture& arch, double eps,
                                       PlanKind kind, double c_i, double c_s,
                                       double c_t) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  const double d = pde.dim;
  const double L = arch.depth();
  const double W = arch.max_width();
  const double R = arch.weight_bound;
  SampleSizePlan plan;
  plan.kind = kind;
  plan.eps = eps;
  if (kind == PlanKind::Supervised) {
    const double raw = 16.0 * d * (L + 3.0) * (L + 3.0) * std::pow(W, 6) *
                       std::pow(R, 4) / std::pow(eps, 4) *
                       std::log(4.0 * std::pow(d + 4.0, 0.2) * R * W / eps);
    plan.interior = plan.spatial = plan.temporal = finish_sample_size(raw);
    return plan;
  }
  const LipschitzLedger ledger = lipschitz_ledger(pde, arch);
  auto pinn_size = [&](double cq) {
    const double raw =
        24.0 * d * L * L * W * W * cq * cq / std::pow(eps, 4) *
        std::log(4.0 * cq * R * W * ledger.beta *
                 std::pow(ledger.C * (d + 7.0) / (eps * eps), 1.0 / 6.0));
    return finish_sample_size(raw);
  };
  plan.interior = pinn_size(c_i);
  plan.spatial = pinn_size(c_s);
  plan.temporal = pinn_size(c_t);
  return plan;
}

double cq_empirical(const KolmogorovPde& pde, const Architecture& arch,
                    std::size_t trials, std::uint64_t seed, int threads) {
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  const auto sq = parallel_map(
      trials,
      [&](std::size_t n) {
        const ParameterVector theta =
            random_params(arch, counter_hash(seed, 0xCE11, n));
        std::vector<double> x(static_cast<std::size_t>(pde.dim));
        for (int c = 0; c < pde.dim; ++c) {
          x[static_cast<std::size_t>(c)] =
              uniform(pde.box_lo, pde.box_hi, seed, 0xCF11, n,
                      static_cast<std::uint64_t>(c));
        }
        const double t = uniform(0.0, pde.horizon, seed, 0xCF11, n,
                                 static_cast<std::uint64_t>(pde.dim));
        const double r = residual_interior(pde, theta, x, t);
        return r * r;
      },
      threads);
  double best = 0.0;
  for (double v : sq) best = std::max(best, v);
  return best;
}

double cumulative_l2_bound(double et_i, double et_s, double et_t, double eps,
                           const StabilityConstants& constants, double C2) {
  if (eps < 0.0) throw std::invalid_argument("eps must be non-negative");
  return constants.C1 *
         (et_i * et_i + et_t * et_t + C2 * (et_s + std::sqrt(eps)) +
          constants.C3 * et_s * et_s + (constants.C3 + 2.0) * eps);
}

std::vector<std::vector<double>> delta_cover(double a, int k, double delta) {
  if (!(delta > 0.0 && delta <= a)) {
    throw std::invalid_argument("require 0 < delta <= a");
  }
  const int per_axis = static_cast<int>(std::ceil(a / delta));
  std::vector<double> axis(static_cast<std::size_t>(per_axis));
  for (int j = 0; j < per_axis; ++j) {
    axis[static_cast<std::size_t>(j)] = -a + (2.0 * j + 1.0) * delta;
  }
  std::vector<std::vector<double>> centers;
  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  while (true) {
    std::vector<double> c(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      c[static_cast<std::size_t>(i)] =
          axis[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    }
    centers.push_back(std::move(c));
    int i = 0;
    for (; i < k; ++i) {
      if (++idx[static_cast<std::size_t>(i)] < per_axis) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
    if (i == k) break;
  }
  return centers;
}

DecompositionReport decomposition_check(const SyntheticFamily& family,
                                        double delta,
                                        std::span<const double> data,
                                        std::size_t m_eval,
                                        std::uint64_t seed) {
  if (family.k < 1 || family.k > 3) {
    throw std::invalid_argument("decomposition check supports k <= 3 only");
  }
  std::vector<double> quad(m_eval);
  for (std::size_t i = 0; i < m_eval; ++i) {
    quad[i] = uniform01(seed, 0xDECA, i);
  }
  auto eg2 = [&](std::span<const double> theta) {
    std::vector<double> sq(m_eval);
    for (std::size_t i = 0; i < m_eval; ++i) {
      const double d = family.f(theta, quad[i]) - family.target(quad[i]);
      sq[i] = d * d;
    }
    return pairwise_sum(sq) / static_cast<double>(m_eval);
  };
  auto et2 = [&](std::span<const double> theta) {
    std::vector<double> sq(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double d = family.f(theta, data[i]) - family.target(data[i]);
      sq[i] = d * d;
    }
    return pairwise_sum(sq) / static_cast<double>(data.size());
  };

  const auto cover = delta_cover(family.a, family.k, delta);
  DecompositionReport report;
  std::size_t best = 0;
  double best_et = 0.0;
  for (std::size_t i = 0; i < cover.size(); ++i) {
    const double eg = eg2(cover[i]);
    const double et = et2(cover[i]);
    report.gap = std::max(report.gap, std::abs(eg - et));
    if (i == 0 || et < best_et) {
      best = i;
      best_et = et;
    }
  }
  report.training2 = best_et;
  report.generalization2 = eg2(cover[best]);

  // Moduli of continuity over random sup-norm delta-close pairs in Theta.
  const std::size_t pairs = 256;
  std::vector<double> theta(static_cast<std::size_t>(family.k));
  std::vector<double> other(static_cast<std::size_t>(family.k));
  for (std::size_t p = 0; p < pairs; ++p) {
    for (int i = 0; i < family.k; ++i) {
      theta[static_cast<std::size_t>(i)] =
          uniform(-family.a, family.a, seed, 0xDECB, p,
                  static_cast<std::uint64_t>(i));
      const double step =
          uniform(-delta, delta, seed, 0xDECC, p,
                  static_cast<std::uint64_t>(i));
      other[static_cast<std::size_t>(i)] = std::clamp(
          theta[static_cast<std::size_t>(i)] + step, -family.a, family.a);
    }
    report.modulus_g =
        std::max(report.modulus_g, std::abs(eg2(theta) - eg2(other)));
    report.modulus_t =
        std::max(report.modulus_t, std::abs(et2(theta) - et2(other)));
  }
  report.holds = report.generalization2 <=
                 report.modulus_g + report.gap + report.modulus_t +
                     report.training2 + 1e-12;
  return report;
}

double estimate_rho_d(const KolmogorovPde& pde, double p, double q,
                      int space_grid, int time_grid, std::size_t M,
                      std::uint64_t seed, int threads) {
  if (!(p > 2.0 && q > 2.0)) {
    throw std::invalid_argument("require p > 2 and q > 2");
  }
  if (space_grid < 1 || time_grid < 1) {
    throw std::invalid_argument("grid sizes must be positive");
  }
  Scheme scheme = Scheme::EulerMaruyama;
  {
    bool constant = pde.diffusion.is_constant();
    for (double v : pde.drift.A) {
      if (v != 0.0) constant = false;
    }
    if (constant) scheme = Scheme::ExactConstant;
  }
  const PathEnsemble ens =
      simulate_base_paths(pde, time_grid, M, seed, scheme, 16, threads);
  const std::size_t nd = static_cast<std::size_t>(pde.dim);

  // Start points: tensor grid in 1d, seeded uniform draws otherwise.
  std::vector<std::vector<double>> starts;
  if (pde.dim == 1) {
    for (int i = 0; i < space_grid; ++i) {
      const double s = space_grid == 1 ? 0.5
                                       : static_cast<double>(i) /
                                             (space_grid - 1);
      starts.push_back({pde.box_lo + s * (pde.box_hi - pde.box_lo)});
    }
  } else {
    for (int i = 0; i < space_grid; ++i) {
      std::vector<double> x(nd);
      for (std::size_t c = 0; c < nd; ++c) {
        x[c] = uniform(pde.box_lo, pde.box_hi, seed, 0x5A0D,
                       static_cast<std::uint64_t>(i), c);
      }
      starts.push_back(std::move(x));
    }
  }

  const double dt = pde.horizon / time_grid;
  double best = 0.0;
  for (const auto& x : starts) {
    for (int n1 = 0; n1 < time_grid; ++n1) {
      for (int n2 = n1 + 1; n2 <= time_grid; ++n2) {
        const auto qmoments = parallel_map(
            M,
            [&](std::size_t m) {
              const auto a = reconstruct_path(ens, x, m, n1);
              const auto b = reconstruct_path(ens, x, m, n2);
              double norm2 = 0.0;
              for (std::size_t i = 0; i < nd; ++i) {
                const double d = a[i] - b[i];
                norm2 += d * d;
              }
              return std::pow(norm2, 0.5 * q);
            },
            threads);
        const double lq =
            std::pow(pairwise_sum(qmoments) / static_cast<double>(M),
                     1.0 / q);
        const double gap = dt * (n2 - n1);
        best = std::max(best, lq / std::pow(gap, 1.0 / p));
      }
    }
  }
  return best;
}

}  // namespace kolpinn
