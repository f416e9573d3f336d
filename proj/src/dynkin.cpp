#include "kolpinn/dynkin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "kolpinn/parallel.hpp"
#include "kolpinn/rng.hpp"

namespace kolpinn {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::ExactConstant: return "exact-constant";
    case Scheme::ExactGbm: return "exact-gbm";
    case Scheme::EulerMaruyama: return "euler-maruyama";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "exact-constant") return Scheme::ExactConstant;
  if (s == "exact-gbm") return Scheme::ExactGbm;
  if (s == "euler-maruyama") return Scheme::EulerMaruyama;
  throw std::invalid_argument("unknown scheme: " + s);
}

double ramp(double x) { return std::clamp(x, 0.0, 1.0); }

namespace {

bool drift_is_constant(const AffineDrift& mu) {
  for (double v : mu.A) {
    if (v != 0.0) return false;
  }
  return true;
}

// exact-gbm needs diagonal linear drift and per-coordinate linear diffusion
// rows: mu(x) = diag(A) x and sigma(x) row i = x_i * (Sx_i row i).
bool gbm_compatible(const KolmogorovPde& pde) {
  const std::size_t n = static_cast<std::size_t>(pde.dim);
  for (double v : pde.drift.b) {
    if (v != 0.0) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && pde.drift.A[i * n + j] != 0.0) return false;
    }
  }
  for (double v : pde.diffusion.S0) {
    if (v != 0.0) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < n; ++r) {
      if (r == i) continue;
      for (std::size_t c = 0; c < n; ++c) {
        if (pde.diffusion.Sx[i][r * n + c] != 0.0) return false;
      }
    }
  }
  return true;
}

void validate_scheme(const KolmogorovPde& pde, Scheme scheme) {
  if (scheme == Scheme::ExactConstant &&
      !(drift_is_constant(pde.drift) && pde.diffusion.is_constant())) {
    throw std::invalid_argument(
        "exact-constant scheme requires constant coefficients");
  }
  if (scheme == Scheme::ExactGbm && !gbm_compatible(pde)) {
    throw std::invalid_argument(
        "exact-gbm scheme requires diagonal linear drift and diffusion");
  }
}

// Simulates the d+1 base paths of realization m onto caller buffers.
// base0 holds (N+1) x d values; base_e, when non-null, holds (N+1) x d x d
// values laid out as [n][j][i] = component i of X^{e_j} at t_n.
void simulate_one(const KolmogorovPde& pde, Scheme scheme, int N, int substeps,
                  std::uint64_t seed, std::size_t m, double* base0,
                  double* base_e) {
  const int d = pde.dim;
  const std::size_t nd = static_cast<std::size_t>(d);
  const double T = pde.horizon;
  const double dt = T / N;

  switch (scheme) {
    case Scheme::ExactConstant: {
      // X^0_{t_n} = b t_n + S0 B_{t_n}, accumulated over increments.
      const double sdt = std::sqrt(dt);
      std::vector<double> B(nd, 0.0);
      for (int i = 0; i < d; ++i) base0[i] = 0.0;
      for (int n = 1; n <= N; ++n) {
        for (int c = 0; c < d; ++c) {
          B[static_cast<std::size_t>(c)] +=
              sdt * normal(seed, m, static_cast<std::uint64_t>(n),
                           static_cast<std::uint64_t>(c));
        }
        double* row = base0 + static_cast<std::size_t>(n) * nd;
        const double tn = dt * n;
        for (int i = 0; i < d; ++i) {
          double v = pde.drift.b[static_cast<std::size_t>(i)] * tn;
          for (int j = 0; j < d; ++j) {
            v += pde.diffusion.S0[static_cast<std::size_t>(i) * nd +
                                  static_cast<std::size_t>(j)] *
                 B[static_cast<std::size_t>(j)];
          }
          row[i] = v;
        }
      }
      return;
    }
    case Scheme::ExactGbm: {
      // Per-coordinate lognormal closed form with correlated drivers:
      // X^{e_i}_i(t) = exp((A_ii - v_i/2) t + s_i . B_t), other components 0.
      const double sdt = std::sqrt(dt);
      std::vector<double> B(nd, 0.0);
      std::vector<double> vol2(nd, 0.0);
      for (std::size_t i = 0; i < nd; ++i) {
        for (std::size_t j = 0; j < nd; ++j) {
          const double s = pde.diffusion.Sx[i][i * nd + j];
          vol2[i] += s * s;
        }
      }
      for (int n = 0; n <= N; ++n) {
        if (n > 0) {
          for (int c = 0; c < d; ++c) {
            B[static_cast<std::size_t>(c)] +=
                sdt * normal(seed, m, static_cast<std::uint64_t>(n),
                             static_cast<std::uint64_t>(c));
          }
        }
        const double tn = dt * n;
        double* row0 = base0 + static_cast<std::size_t>(n) * nd;
        for (int i = 0; i < d; ++i) row0[i] = 0.0;
        double* rows = base_e + static_cast<std::size_t>(n) * nd * nd;
        for (std::size_t j = 0; j < nd; ++j) {
          for (std::size_t i = 0; i < nd; ++i) rows[j * nd + i] = 0.0;
          double drive = 0.0;
          for (std::size_t c = 0; c < nd; ++c) {
            drive += pde.diffusion.Sx[j][j * nd + c] * B[c];
          }
          rows[j * nd + j] = std::exp(
              (pde.drift.A[j * nd + j] - 0.5 * vol2[j]) * tn + drive);
        }
      }
      return;
    }
    case Scheme::EulerMaruyama: {
      const int K = substeps;
      const double h = dt / K;
      const double sh = std::sqrt(h);
      // d+1 concurrent states sharing the same Brownian increments.
      std::vector<std::vector<double>> X(nd + 1, std::vector<double>(nd, 0.0));
      for (std::size_t j = 0; j < nd; ++j) X[j + 1][j] = 1.0;
      std::vector<double> dW(nd);
      auto store = [&](int n) {
        double* row0 = base0 + static_cast<std::size_t>(n) * nd;
        for (std::size_t i = 0; i < nd; ++i) row0[i] = X[0][i];
        double* rows = base_e + static_cast<std::size_t>(n) * nd * nd;
        for (std::size_t j = 0; j < nd; ++j) {
          for (std::size_t i = 0; i < nd; ++i) rows[j * nd + i] = X[j + 1][i];
        }
      };
      store(0);
      for (int n = 1; n <= N; ++n) {
        for (int k = 0; k < K; ++k) {
          const std::uint64_t step =
              static_cast<std::uint64_t>(n - 1) * static_cast<std::uint64_t>(K) +
              static_cast<std::uint64_t>(k) + 1;
          for (int c = 0; c < d; ++c) {
            dW[static_cast<std::size_t>(c)] =
                sh * normal(seed, m, step, static_cast<std::uint64_t>(c));
          }
          for (auto& state : X) {
            const auto mu = pde.drift(state);
            const auto sig = pde.diffusion(state);
            std::vector<double> next(nd);
            for (std::size_t i = 0; i < nd; ++i) {
              double v = state[i] + mu[i] * h;
              for (std::size_t c = 0; c < nd; ++c) {
                v += sig[i * nd + c] * dW[c];
              }
              next[i] = v;
            }
            state = std::move(next);
          }
        }
        store(n);
      }
      return;
    }
  }
}

// Per-realization ramp-weighted generator sum of the Dynkin estimator,
// shared between dynkin_estimate and riemann_reference so the two agree to
// rounding error.
template <typename PathAt>
double weighted_generator_sum(const KolmogorovPde& pde, int N, double t,
                              PathAt path_at) {
  const double T = pde.horizon;
  double acc = 0.0;
  for (int n = 1; n <= N; ++n) {
    const double w = ramp(N * t / T - n + 1.0);
    if (w == 0.0) continue;
    acc += w * generator(pde, path_at(n));
  }
  return acc;
}

std::vector<double> reconstruct_from(const PathEnsemble& ens,
                                     std::span<const double> x, std::size_t m,
                                     int n) {
  const int d = ens.dim;
  std::vector<double> out(static_cast<std::size_t>(d));
  if (ens.delta_is_identity) {
    for (int i = 0; i < d; ++i) {
      out[static_cast<std::size_t>(i)] =
          ens.base0_at(m, n, i) + x[static_cast<std::size_t>(i)];
    }
    return out;
  }
  // Vertex-weight form (1 - sum x_j) X^0 + sum_j x_j X^{e_j}; exact at the
  // base starts themselves.
  double w0 = 1.0;
  for (int j = 0; j < d; ++j) w0 -= x[static_cast<std::size_t>(j)];
  for (int i = 0; i < d; ++i) {
    double v = w0 * ens.base0_at(m, n, i);
    for (int j = 0; j < d; ++j) {
      v += x[static_cast<std::size_t>(j)] * ens.base_e_at(m, n, j, i);
    }
    out[static_cast<std::size_t>(i)] = v;
  }
  return out;
}

}  // namespace

PathEnsemble simulate_base_paths(const KolmogorovPde& pde, int N,
                                 std::size_t M, std::uint64_t seed,
                                 Scheme scheme, int substeps, int threads) {
  if (N < 1 || M < 1) throw std::invalid_argument("N and M must be positive");
  if (substeps < 1) throw std::invalid_argument("substeps must be positive");
  validate_scheme(pde, scheme);
  const std::size_t nd = static_cast<std::size_t>(pde.dim);
  PathEnsemble ens;
  ens.dim = pde.dim;
  ens.N = N;
  ens.M = M;
  ens.horizon = pde.horizon;
  ens.scheme = scheme;
  ens.seed = seed;
  ens.delta_is_identity = scheme == Scheme::ExactConstant;
  const std::size_t rows = static_cast<std::size_t>(N + 1) * nd;
  ens.base0.resize(M * rows);
  if (!ens.delta_is_identity) ens.base_e.resize(M * rows * nd);
  parallel_map(
      M,
      [&](std::size_t m) {
        simulate_one(pde, scheme, N, substeps, seed, m,
                     ens.base0.data() + m * rows,
                     ens.delta_is_identity ? nullptr
                                           : ens.base_e.data() + m * rows * nd);
        return 0.0;
      },
      threads);
  return ens;
}

std::vector<double> reconstruct_path(const PathEnsemble& ensemble,
                                     std::span<const double> x, std::size_t m,
                                     int n) {
  if (m >= ensemble.M || n < 0 || n > ensemble.N) {
    throw std::out_of_range("path index out of range");
  }
  if (static_cast<int>(x.size()) != ensemble.dim) {
    throw std::invalid_argument("start point dimension mismatch");
  }
  return reconstruct_from(ensemble, x, m, n);
}

double dynkin_estimate(const KolmogorovPde& pde, const PathEnsemble& ensemble,
                       std::span<const double> x, double t, int threads) {
  if (t < 0.0 || t > pde.horizon) {
    throw std::invalid_argument("t outside [0, T]");
  }
  const auto g = parallel_map(
      ensemble.M,
      [&](std::size_t m) {
        return weighted_generator_sum(
            pde, ensemble.N, t,
            [&](int n) { return reconstruct_from(ensemble, x, m, n); });
      },
      threads);
  const double scale =
      pde.horizon /
      (static_cast<double>(ensemble.M) * static_cast<double>(ensemble.N));
  return pde.phi.value(x) + scale * pairwise_sum(g);
}

McEstimate riemann_reference(const KolmogorovPde& pde,
                             std::span<const double> x, double t, int N,
                             std::size_t M_big, std::uint64_t seed,
                             Scheme scheme, int substeps, int threads) {
  if (N < 1 || M_big < 1) {
    throw std::invalid_argument("N and M must be positive");
  }
  validate_scheme(pde, scheme);
  const std::size_t nd = static_cast<std::size_t>(pde.dim);
  const std::size_t rows = static_cast<std::size_t>(N + 1) * nd;
  const bool identity = scheme == Scheme::ExactConstant;

  PathEnsemble view;  // single-realization scratch reused per m
  view.dim = pde.dim;
  view.N = N;
  view.M = 1;
  view.horizon = pde.horizon;
  view.scheme = scheme;
  view.seed = seed;
  view.delta_is_identity = identity;

  const auto g = parallel_map(
      M_big,
      [&](std::size_t m) {
        PathEnsemble local = view;
        local.base0.resize(rows);
        if (!identity) local.base_e.resize(rows * nd);
        simulate_one(pde, scheme, N, substeps, seed, m, local.base0.data(),
                     identity ? nullptr : local.base_e.data());
        return weighted_generator_sum(pde, N, t, [&](int n) {
          return reconstruct_from(local, x, 0, n);
        });
      },
      threads);

  const double scale = pde.horizon / static_cast<double>(N);
  std::vector<double> samples(g.size());
  for (std::size_t m = 0; m < g.size(); ++m) samples[m] = scale * g[m];
  McEstimate mc = mc_mean(samples);
  // Combine exactly as dynkin_estimate does so the two match to rounding.
  const double est =
      pde.phi.value(x) +
      (pde.horizon /
       (static_cast<double>(M_big) * static_cast<double>(N))) *
          pairwise_sum(g);
  return {est, mc.standard_error};
}

RampFunctions mollified_ramp(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  const double e2 = eps * eps;
  const double half_width = std::numbers::pi * e2 / 2.0;
  RampFunctions rf;
  rf.eps = eps;
  rf.value = [e2, half_width](double x) {
    if (x <= -half_width) return 0.0;
    if (x <= half_width) {
      return 0.5 * (half_width + x - e2 * std::cos(x / e2));
    }
    if (x <= 1.0 - half_width) return x;
    if (x <= 1.0 + half_width) {
      return 0.5 * (1.0 - half_width + x + e2 * std::cos((1.0 - x) / e2));
    }
    return 1.0;
  };
  rf.d1 = [e2, half_width](double x) {
    if (x <= -half_width) return 0.0;
    if (x <= half_width) return 0.5 * (1.0 + std::sin(x / e2));
    if (x <= 1.0 - half_width) return 1.0;
    if (x <= 1.0 + half_width) return 0.5 * (1.0 + std::sin((1.0 - x) / e2));
    return 0.0;
  };
  rf.d2 = [e2, half_width](double x) {
    if (x <= -half_width) return 0.0;
    if (x <= half_width) return std::cos(x / e2) / (2.0 * e2);
    if (x <= 1.0 - half_width) return 0.0;
    if (x <= 1.0 + half_width) return -std::cos((1.0 - x) / e2) / (2.0 * e2);
    return 0.0;
  };
  return rf;
}

}  // namespace kolpinn
