#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kolpinn/pde.hpp"
#include "kolpinn/sampling.hpp"

namespace kolpinn {

enum class Scheme { ExactConstant, ExactGbm, EulerMaruyama };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

// M realizations of the d+1 base SDE solutions X^0, X^{e_1}..X^{e_d} on the
// grid t_n = nT/N. For constant coefficients X^{e_i} - X^0 = e_i exactly and
// the e_i starts are kept implicit (delta_is_identity); otherwise the full
// X^{e_i} paths are stored.
struct PathEnsemble {
  int dim = 0;
  int N = 0;            // grid intervals
  std::size_t M = 0;    // sample paths
  double horizon = 0.0;
  Scheme scheme = Scheme::ExactConstant;
  std::uint64_t seed = 0;
  bool delta_is_identity = false;
  std::vector<double> base0;   // M x (N+1) x d
  std::vector<double> base_e;  // M x (N+1) x d x d unless identity

  double base0_at(std::size_t m, int n, int i) const {
    return base0[(m * static_cast<std::size_t>(N + 1) +
                  static_cast<std::size_t>(n)) *
                     static_cast<std::size_t>(dim) +
                 static_cast<std::size_t>(i)];
  }
  // Component i of X^{e_j} at (m, n).
  double base_e_at(std::size_t m, int n, int j, int i) const {
    if (delta_is_identity) return base0_at(m, n, i) + (i == j ? 1.0 : 0.0);
    return base_e[((m * static_cast<std::size_t>(N + 1) +
                    static_cast<std::size_t>(n)) *
                       static_cast<std::size_t>(dim) +
                   static_cast<std::size_t>(j)) *
                      static_cast<std::size_t>(dim) +
                  static_cast<std::size_t>(i)];
  }
};

PathEnsemble simulate_base_paths(const KolmogorovPde& pde, int N,
                                 std::size_t M, std::uint64_t seed,
                                 Scheme scheme, int substeps = 16,
                                 int threads = 0);

// X^x at (m, n) from the affine base-path combination
// sum_i (X^{e_i} - X^0) x_i + X^0.
std::vector<double> reconstruct_path(const PathEnsemble& ensemble,
                                     std::span<const double> x, std::size_t m,
                                     int n);

// Exact ramp h(x) = min{1, max{0, x}}.
double ramp(double x);

// The Dynkin-formula estimate
//   phi(x) + T/(MN) sum_{n=1}^N sum_m h(Nt/T - n + 1) Fphi(X^x_{nT/N}(w_m)).
double dynkin_estimate(const KolmogorovPde& pde, const PathEnsemble& ensemble,
                       std::span<const double> x, double t, int threads = 0);

// Streaming high-M estimate of the Riemann-sum approximation bar-u^N with a
// Monte-Carlo standard error; bit-identical to dynkin_estimate at equal
// (M, N, seed, scheme).
McEstimate riemann_reference(const KolmogorovPde& pde,
                             std::span<const double> x, double t, int N,
                             std::size_t M_big, std::uint64_t seed,
                             Scheme scheme, int substeps = 16,
                             int threads = 0);

// Twice continuously differentiable ramp surrogate (piecewise cosine) with
// ||h - h_tilde||_inf <= pi eps^2 / 2.
struct RampFunctions {
  double eps = 0.0;
  std::function<double(double)> value, d1, d2;
};

RampFunctions mollified_ramp(double eps);

}  // namespace kolpinn
