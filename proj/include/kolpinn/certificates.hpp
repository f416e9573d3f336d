#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kolpinn/pde.hpp"
#include "kolpinn/sampling.hpp"

namespace kolpinn {

enum class Provenance { Analytic, McEstimated, UserSupplied };
std::string to_string(Provenance p);

// Explicit constants of the a-posteriori L2 bound:
//   C0 = sum_ij ||d2_ij (sigma sigma^T)_ij||_inf   (constant for affine sigma)
//   C1 = T exp((C0 + ||div mu||_inf + 1) T)
//   C3 = ||mu||_inf + sum_ijk ||d_i (sigma_ik sigma_jk)||_inf
struct StabilityConstants {
  double C0 = 0.0, C1 = 0.0, C3 = 0.0;
  double div_mu_norm = 0.0;
  double mu_sup = 0.0;
  Provenance source = Provenance::Analytic;
};

StabilityConstants stability_constants(const KolmogorovPde& pde);

enum class C2Mode { Oracle, User, Heuristic };
std::string to_string(C2Mode m);

// Squared residual L2 norms over the Lebesgue measures (probability-measure
// MC means scaled by the part volumes), with standard errors.
struct ResidualNorms {
  McEstimate interior2, temporal2, spatial2;
  std::size_t m_eval = 0;
  std::uint64_t seed = 0;
};

ResidualNorms residual_l2_norms(const ParameterVector& params,
                                const KolmogorovPde& pde, std::size_t m_eval,
                                std::uint64_t seed, int threads = 0);

// C2 = sum_i ||(sigma sigma^T J_x[u - u_theta]^T)_i||_{L2(dD x [0,T])} with
// the reference gradient supplied by a callable (analytic oracle or a
// finite-difference surrogate of the Dynkin estimator).
using ReferenceGradient =
    std::function<std::vector<double>(std::span<const double>, double)>;

double c2_from_reference(const KolmogorovPde& pde,
                         const ParameterVector& params,
                         const ReferenceGradient& grad_ref, std::size_t m_eval,
                         std::uint64_t seed, int threads = 0);

// Oracle mode; requires pde.oracle with a spatial gradient.
double c2_oracle(const KolmogorovPde& pde, const ParameterVector& params,
                 std::size_t m_eval, std::uint64_t seed, int threads = 0);

struct Certificate {
  ResidualNorms norms;
  StabilityConstants constants;
  C2Mode c2_mode = C2Mode::Oracle;
  double C2 = 0.0;
  bool heuristic = false;  // true in heuristic C2 mode
  double bound = 0.0;      // on ||u - u_theta||^2_{L2(D x [0,T])}
  std::optional<McEstimate> measured2;  // squared L2 error when oracle known
};

Certificate l2_certificate(const ResidualNorms& norms,
                           const StabilityConstants& constants, double C2,
                           C2Mode mode);

// MC estimate of the squared L2(D x [0,T]) error against the oracle.
McEstimate measured_l2_error(const ParameterVector& params,
                             const KolmogorovPde& pde, std::size_t m_eval,
                             std::uint64_t seed, int threads = 0);

// Closed-form Lipschitz constants of the network and of the residual
// functionals with respect to the flat parameter vector (sup norm).
struct LipschitzLedger {
  double alpha = 0.0, beta = 0.0, C = 0.0;
  double network_bound = 0.0;   // |u_theta(z) - u_eta(z)|
  double jacobian_bound = 0.0;  // entries of the input Jacobian
  double hessian_bound = 0.0;   // entries of the input Hessian
  double residual_bound = 0.0;  // squared-residual functionals
  double c_i = 0.0, c_t = 0.0, c_s = 0.0;  // single-point residual ranges
};

LipschitzLedger lipschitz_ledger(const KolmogorovPde& pde,
                                 const Architecture& arch);

// Sample-size bounds; raw real value, ceiling floored at 1, and whether the
// ceiling is exactly representable as an integer.
struct SampleSize {
  double raw = 0.0;
  long long count = 1;
  bool floored = false;
  bool exact = true;
};

enum class SampleSizeMode { Probabilistic, Cumulative };

SampleSize sample_size_generic(double k, double a, double c, double lipschitz,
                               double eps, double eta, SampleSizeMode mode);

enum class PlanKind { Supervised, Pinn };

struct SampleSizePlan {
  PlanKind kind = PlanKind::Supervised;
  double eps = 0.0;
  SampleSize interior, spatial, temporal;
};

// Specialized plans: supervised (one count reused for all parts) and PINN
// (per-part counts using c_q from the ledger or an empirical value).
SampleSizePlan sample_size_specialized(const KolmogorovPde& pde,
                                       const Architecture& arch, double eps,
                                       PlanKind kind, double c_i, double c_s,
                                       double c_t);

// Empirical surrogate for c_i: max single-point squared interior residual
// over random (theta, point) pairs.
double cq_empirical(const KolmogorovPde& pde, const Architecture& arch,
                    std::size_t trials, std::uint64_t seed, int threads = 0);

// Certificate bound assembled from training errors plus a sampling slack
// eps, for use after a sample-size plan has been satisfied.
double cumulative_l2_bound(double et_i, double et_s, double et_t, double eps,
                           const StabilityConstants& constants, double C2);

// Sup-norm delta-cover of [-a, a]^k; uniform grid with spacing 2 delta.
std::vector<std::vector<double>> delta_cover(double a, int k, double delta);

// Empirical check of the generalization-error decomposition on a synthetic
// scalar family.
struct SyntheticFamily {
  int k = 0;        // parameter dimension (<= 3)
  double a = 1.0;   // parameter box half-width
  // f(theta, z) for scalar data points z in [0, 1].
  std::function<double(std::span<const double>, double)> f;
  std::function<double(double)> target;  // ground truth f(z)
};

struct DecompositionReport {
  double generalization2 = 0.0;   // E_G(theta*)^2
  double modulus_g = 0.0;         // sup over delta-pairs of |E_G^2 diff|
  double gap = 0.0;               // sup over cover of |E_G^2 - E_T^2|
  double modulus_t = 0.0;         // sup over delta-pairs of |E_T^2 diff|
  double training2 = 0.0;         // E_T(theta*)^2
  bool holds = false;
};

DecompositionReport decomposition_check(const SyntheticFamily& family,
                                        double delta,
                                        std::span<const double> data,
                                        std::size_t m_eval,
                                        std::uint64_t seed);

// Empirical lower estimate of rho_d (eq. rhod): max over grid starts x and
// time pairs s < t of the MC-estimated L^q norm of X^x_s - X^x_t divided by
// |s - t|^{1/p}.
double estimate_rho_d(const KolmogorovPde& pde, double p, double q,
                      int space_grid, int time_grid, std::size_t M,
                      std::uint64_t seed, int threads = 0);

}  // namespace kolpinn
