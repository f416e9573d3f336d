#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kolpinn/derivatives.hpp"
#include "kolpinn/net.hpp"

namespace kolpinn {

// mu(x) = A x + b.
struct AffineDrift {
  int dim = 0;
  std::vector<double> A;  // d x d row-major
  std::vector<double> b;  // d

  static AffineDrift zero(int d);
  std::vector<double> operator()(std::span<const double> x) const;
  double divergence() const;  // trace(A), constant for affine drift
};

// sigma(x) = S0 + sum_i x_i S_i; each S is d x d row-major.
struct AffineDiffusion {
  int dim = 0;
  std::vector<double> S0;
  std::vector<std::vector<double>> Sx;  // S_1..S_d

  static AffineDiffusion zero(int d);
  static AffineDiffusion constant(int d, std::vector<double> s0);
  std::vector<double> operator()(std::span<const double> x) const;
  // (sigma sigma^T)(x), d x d row-major.
  std::vector<double> gram(std::span<const double> x) const;
  bool is_constant() const;
};

// Initial datum with analytic derivatives.
struct InitialDatum {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
  std::function<std::vector<double>(std::span<const double>)> hessian;  // d x d
};

// Known solution used as test oracle and for oracle-mode certificates.
struct SolutionOracle {
  std::function<double(std::span<const double>, double)> value;
  std::function<std::vector<double>(std::span<const double>, double)>
      spatial_gradient;
};

struct KolmogorovPde {
  int dim = 0;
  double horizon = 1.0;
  double box_lo = 0.0, box_hi = 1.0;  // domain [lo, hi]^d
  AffineDrift drift;
  AffineDiffusion diffusion;
  InitialDatum phi;
  std::function<double(std::span<const double>, double)> psi;
  std::optional<SolutionOracle> oracle;
  std::string kind = "custom";

  void validate() const;  // finite coefficients, PSD gram on a probe grid

  double volume_interior() const;      // |D| * T
  double volume_initial() const;       // |D|
  double volume_boundary() const;      // |boundary D| * T
};

// L[v](x) = sum_i mu_i d_i v + 1/2 sum_ij (sigma sigma^T)_ij d2_ij v,
// evaluated from supplied spatial derivatives.
double apply_operator(const KolmogorovPde& pde, std::span<const double> x,
                      std::span<const double> grad,
                      std::span<const double> hess);

// Generator applied to the initial datum: F phi(x).
double generator(const KolmogorovPde& pde, std::span<const double> x);

// PINN residuals. Network input is z = (x, t) with t last.
double residual_interior(const KolmogorovPde& pde, const ParameterVector& params,
                         std::span<const double> x, double t);
double residual_spatial(const KolmogorovPde& pde, const ParameterVector& params,
                        std::span<const double> y, double t);
double residual_temporal(const KolmogorovPde& pde, const ParameterVector& params,
                         std::span<const double> x);

// Interior residual plus its gradient with respect to the parameters.
struct ResidualWithGradient {
  double value;
  std::vector<double> gradient;
};
ResidualWithGradient residual_interior_grad(const KolmogorovPde& pde,
                                            const ParameterVector& params,
                                            std::span<const double> x, double t);
ResidualWithGradient residual_spatial_grad(const KolmogorovPde& pde,
                                           const ParameterVector& params,
                                           std::span<const double> y, double t);
ResidualWithGradient residual_temporal_grad(const KolmogorovPde& pde,
                                            const ParameterVector& params,
                                            std::span<const double> x);

// Checks that y lies on a face of the box to within tol; returns the face
// index in [0, 2d) (2i for the low face of coordinate i, 2i+1 for the high).
int boundary_face(const KolmogorovPde& pde, std::span<const double> y,
                  double tol = 1e-12);

// Built-in instances. The heat instance uses sigma = sqrt(2 kappa) I so the
// realized operator is kappa * Laplacian; data must be attached separately
// (see attach_sine_data / attach_basket_call).
KolmogorovPde heat_instance(int d, double kappa);
KolmogorovPde black_scholes_instance(std::span<const double> beta,
                                     std::span<const double> rho_rowmajor,
                                     double mu_rate);

// phi(x) = prod_i sin(pi m_i x_i); the analytic solution and its trace are
// attached as oracle and boundary datum.
void attach_sine_data(KolmogorovPde& pde, std::vector<int> modes);

// Smoothed basket-call payoff phi(x) = smooth_relu(sum a_i x_i - strike)
// with explicit smoothing width; psi defaults to phi held constant in time
// (a modelling placeholder, not a solution trace) unless an oracle is set.
void attach_basket_call(KolmogorovPde& pde, std::vector<double> weights,
                        double strike, double smoothing_width);

// u(x,t) = exp(-pi^2 kappa |m|^2 t) prod_i sin(pi m_i x_i).
double analytic_heat_solution(double kappa, std::span<const int> modes,
                              std::span<const double> x, double t);
std::vector<double> analytic_heat_solution_gradient(double kappa,
                                                    std::span<const int> modes,
                                                    std::span<const double> x,
                                                    double t);

}  // namespace kolpinn
