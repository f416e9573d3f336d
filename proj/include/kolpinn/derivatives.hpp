#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "kolpinn/net.hpp"

namespace kolpinn {

// Activation value and first three derivatives in closed form.
struct ActivationDerivs {
  double v, d1, d2, d3;
};
ActivationDerivs activation_derivatives(Activation a, double z);
inline ActivationDerivs activation_derivatives(double z) {
  return activation_derivatives(Activation::Tanh, z);
}

// Row-major matrix of shape l_L x l0.
struct JacobianResult {
  int rows = 0, cols = 0;
  std::vector<double> data;
  double operator()(int i, int j) const {
    return data[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) +
                static_cast<std::size_t>(j)];
  }
};

// Tensor of shape l_L x l0 x l0, symmetric in the trailing indices.
struct HessianResult {
  int rows = 0, n = 0;
  std::vector<double> data;
  double operator()(int k, int i, int j) const {
    return data[(static_cast<std::size_t>(k) * static_cast<std::size_t>(n) +
                 static_cast<std::size_t>(i)) *
                    static_cast<std::size_t>(n) +
                static_cast<std::size_t>(j)];
  }
};

// Forward pass that carries input-space first and second derivatives
// through every layer. Layer index 0 holds the input itself.
struct JetCache {
  int n = 0;  // input dimension l0
  // Post-activation value, input Jacobian and input Hessian per layer.
  std::vector<std::vector<double>> a, G, H;
  // Pre-activation counterparts for layers 1..L (index 0 unused).
  std::vector<std::vector<double>> z, P, Q;
};

JetCache jet_forward(const ParameterVector& params, std::span<const double> x);

JacobianResult input_jacobian(const ParameterVector& params,
                              std::span<const double> x);
HessianResult input_hessian(const ParameterVector& params,
                            std::span<const double> x);

inline JacobianResult input_jacobian(const ParameterVector& params,
                                     const std::vector<double>& x) {
  return input_jacobian(params, std::span<const double>(x));
}
inline HessianResult input_hessian(const ParameterVector& params,
                                   const std::vector<double>& x) {
  return input_hessian(params, std::span<const double>(x));
}

// Gradient with respect to the flat parameter vector of the scalar
//   s = cv * u(x) + sum_c cj[c] J[u](x)[c] + sum_{ab} ch[a,b] H[u](x)[a,b]
// for a scalar-output network. This is the building block for analytic
// gradients of PDE residuals. ch is row-major l0 x l0 (may be empty, as may
// cj, for pure data residuals).
std::vector<double> functional_param_gradient(const ParameterVector& params,
                                              const JetCache& cache, double cv,
                                              std::span<const double> cj,
                                              std::span<const double> ch);

enum class GradientMode { FiniteDifference, Analytic };

// Scalar loss of the parameters, optionally with an analytic gradient.
struct LossFunction {
  std::function<double(const ParameterVector&)> value;
  std::function<std::vector<double>(const ParameterVector&)> gradient;  // optional
};

struct NumericalFailure : std::runtime_error {
  std::size_t index;
  explicit NumericalFailure(std::size_t i)
      : std::runtime_error("non-finite loss value at parameter index " +
                           std::to_string(i)),
        index(i) {}
};

// Central finite differences with step h_i = cbrt(eps) * max(1, |theta_i|)
// define the reference; analytic mode requires loss.gradient.
std::vector<double> param_gradient(const LossFunction& loss,
                                   const ParameterVector& params,
                                   GradientMode mode);

}  // namespace kolpinn
