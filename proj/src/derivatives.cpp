#include "kolpinn/derivatives.hpp"

#include <cmath>
#include <limits>

namespace kolpinn {

ActivationDerivs activation_derivatives(Activation a, double z) {
  if (a == Activation::Tanh) {
    const double t = std::tanh(z);
    const double d1 = 1.0 - t * t;
    return {t, d1, -2.0 * t * d1, -2.0 * d1 * (1.0 - 3.0 * t * t)};
  }
  const double s = 1.0 / (1.0 + std::exp(-z));
  const double d1 = s * (1.0 - s);
  return {s, d1, d1 * (1.0 - 2.0 * s), d1 * (1.0 - 6.0 * s + 6.0 * s * s)};
}

JetCache jet_forward(const ParameterVector& params, std::span<const double> x) {
  const Architecture& arch = params.arch;
  const int n = arch.input_dim();
  if (static_cast<int>(x.size()) != n) {
    throw std::invalid_argument("input length does not match l0");
  }
  const int L = arch.depth();
  const std::size_t nn = static_cast<std::size_t>(n);

  JetCache c;
  c.n = n;
  c.a.resize(static_cast<std::size_t>(L) + 1);
  c.G.resize(static_cast<std::size_t>(L) + 1);
  c.H.resize(static_cast<std::size_t>(L) + 1);
  c.z.resize(static_cast<std::size_t>(L) + 1);
  c.P.resize(static_cast<std::size_t>(L) + 1);
  c.Q.resize(static_cast<std::size_t>(L) + 1);

  c.a[0].assign(x.begin(), x.end());
  c.G[0].assign(nn * nn, 0.0);
  for (int i = 0; i < n; ++i) c.G[0][static_cast<std::size_t>(i) * nn + i] = 1.0;
  c.H[0].assign(nn * nn * nn, 0.0);

  std::size_t off = 0;
  for (int k = 1; k <= L; ++k) {
    const int rows = arch.widths[k];
    const int cols = arch.widths[k - 1];
    const std::size_t wcount =
        static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    const double* W = params.values.data() + off;
    const double* b = params.values.data() + off + wcount;
    const auto& ap = c.a[static_cast<std::size_t>(k) - 1];
    const auto& Gp = c.G[static_cast<std::size_t>(k) - 1];
    const auto& Hp = c.H[static_cast<std::size_t>(k) - 1];

    auto& z = c.z[static_cast<std::size_t>(k)];
    auto& P = c.P[static_cast<std::size_t>(k)];
    auto& Q = c.Q[static_cast<std::size_t>(k)];
    z.assign(static_cast<std::size_t>(rows), 0.0);
    P.assign(static_cast<std::size_t>(rows) * nn, 0.0);
    Q.assign(static_cast<std::size_t>(rows) * nn * nn, 0.0);

    for (int i = 0; i < rows; ++i) {
      const double* wrow = W + static_cast<std::size_t>(i) * cols;
      double zi = b[i];
      for (int j = 0; j < cols; ++j) zi += wrow[j] * ap[static_cast<std::size_t>(j)];
      z[static_cast<std::size_t>(i)] = zi;
      double* Prow = P.data() + static_cast<std::size_t>(i) * nn;
      for (int j = 0; j < cols; ++j) {
        const double w = wrow[j];
        const double* Gprow = Gp.data() + static_cast<std::size_t>(j) * nn;
        for (std::size_t cc = 0; cc < nn; ++cc) Prow[cc] += w * Gprow[cc];
      }
      double* Qmat = Q.data() + static_cast<std::size_t>(i) * nn * nn;
      for (int j = 0; j < cols; ++j) {
        const double w = wrow[j];
        if (w == 0.0) continue;
        const double* Hmat = Hp.data() + static_cast<std::size_t>(j) * nn * nn;
        for (std::size_t e = 0; e < nn * nn; ++e) Qmat[e] += w * Hmat[e];
      }
    }

    auto& av = c.a[static_cast<std::size_t>(k)];
    auto& Gv = c.G[static_cast<std::size_t>(k)];
    auto& Hv = c.H[static_cast<std::size_t>(k)];
    if (k == L) {
      av = z;
      Gv = P;
      Hv = Q;
    } else {
      av.resize(static_cast<std::size_t>(rows));
      Gv.resize(static_cast<std::size_t>(rows) * nn);
      Hv.resize(static_cast<std::size_t>(rows) * nn * nn);
      for (int i = 0; i < rows; ++i) {
        const auto d = activation_derivatives(arch.activation,
                                              z[static_cast<std::size_t>(i)]);
        av[static_cast<std::size_t>(i)] = d.v;
        const double* Prow = P.data() + static_cast<std::size_t>(i) * nn;
        double* Grow = Gv.data() + static_cast<std::size_t>(i) * nn;
        for (std::size_t cc = 0; cc < nn; ++cc) Grow[cc] = d.d1 * Prow[cc];
        const double* Qmat = Q.data() + static_cast<std::size_t>(i) * nn * nn;
        double* Hmat = Hv.data() + static_cast<std::size_t>(i) * nn * nn;
        for (std::size_t aa = 0; aa < nn; ++aa) {
          for (std::size_t bb = 0; bb < nn; ++bb) {
            Hmat[aa * nn + bb] = d.d2 * Prow[aa] * Prow[bb] +
                                 d.d1 * Qmat[aa * nn + bb];
          }
        }
      }
    }
    off += wcount + static_cast<std::size_t>(rows);
  }
  return c;
}

JacobianResult input_jacobian(const ParameterVector& params,
                              std::span<const double> x) {
  const JetCache c = jet_forward(params, x);
  JacobianResult r;
  r.rows = params.arch.output_dim();
  r.cols = c.n;
  r.data = c.G.back();
  return r;
}

HessianResult input_hessian(const ParameterVector& params,
                            std::span<const double> x) {
  const JetCache c = jet_forward(params, x);
  HessianResult r;
  r.rows = params.arch.output_dim();
  r.n = c.n;
  r.data = c.H.back();
  return r;
}

std::vector<double> functional_param_gradient(const ParameterVector& params,
                                              const JetCache& cache, double cv,
                                              std::span<const double> cj,
                                              std::span<const double> ch) {
  const Architecture& arch = params.arch;
  if (arch.output_dim() != 1) {
    throw std::invalid_argument("functional gradient requires scalar output");
  }
  const int L = arch.depth();
  const std::size_t nn = static_cast<std::size_t>(cache.n);
  std::vector<double> grad(params.values.size(), 0.0);

  // Adjoints of the post-activation quantities of the current layer.
  std::vector<double> abar(1, cv);
  std::vector<double> Gbar(nn, 0.0);
  std::vector<double> Hbar(nn * nn, 0.0);
  for (std::size_t i = 0; i < cj.size(); ++i) Gbar[i] = cj[i];
  for (std::size_t i = 0; i < ch.size(); ++i) Hbar[i] = ch[i];

  for (int k = L; k >= 1; --k) {
    const int rows = arch.widths[k];
    const int cols = arch.widths[k - 1];
    const std::size_t off = arch.layer_offset(k);
    const std::size_t wcount =
        static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    const double* W = params.values.data() + off;

    // Adjoints of the pre-activation quantities z, P, Q.
    std::vector<double> zbar(static_cast<std::size_t>(rows));
    std::vector<double> Pbar(static_cast<std::size_t>(rows) * nn);
    std::vector<double> Qbar(static_cast<std::size_t>(rows) * nn * nn);
    const auto& z = cache.z[static_cast<std::size_t>(k)];
    const auto& P = cache.P[static_cast<std::size_t>(k)];
    const auto& Q = cache.Q[static_cast<std::size_t>(k)];

    if (k == L) {
      zbar = abar;
      Pbar = Gbar;
      Qbar = Hbar;
    } else {
      for (int i = 0; i < rows; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        const auto d = activation_derivatives(arch.activation, z[ii]);
        const double* Prow = P.data() + ii * nn;
        const double* Qmat = Q.data() + ii * nn * nn;
        const double* Gbrow = Gbar.data() + ii * nn;
        const double* Hbmat = Hbar.data() + ii * nn * nn;
        double dot_gp = 0.0, dot_hpp = 0.0, dot_hq = 0.0;
        for (std::size_t cc = 0; cc < nn; ++cc) dot_gp += Gbrow[cc] * Prow[cc];
        for (std::size_t aa = 0; aa < nn; ++aa) {
          for (std::size_t bb = 0; bb < nn; ++bb) {
            dot_hpp += Hbmat[aa * nn + bb] * Prow[aa] * Prow[bb];
            dot_hq += Hbmat[aa * nn + bb] * Qmat[aa * nn + bb];
          }
        }
        zbar[ii] = abar[ii] * d.d1 + dot_gp * d.d2 + dot_hpp * d.d3 +
                   dot_hq * d.d2;
        double* Pbrow = Pbar.data() + ii * nn;
        for (std::size_t cc = 0; cc < nn; ++cc) {
          double acc = d.d1 * Gbrow[cc];
          for (std::size_t bb = 0; bb < nn; ++bb) {
            acc += d.d2 * (Hbmat[cc * nn + bb] + Hbmat[bb * nn + cc]) * Prow[bb];
          }
          Pbrow[cc] = acc;
        }
        double* Qbmat = Qbar.data() + ii * nn * nn;
        for (std::size_t e = 0; e < nn * nn; ++e) Qbmat[e] = d.d1 * Hbmat[e];
      }
    }

    // Affine part: weight/bias gradients and adjoints of the previous layer.
    const auto& ap = cache.a[static_cast<std::size_t>(k) - 1];
    const auto& Gp = cache.G[static_cast<std::size_t>(k) - 1];
    const auto& Hp = cache.H[static_cast<std::size_t>(k) - 1];
    double* Wgrad = grad.data() + off;
    double* bgrad = grad.data() + off + wcount;
    for (int i = 0; i < rows; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      bgrad[i] = zbar[ii];
      const double* Pbrow = Pbar.data() + ii * nn;
      const double* Qbmat = Qbar.data() + ii * nn * nn;
      double* wrow = Wgrad + ii * static_cast<std::size_t>(cols);
      for (int j = 0; j < cols; ++j) {
        const std::size_t jj = static_cast<std::size_t>(j);
        double acc = zbar[ii] * ap[jj];
        const double* Gprow = Gp.data() + jj * nn;
        for (std::size_t cc = 0; cc < nn; ++cc) acc += Pbrow[cc] * Gprow[cc];
        const double* Hpmat = Hp.data() + jj * nn * nn;
        for (std::size_t e = 0; e < nn * nn; ++e) acc += Qbmat[e] * Hpmat[e];
        wrow[j] = acc;
      }
    }

    if (k > 1) {
      std::vector<double> abar_prev(static_cast<std::size_t>(cols), 0.0);
      std::vector<double> Gbar_prev(static_cast<std::size_t>(cols) * nn, 0.0);
      std::vector<double> Hbar_prev(static_cast<std::size_t>(cols) * nn * nn,
                                    0.0);
      for (int i = 0; i < rows; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        const double* wrow = W + ii * static_cast<std::size_t>(cols);
        const double* Pbrow = Pbar.data() + ii * nn;
        const double* Qbmat = Qbar.data() + ii * nn * nn;
        for (int j = 0; j < cols; ++j) {
          const std::size_t jj = static_cast<std::size_t>(j);
          const double w = wrow[j];
          if (w == 0.0) continue;
          abar_prev[jj] += zbar[ii] * w;
          double* Gbprow = Gbar_prev.data() + jj * nn;
          for (std::size_t cc = 0; cc < nn; ++cc) Gbprow[cc] += w * Pbrow[cc];
          double* Hbpmat = Hbar_prev.data() + jj * nn * nn;
          for (std::size_t e = 0; e < nn * nn; ++e) Hbpmat[e] += w * Qbmat[e];
        }
      }
      abar = std::move(abar_prev);
      Gbar = std::move(Gbar_prev);
      Hbar = std::move(Hbar_prev);
    }
  }
  return grad;
}

std::vector<double> param_gradient(const LossFunction& loss,
                                   const ParameterVector& params,
                                   GradientMode mode) {
  if (mode == GradientMode::Analytic) {
    if (!loss.gradient) {
      throw std::invalid_argument("analytic gradient mode without a gradient");
    }
    return loss.gradient(params);
  }
  const double base_h = std::cbrt(std::numeric_limits<double>::epsilon());
  ParameterVector probe = params;
  std::vector<double> grad(params.values.size());
  for (std::size_t i = 0; i < params.values.size(); ++i) {
    const double theta = params.values[i];
    const double h = base_h * std::max(1.0, std::abs(theta));
    probe.values[i] = theta + h;
    const double fp = loss.value(probe);
    probe.values[i] = theta - h;
    const double fm = loss.value(probe);
    probe.values[i] = theta;
    if (!std::isfinite(fp) || !std::isfinite(fm)) throw NumericalFailure(i);
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace kolpinn
