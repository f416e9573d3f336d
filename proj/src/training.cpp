#include "kolpinn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <memory>
#include <stdexcept>

#include "kolpinn/parallel.hpp"

namespace kolpinn {

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// Deterministic pairwise reduction over per-point gradient rows.
void reduce_rows(const std::vector<std::vector<double>>& rows, std::size_t lo,
                 std::size_t hi, std::vector<double>& out) {
  if (hi - lo == 1) {
    out = rows[lo];
    return;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  std::vector<double> right;
  reduce_rows(rows, lo, mid, out);
  reduce_rows(rows, mid, hi, right);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += right[i];
}

// One full pass over the collocation sets: squared-error parts and the
// gradient of E_T^2 (sum over points of (2/N_q) r grad r).
struct LossPass {
  ErrorParts parts;
  std::vector<double> gradient;
};

LossPass training_pass(const ParameterVector& params, const KolmogorovPde& pde,
                       const CollocationSets& sets, bool want_gradient,
                       int threads) {
  const std::size_t ni = sets.n_interior();
  const std::size_t ns = sets.n_boundary();
  const std::size_t nt = sets.n_initial();
  const std::size_t total = ni + ns + nt;
  const std::size_t k = params.values.size();

  std::vector<std::vector<double>> rows(want_gradient ? total : 0);
  std::vector<double> sq(total);

  auto eval_point = [&](std::size_t p) {
    ResidualWithGradient rg;
    double scale = 0.0;
    if (p < ni) {
      scale = 2.0 / static_cast<double>(ni);
      if (want_gradient) {
        rg = residual_interior_grad(pde, params, sets.interior_x[p],
                                    sets.interior_t[p]);
      } else {
        rg.value = residual_interior(pde, params, sets.interior_x[p],
                                     sets.interior_t[p]);
      }
    } else if (p < ni + ns) {
      const std::size_t q = p - ni;
      scale = 2.0 / static_cast<double>(ns);
      if (want_gradient) {
        rg = residual_spatial_grad(pde, params, sets.boundary_y[q],
                                   sets.boundary_t[q]);
      } else {
        rg.value = residual_spatial(pde, params, sets.boundary_y[q],
                                    sets.boundary_t[q]);
      }
    } else {
      const std::size_t q = p - ni - ns;
      scale = 2.0 / static_cast<double>(nt);
      if (want_gradient) {
        rg = residual_temporal_grad(pde, params, sets.initial_x[q]);
      } else {
        rg.value = residual_temporal(pde, params, sets.initial_x[q]);
      }
    }
    if (!std::isfinite(rg.value)) throw NumericalFailure(p);
    sq[p] = rg.value * rg.value;
    if (want_gradient) {
      auto& row = rows[p];
      row = std::move(rg.gradient);
      const double c = scale * rg.value;
      for (double& g : row) g *= c;
      if (!all_finite(row)) throw NumericalFailure(p);
    }
    return 0.0;
  };
  parallel_map(total, eval_point, threads);

  LossPass pass;
  pass.parts.interior =
      pairwise_sum(std::span<const double>(sq.data(), ni)) /
      static_cast<double>(ni);
  pass.parts.spatial =
      pairwise_sum(std::span<const double>(sq.data() + ni, ns)) /
      static_cast<double>(ns);
  pass.parts.temporal =
      pairwise_sum(std::span<const double>(sq.data() + ni + ns, nt)) /
      static_cast<double>(nt);
  if (want_gradient) {
    reduce_rows(rows, 0, total, pass.gradient);
    if (pass.gradient.size() != k) pass.gradient.resize(k, 0.0);
  }
  return pass;
}

std::vector<double> evaluate_gradient(const LossFunction& loss,
                                      const ParameterVector& params,
                                      GradientMode mode) {
  if (mode == GradientMode::Analytic && loss.gradient) {
    return loss.gradient(params);
  }
  return param_gradient(loss, params, GradientMode::FiniteDifference);
}

}  // namespace

LossFunction make_training_loss(const KolmogorovPde& pde,
                                const CollocationSets& sets, int threads) {
  LossFunction loss;
  loss.value = [&pde, &sets, threads](const ParameterVector& p) {
    return training_pass(p, pde, sets, false, threads).parts.total_squared();
  };
  loss.gradient = [&pde, &sets, threads](const ParameterVector& p) {
    return training_pass(p, pde, sets, true, threads).gradient;
  };
  return loss;
}

MinimizeResult minimize(const LossFunction& loss, const ParameterVector& start,
                        const OptimizerConfig& config,
                        const IterationObserver& observer) {
  ParameterVector params = clamp_params(start);
  const std::size_t k = params.values.size();
  MinimizeResult result;
  result.params = params;
  result.best_value = loss.value(params);
  result.value_history.push_back(result.best_value);
  if (!std::isfinite(result.best_value)) {
    throw std::runtime_error("non-finite loss at iteration 0");
  }
  if (observer) observer(0, result.best_value, params);

  auto track = [&](double value, const ParameterVector& p, int iteration) {
    if (!std::isfinite(value)) {
      throw std::runtime_error("non-finite loss at iteration " +
                               std::to_string(iteration));
    }
    result.value_history.push_back(value);
    if (value < result.best_value) {
      result.best_value = value;
      result.params = p;
    }
    if (observer) observer(iteration, value, p);
  };

  int iteration = 0;

  // Adam phase with projection onto Theta after every step.
  std::vector<double> m(k, 0.0), v(k, 0.0);
  for (int it = 1; it <= config.adam_iterations; ++it) {
    ++iteration;
    std::vector<double> g;
    try {
      g = evaluate_gradient(loss, params, config.gradient_mode);
    } catch (const NumericalFailure& e) {
      throw std::runtime_error("iteration " + std::to_string(iteration) +
                               ": " + e.what());
    }
    const double b1t = 1.0 - std::pow(config.adam_beta1, it);
    const double b2t = 1.0 - std::pow(config.adam_beta2, it);
    for (std::size_t i = 0; i < k; ++i) {
      m[i] = config.adam_beta1 * m[i] + (1.0 - config.adam_beta1) * g[i];
      v[i] = config.adam_beta2 * v[i] + (1.0 - config.adam_beta2) * g[i] * g[i];
      const double mhat = m[i] / b1t;
      const double vhat = v[i] / b2t;
      params.values[i] -=
          config.adam_step * mhat / (std::sqrt(vhat) + config.adam_epsilon);
    }
    clamp_params_inplace(params);
    track(loss.value(params), params, iteration);
  }

  // L-BFGS refinement from the best Adam iterate.
  if (config.lbfgs_iterations > 0) {
    params = result.params;
    double f = result.best_value;
    std::vector<double> g;
    try {
      g = evaluate_gradient(loss, params, config.gradient_mode);
    } catch (const NumericalFailure& e) {
      throw std::runtime_error("iteration " + std::to_string(iteration) +
                               ": " + e.what());
    }
    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;
    for (int it = 0; it < config.lbfgs_iterations; ++it) {
      ++iteration;
      // Two-loop recursion.
      std::vector<double> q = g;
      std::vector<double> alpha(s_hist.size());
      for (std::size_t h = s_hist.size(); h-- > 0;) {
        double dot = 0.0;
        for (std::size_t i = 0; i < k; ++i) dot += s_hist[h][i] * q[i];
        alpha[h] = rho_hist[h] * dot;
        for (std::size_t i = 0; i < k; ++i) q[i] -= alpha[h] * y_hist[h][i];
      }
      if (!s_hist.empty()) {
        double sy = 0.0, yy = 0.0;
        const auto& s = s_hist.back();
        const auto& y = y_hist.back();
        for (std::size_t i = 0; i < k; ++i) {
          sy += s[i] * y[i];
          yy += y[i] * y[i];
        }
        const double gamma = yy > 0.0 ? sy / yy : 1.0;
        for (double& qi : q) qi *= gamma;
      }
      std::vector<double> p(k);
      for (std::size_t i = 0; i < k; ++i) p[i] = -q[i];
      double gp = 0.0;
      for (std::size_t i = 0; i < k; ++i) gp += g[i] * p[i];
      if (gp >= 0.0) {  // not a descent direction; restart from -g
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        gp = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          p[i] = -g[i];
          gp -= g[i] * g[i];
        }
        if (gp == 0.0) break;
      }
      // Backtracking Armijo line search with projection.
      double step = 1.0;
      ParameterVector trial = params;
      double f_new = f;
      bool accepted = false;
      for (int bt = 0; bt < 40; ++bt) {
        for (std::size_t i = 0; i < k; ++i) {
          trial.values[i] = params.values[i] + step * p[i];
        }
        clamp_params_inplace(trial);
        f_new = loss.value(trial);
        if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * gp) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        track(f, params, iteration);
        break;
      }
      std::vector<double> g_new;
      try {
        g_new = evaluate_gradient(loss, trial, config.gradient_mode);
      } catch (const NumericalFailure& e) {
        throw std::runtime_error("iteration " + std::to_string(iteration) +
                                 ": " + e.what());
      }
      std::vector<double> s(k), y(k);
      double sy = 0.0, ss = 0.0, yy = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        s[i] = trial.values[i] - params.values[i];
        y[i] = g_new[i] - g[i];
        sy += s[i] * y[i];
        ss += s[i] * s[i];
        yy += y[i] * y[i];
      }
      if (sy > 1e-12 * std::sqrt(ss * yy)) {
        s_hist.push_back(std::move(s));
        y_hist.push_back(std::move(y));
        rho_hist.push_back(1.0 / sy);
        if (static_cast<int>(s_hist.size()) > config.lbfgs_memory) {
          s_hist.pop_front();
          y_hist.pop_front();
          rho_hist.pop_front();
        }
      }
      params = trial;
      f = f_new;
      g = std::move(g_new);
      track(f, params, iteration);
      if (ss == 0.0) break;
    }
  }

  result.iterations = iteration;
  return result;
}

TrainingReport train(const ParameterVector& start, const KolmogorovPde& pde,
                     const CollocationSets& sets,
                     const OptimizerConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!clamp_params(start).values.empty() && !start.in_box()) {
    throw std::invalid_argument("start parameters outside Theta");
  }
  const LossFunction loss = make_training_loss(pde, sets, config.threads);

  TrainingReport report;
  const int stride = std::max(1, config.history_stride);
  const IterationObserver observer = [&](int iter, double,
                                         const ParameterVector& p) {
    if (iter % stride != 0) return;
    const ErrorParts parts = training_error(p, pde, sets, config.threads);
    HistoryRow row;
    row.iteration = iter;
    row.interior = parts.interior;
    row.spatial = parts.spatial;
    row.temporal = parts.temporal;
    row.total = std::sqrt(parts.total_squared());
    report.history.push_back(row);
  };
  const MinimizeResult mr = minimize(loss, start, config, observer);

  report.params = mr.params;
  report.final_parts = training_error(mr.params, pde, sets, config.threads);
  report.final_total = std::sqrt(report.final_parts.total_squared());
  report.iterations = mr.iterations;
  const auto t1 = std::chrono::steady_clock::now();
  report.wall_seconds =
      std::chrono::duration<double>(t1 - t0).count();
  return report;
}

}  // namespace kolpinn
