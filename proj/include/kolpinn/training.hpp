#pragma once

#include <cstdint>
#include <vector>

#include "kolpinn/derivatives.hpp"
#include "kolpinn/sampling.hpp"

namespace kolpinn {

struct OptimizerConfig {
  // Adam-style first-order phase.
  int adam_iterations = 3000;
  double adam_step = 2e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Quasi-Newton (L-BFGS) refinement from the best Adam iterate.
  int lbfgs_iterations = 400;
  int lbfgs_memory = 10;
  GradientMode gradient_mode = GradientMode::Analytic;
  int threads = 0;
  // History rows are recorded every stride iterations (and always for the
  // first and last).
  int history_stride = 100;
};

struct HistoryRow {
  int iteration = 0;
  double interior = 0.0, spatial = 0.0, temporal = 0.0;  // squared parts
  double total = 0.0;                                    // E_T = sqrt(sum)
};

struct TrainingReport {
  ParameterVector params;        // best-so-far iterate (in Theta)
  ErrorParts final_parts;        // squared parts at params
  double final_total = 0.0;      // E_T at params
  std::vector<HistoryRow> history;
  double wall_seconds = 0.0;
  int iterations = 0;
};

// PINN loss E_T(theta, S)^2 with analytic parameter gradient.
LossFunction make_training_loss(const KolmogorovPde& pde,
                                const CollocationSets& sets, int threads = 0);

// Generic projected minimizer (Adam phase, then L-BFGS refinement) over the
// parameter box Theta. Records the loss value per iteration.
struct MinimizeResult {
  ParameterVector params;  // best-so-far
  double best_value = 0.0;
  std::vector<double> value_history;  // raw loss value per iteration
  int iterations = 0;
};

// The observer, when set, is called once per iteration with the iteration
// number, the loss value and the current iterate.
using IterationObserver =
    std::function<void(int, double, const ParameterVector&)>;

MinimizeResult minimize(const LossFunction& loss, const ParameterVector& start,
                        const OptimizerConfig& config,
                        const IterationObserver& observer = nullptr);

// Full PINN training run; deterministic given the sets and config.
TrainingReport train(const ParameterVector& start, const KolmogorovPde& pde,
                     const CollocationSets& sets,
                     const OptimizerConfig& config);

}  // namespace kolpinn
