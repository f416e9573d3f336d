#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kolpinn/rng.hpp"
#include "kolpinn/sampling.hpp"
#include "kolpinn/training.hpp"

using namespace kolpinn;
using std::numbers::pi;

namespace {

KolmogorovPde heat_sine_1d(double kappa = 1.0) {
  KolmogorovPde pde = heat_instance(1, kappa);
  attach_sine_data(pde, {1});
  return pde;
}

}  // namespace

TEST_CASE("collocation sampling is seeded and respects the geometry") {
  const KolmogorovPde pde = heat_sine_1d();
  const CollocationSets a = sample_sets(pde, 50, 50, 50, 9);
  const CollocationSets b = sample_sets(pde, 50, 50, 50, 9);
  CHECK(a.interior_x == b.interior_x);
  CHECK(a.boundary_y == b.boundary_y);
  CHECK(a.initial_x == b.initial_x);
  CHECK(sample_sets(pde, 50, 50, 50, 10).interior_t != a.interior_t);

  for (const auto& y : a.boundary_y) {
    CHECK((y[0] == 0.0 || y[0] == 1.0));
  }
  for (std::size_t i = 0; i < a.n_interior(); ++i) {
    CHECK(a.interior_x[i][0] > 0.0);
    CHECK(a.interior_x[i][0] < 1.0);
    CHECK(a.interior_t[i] > 0.0);
    CHECK(a.interior_t[i] < pde.horizon);
  }
}

TEST_CASE("interior sample means sit at the box midpoint") {
  const KolmogorovPde pde = heat_sine_1d();
  const CollocationSets sets = sample_sets(pde, 10000, 1, 1, 4);
  double mean = 0.0;
  for (const auto& x : sets.interior_x) mean += x[0];
  mean /= static_cast<double>(sets.n_interior());
  const double se = std::sqrt(1.0 / 12.0) / 100.0;  // sd of U(0,1) / sqrt(n)
  CHECK(std::abs(mean - 0.5) < 3.0 * se);
}

TEST_CASE("training error parts for the zero network on constant data") {
  KolmogorovPde pde;
  pde.dim = 1;
  pde.drift = AffineDrift::zero(1);
  pde.diffusion = AffineDiffusion::zero(1);
  pde.phi.value = [](std::span<const double>) { return 1.0; };
  pde.psi = [](std::span<const double>, double) { return 1.0; };
  const CollocationSets sets = sample_sets(pde, 32, 32, 32, 5);
  const ParameterVector zero(Architecture({2, 4, 1}, 1.0));
  const ErrorParts parts = training_error(zero, pde, sets);
  CHECK(parts.interior == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(parts.spatial == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(parts.temporal == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(parts.total_squared() ==
        parts.interior + parts.spatial + parts.temporal);
}

TEST_CASE("single-point sets reduce to one squared residual") {
  const KolmogorovPde pde = heat_sine_1d();
  const CollocationSets sets = sample_sets(pde, 1, 1, 1, 6);
  const ParameterVector p = random_params(Architecture({2, 4, 1}, 1.0), 3);
  const ErrorParts parts = training_error(p, pde, sets);
  const double r =
      residual_temporal(pde, p, sets.initial_x[0]);
  CHECK(parts.temporal == doctest::Approx(r * r).epsilon(1e-14));
}

TEST_CASE("training error is thread-count invariant") {
  const KolmogorovPde pde = heat_sine_1d();
  const CollocationSets sets = sample_sets(pde, 300, 300, 300, 8);
  const ParameterVector p = random_params(Architecture({2, 8, 1}, 1.0), 12);
  const ErrorParts one = training_error(p, pde, sets, 1);
  const ErrorParts many = training_error(p, pde, sets, 8);
  CHECK(one.interior == many.interior);
  CHECK(one.spatial == many.spatial);
  CHECK(one.temporal == many.temporal);
}

TEST_CASE("generalization error recovers a closed-form integral") {
  KolmogorovPde pde;
  pde.dim = 1;
  pde.drift = AffineDrift::zero(1);
  pde.diffusion = AffineDiffusion::zero(1);
  pde.phi.value = [](std::span<const double> x) {
    return std::sin(pi * x[0]);
  };
  pde.psi = [](std::span<const double>, double) { return 0.0; };
  const ParameterVector zero(Architecture({2, 4, 1}, 1.0));
  const GeneralizationReport rep =
      generalization_error_mc(zero, pde, 10000, 13);
  // E over U(0,1) of sin^2(pi x) = 1/2.
  CHECK(std::abs(rep.temporal.estimate - 0.5) <=
        3.0 * rep.temporal.standard_error);
  CHECK(rep.temporal.standard_error > 0.0);

  // Constant residual: zero network with phi = 1 everywhere.
  KolmogorovPde flat = pde;
  flat.phi.value = [](std::span<const double>) { return 1.0; };
  const GeneralizationReport rc = generalization_error_mc(zero, flat, 500, 13);
  CHECK(rc.temporal.estimate == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rc.temporal.standard_error == doctest::Approx(0.0).epsilon(1e-12));

  // Disjoint seeds agree within combined error bars.
  const GeneralizationReport r2 = generalization_error_mc(zero, pde, 10000, 14);
  CHECK(std::abs(rep.temporal.estimate - r2.temporal.estimate) <=
        6.0 * (rep.temporal.standard_error + r2.temporal.standard_error));
}

TEST_CASE("minimize solves a strongly convex surrogate") {
  const Architecture arch({2, 1}, 1.0);
  ParameterVector target(arch);
  target.values = {0.3, -0.2, 0.5};
  LossFunction loss;
  loss.value = [&target](const ParameterVector& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double d = p.values[i] - target.values[i];
      s += d * d;
    }
    return s;
  };
  loss.gradient = [&target](const ParameterVector& p) {
    std::vector<double> g(p.values.size());
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      g[i] = 2.0 * (p.values[i] - target.values[i]);
    }
    return g;
  };
  OptimizerConfig config;
  config.adam_iterations = 400;
  config.adam_step = 5e-3;
  config.lbfgs_iterations = 100;
  const MinimizeResult res =
      minimize(loss, random_params(arch, 17), config);
  CHECK(res.iterations <= 500);
  for (std::size_t i = 0; i < target.values.size(); ++i) {
    CHECK(std::abs(res.params.values[i] - target.values[i]) < 1e-6);
  }
  CHECK(res.params.in_box());
}

TEST_CASE("training is deterministic and keeps iterates in the box") {
  const KolmogorovPde pde = heat_sine_1d(0.1);
  const CollocationSets sets = sample_sets(pde, 32, 32, 32, 2);
  const Architecture arch({2, 6, 1}, 2.0);
  Architecture init = arch;
  init.weight_bound = 0.5;
  ParameterVector start = random_params(init, 1);
  start.arch = arch;

  OptimizerConfig config;
  config.adam_iterations = 60;
  config.lbfgs_iterations = 20;
  config.history_stride = 10;
  const TrainingReport a = train(start, pde, sets, config);
  const TrainingReport b = train(start, pde, sets, config);
  CHECK(a.params.values == b.params.values);
  CHECK(a.final_total == b.final_total);
  CHECK(a.params.in_box());
  CHECK(a.final_total ==
        doctest::Approx(std::sqrt(a.final_parts.total_squared()))
            .epsilon(1e-12));
  CHECK(!a.history.empty());
  CHECK(a.history.front().iteration == 0);
}
