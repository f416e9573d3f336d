#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kolpinn/dynkin.hpp"
#include "kolpinn/verify.hpp"

using namespace kolpinn;
using std::numbers::pi;

namespace {

KolmogorovPde heat_sine(int d, double kappa) {
  KolmogorovPde pde = heat_instance(d, kappa);
  attach_sine_data(pde, std::vector<int>(static_cast<std::size_t>(d), 1));
  return pde;
}

}  // namespace

TEST_CASE("zero coefficients give constant paths and phi back") {
  KolmogorovPde pde;
  pde.dim = 1;
  pde.drift = AffineDrift::zero(1);
  pde.diffusion = AffineDiffusion::zero(1);
  pde.phi.value = [](std::span<const double> x) { return 3.0 * x[0]; };
  pde.phi.gradient = [](std::span<const double>) {
    return std::vector<double>{3.0};
  };
  pde.phi.hessian = [](std::span<const double>) {
    return std::vector<double>{0.0};
  };
  const PathEnsemble ens =
      simulate_base_paths(pde, 8, 16, 1, Scheme::ExactConstant);
  for (std::size_t m = 0; m < ens.M; ++m) {
    for (int n = 0; n <= ens.N; ++n) {
      CHECK(ens.base0_at(m, n, 0) == 0.0);
      const auto x = reconstruct_path(ens, std::vector<double>{0.7}, m, n);
      CHECK(x[0] == 0.7);
    }
  }
  for (double t : {0.0, 0.3, 1.0}) {
    CHECK(dynkin_estimate(pde, ens, std::vector<double>{0.7}, t) ==
          doctest::Approx(3.0 * 0.7).epsilon(1e-15));
  }
}

TEST_CASE("reconstruction hits the base starts exactly") {
  const KolmogorovPde pde = heat_sine(2, 0.5);
  const PathEnsemble ens =
      simulate_base_paths(pde, 4, 8, 3, Scheme::ExactConstant);
  for (std::size_t m = 0; m < ens.M; ++m) {
    for (int n = 0; n <= ens.N; ++n) {
      const auto x0 = reconstruct_path(ens, std::vector<double>{0.0, 0.0}, m, n);
      CHECK(x0[0] == ens.base0_at(m, n, 0));
      CHECK(x0[1] == ens.base0_at(m, n, 1));
      const auto e1 = reconstruct_path(ens, std::vector<double>{1.0, 0.0}, m, n);
      CHECK(e1[0] == ens.base_e_at(m, n, 0, 0));
      CHECK(e1[1] == ens.base_e_at(m, n, 0, 1));
    }
  }
}

TEST_CASE("constant-coefficient delta identity holds to machine precision") {
  const KolmogorovPde pde = heat_sine(1, 1.0);
  const PathEnsemble ens =
      simulate_base_paths(pde, 8, 32, 5, Scheme::ExactConstant);
  for (std::size_t m = 0; m < ens.M; ++m) {
    for (int n = 0; n <= ens.N; ++n) {
      CHECK(std::abs(ens.base_e_at(m, n, 0, 0) - ens.base0_at(m, n, 0) -
                     1.0) <= 1e-12);
    }
  }
}

TEST_CASE("dynkin estimate at t=0 returns phi exactly") {
  const KolmogorovPde pde = heat_sine(1, 1.0);
  const PathEnsemble ens =
      simulate_base_paths(pde, 16, 64, 7, Scheme::ExactConstant);
  const std::vector<double> x = {0.31};
  CHECK(dynkin_estimate(pde, ens, x, 0.0) == pde.phi.value(x));
}

TEST_CASE("single-rectangle Riemann sum matches the hand formula") {
  const KolmogorovPde pde = heat_sine(1, 1.0);
  const std::size_t M = 512;
  const PathEnsemble ens =
      simulate_base_paths(pde, 1, M, 11, Scheme::ExactConstant);
  const std::vector<double> x = {0.4};
  double mean = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    mean += generator(pde, reconstruct_path(ens, x, m, 1));
  }
  mean /= static_cast<double>(M);
  const double expected = pde.phi.value(x) + pde.horizon * mean;
  CHECK(dynkin_estimate(pde, ens, x, pde.horizon) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("riemann_reference agrees with dynkin_estimate bit for bit") {
  const KolmogorovPde pde = heat_sine(1, 0.5);
  const int N = 16;
  const std::size_t M = 400;
  const std::uint64_t seed = 23;
  const PathEnsemble ens =
      simulate_base_paths(pde, N, M, seed, Scheme::ExactConstant);
  const std::vector<double> x = {0.62};
  for (double t : {0.25, 0.8, 1.0}) {
    const McEstimate ref =
        riemann_reference(pde, x, t, N, M, seed, Scheme::ExactConstant);
    CHECK(std::abs(ref.estimate - dynkin_estimate(pde, ens, x, t)) <= 1e-12);
    CHECK(ref.standard_error >= 0.0);
  }
}

TEST_CASE("exact constant paths have Brownian variance") {
  const double kappa = 0.8;
  const KolmogorovPde pde = heat_sine(1, kappa);
  const std::size_t M = 20000;
  const PathEnsemble ens =
      simulate_base_paths(pde, 4, M, 31, Scheme::ExactConstant);
  const double t = pde.horizon;  // n = N
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    const double v = ens.base0_at(m, 4, 0);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / M;
  const double var = sum2 / M - mean * mean;
  const double expect = 2.0 * kappa * t;
  // Standard error of a variance estimate is var * sqrt(2/M) for Gaussians.
  CHECK(std::abs(var - expect) <= 3.0 * expect * std::sqrt(2.0 / M));
}

TEST_CASE("exact gbm terminal mean matches the lognormal closed form") {
  const std::vector<double> beta = {0.2};
  const std::vector<double> rho = {1.0};
  KolmogorovPde pde = black_scholes_instance(beta, rho, 0.05);
  attach_basket_call(pde, {1.0}, 1.0, 0.05);
  const std::size_t M = 100000;
  const PathEnsemble ens =
      simulate_base_paths(pde, 1, M, 13, Scheme::ExactGbm);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    const double v = ens.base_e_at(m, 1, 0, 0);  // X^{e_1} at t = 1
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / M;
  const double se = std::sqrt((sum2 / M - mean * mean) / M);
  CHECK(std::abs(mean - 1.05127109637602404) <= 3.0 * se);
}

TEST_CASE("euler-maruyama agrees with exact gbm on terminal means") {
  const std::vector<double> beta = {0.2};
  const std::vector<double> rho = {1.0};
  KolmogorovPde pde = black_scholes_instance(beta, rho, 0.05);
  attach_basket_call(pde, {1.0}, 1.0, 0.05);
  const std::size_t M = 20000;
  const PathEnsemble exact =
      simulate_base_paths(pde, 2, M, 17, Scheme::ExactGbm);
  const PathEnsemble em =
      simulate_base_paths(pde, 2, M, 18, Scheme::EulerMaruyama, 16);
  auto moments = [&](const PathEnsemble& ens) {
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      const double v = ens.base_e_at(m, 2, 0, 0);
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / M;
    return std::pair<double, double>(
        mean, std::sqrt((sum2 / M - mean * mean) / M));
  };
  const auto [m1, s1] = moments(exact);
  const auto [m2, s2] = moments(em);
  CHECK(std::abs(m1 - m2) <= 3.0 * (s1 + s2));
}

TEST_CASE("heat estimate lands within error bars of the eigen solution") {
  const KolmogorovPde pde = heat_sine(1, 1.0);
  const std::vector<double> x = {0.5};
  const double t = 0.1;
  const int N = 128;
  const McEstimate est =
      riemann_reference(pde, x, t, N, 20000, 41, Scheme::ExactConstant);
  // The MC estimate targets the N-term Riemann sum, not the PDE solution;
  // compare against each with the appropriate tolerance.
  const double riemann =
      heat_sine_riemann(1.0, std::vector<int>{1}, x, t, pde.horizon, N);
  CHECK(std::abs(est.estimate - riemann) <= 3.0 * est.standard_error);
  const double truth = 0.37270783885343791;  // exp(-pi^2/10)
  const double bias = std::abs(riemann - truth);
  CHECK(bias <= 0.03);  // right-endpoint rule error at this lambda and N
  CHECK(std::abs(est.estimate - truth) <= 3.0 * est.standard_error + bias);
}

TEST_CASE("mollified ramp tracks the exact ramp") {
  const double eps = 0.1;
  const RampFunctions h = mollified_ramp(eps);
  const double half = pi * eps * eps / 2.0;
  for (double x = half; x <= 1.0 - half; x += 0.01) {
    CHECK(h.value(x) == doctest::Approx(x).epsilon(1e-12));
  }
  double worst = 0.0, d1max = 0.0;
  for (double x = -0.5; x <= 1.5; x += 1e-4) {
    worst = std::max(worst, std::abs(h.value(x) - ramp(x)));
    d1max = std::max(d1max, h.d1(x));
    CHECK(h.d1(x) >= -1e-12);  // monotone non-decreasing
  }
  CHECK(worst <= half + 1e-12);
  CHECK(d1max <= 1.0 + 1e-12);

  // Twice continuously differentiable: the second derivative stays bounded
  // and the first derivative is continuous across the breakpoints.
  for (double b : {-half, half, 1.0 - half, 1.0 + half}) {
    CHECK(std::abs(h.d1(b - 1e-9) - h.d1(b + 1e-9)) <= 1e-6);
    CHECK(std::abs(h.value(b - 1e-9) - h.value(b + 1e-9)) <= 1e-8);
  }
}
