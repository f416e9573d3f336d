#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace kolpinn {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<CheckResult> checks;
  bool all_passed() const;
};

// Named invariant suites: gradients | lipschitz | rates | certificate.
std::vector<std::string> suite_names();
SuiteResult run_suite(const std::string& name, std::uint64_t seed,
                      int threads = 0);

// Least-squares slope of ln y against ln x.
double fit_loglog_slope(std::span<const double> x, std::span<const double> y);

// Closed form of the Riemann-sum approximation bar-u^N for the heat
// equation with product-of-sines data: E[F phi(X^x_s)] = -lambda e^{-lambda
// s} phi(x) with lambda = kappa pi^2 |m|^2.
double heat_sine_riemann(double kappa, std::span<const int> modes,
                         std::span<const double> x, double t, double T, int N);

}  // namespace kolpinn
