#pragma once

#include <cstdint>
#include <vector>

#include "kolpinn/pde.hpp"

namespace kolpinn {

// Random collocation sets S_i, S_s, S_t drawn with respect to the uniform
// probability measures on D x [0,T], boundary D x [0,T] and D.
struct CollocationSets {
  std::vector<std::vector<double>> interior_x;
  std::vector<double> interior_t;
  std::vector<std::vector<double>> boundary_y;
  std::vector<double> boundary_t;
  std::vector<int> boundary_face;
  std::vector<std::vector<double>> initial_x;
  std::uint64_t seed = 0;

  std::size_t n_interior() const { return interior_x.size(); }
  std::size_t n_boundary() const { return boundary_y.size(); }
  std::size_t n_initial() const { return initial_x.size(); }
};

CollocationSets sample_sets(const KolmogorovPde& pde, std::size_t n_interior,
                            std::size_t n_boundary, std::size_t n_initial,
                            std::uint64_t seed);

// Squared training-error parts (means of squared residuals, uniform 1/N
// weights); E_T^2 is their sum.
struct ErrorParts {
  double interior = 0.0, spatial = 0.0, temporal = 0.0;
  double total_squared() const { return interior + spatial + temporal; }
};

ErrorParts training_error(const ParameterVector& params,
                          const KolmogorovPde& pde,
                          const CollocationSets& sets, int threads = 0);

struct McEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

// Monte-Carlo estimates of the squared generalization-error parts, same
// measures as sample_sets, with standard errors of each mean.
struct GeneralizationReport {
  McEstimate interior, spatial, temporal;
  McEstimate total;  // sum of parts; standard errors combined in quadrature
};

GeneralizationReport generalization_error_mc(const ParameterVector& params,
                                             const KolmogorovPde& pde,
                                             std::size_t m_eval,
                                             std::uint64_t seed,
                                             int threads = 0);

// Mean and standard error of a sample held in a vector; deterministic
// pairwise reduction.
McEstimate mc_mean(const std::vector<double>& samples);

}  // namespace kolpinn
