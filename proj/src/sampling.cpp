#include "kolpinn/sampling.hpp"

#include <cmath>
#include <stdexcept>

#include "kolpinn/parallel.hpp"
#include "kolpinn/rng.hpp"

namespace kolpinn {

namespace {
// Stream tags keeping the three sets decorrelated under one seed.
constexpr std::uint64_t kInteriorStream = 1;
constexpr std::uint64_t kBoundaryStream = 2;
constexpr std::uint64_t kInitialStream = 3;
}  // namespace

CollocationSets sample_sets(const KolmogorovPde& pde, std::size_t n_interior,
                            std::size_t n_boundary, std::size_t n_initial,
                            std::uint64_t seed) {
  if (n_interior < 1 || n_boundary < 1 || n_initial < 1) {
    throw std::invalid_argument("collocation counts must be at least 1");
  }
  const int d = pde.dim;
  const double lo = pde.box_lo, hi = pde.box_hi, T = pde.horizon;
  CollocationSets sets;
  sets.seed = seed;

  sets.interior_x.resize(n_interior);
  sets.interior_t.resize(n_interior);
  for (std::size_t n = 0; n < n_interior; ++n) {
    auto& x = sets.interior_x[n];
    x.resize(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) {
      x[static_cast<std::size_t>(c)] =
          uniform(lo, hi, seed, kInteriorStream, n, static_cast<std::uint64_t>(c));
    }
    sets.interior_t[n] =
        uniform(0.0, T, seed, kInteriorStream, n, static_cast<std::uint64_t>(d));
  }

  sets.boundary_y.resize(n_boundary);
  sets.boundary_t.resize(n_boundary);
  sets.boundary_face.resize(n_boundary);
  for (std::size_t n = 0; n < n_boundary; ++n) {
    // Faces have equal area on a box, so a uniform face choice realizes the
    // uniform surface measure.
    const double u = uniform01(seed, kBoundaryStream, n, 0);
    int face = static_cast<int>(u * 2.0 * d);
    if (face >= 2 * d) face = 2 * d - 1;
    auto& y = sets.boundary_y[n];
    y.resize(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) {
      y[static_cast<std::size_t>(c)] =
          uniform(lo, hi, seed, kBoundaryStream, n,
                  static_cast<std::uint64_t>(c) + 1);
    }
    y[static_cast<std::size_t>(face / 2)] = (face % 2 == 0) ? lo : hi;
    sets.boundary_face[n] = face;
    sets.boundary_t[n] = uniform(0.0, T, seed, kBoundaryStream, n,
                                 static_cast<std::uint64_t>(d) + 1);
  }

  sets.initial_x.resize(n_initial);
  for (std::size_t n = 0; n < n_initial; ++n) {
    auto& x = sets.initial_x[n];
    x.resize(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) {
      x[static_cast<std::size_t>(c)] =
          uniform(lo, hi, seed, kInitialStream, n, static_cast<std::uint64_t>(c));
    }
  }
  return sets;
}

ErrorParts training_error(const ParameterVector& params,
                          const KolmogorovPde& pde,
                          const CollocationSets& sets, int threads) {
  ErrorParts parts;
  {
    const auto sq = parallel_map(
        sets.n_interior(),
        [&](std::size_t n) {
          const double r =
              residual_interior(pde, params, sets.interior_x[n],
                                sets.interior_t[n]);
          return r * r;
        },
        threads);
    parts.interior = pairwise_sum(sq) / static_cast<double>(sq.size());
  }
  {
    const auto sq = parallel_map(
        sets.n_boundary(),
        [&](std::size_t n) {
          const double r = residual_spatial(pde, params, sets.boundary_y[n],
                                            sets.boundary_t[n]);
          return r * r;
        },
        threads);
    parts.spatial = pairwise_sum(sq) / static_cast<double>(sq.size());
  }
  {
    const auto sq = parallel_map(
        sets.n_initial(),
        [&](std::size_t n) {
          const double r = residual_temporal(pde, params, sets.initial_x[n]);
          return r * r;
        },
        threads);
    parts.temporal = pairwise_sum(sq) / static_cast<double>(sq.size());
  }
  return parts;
}

McEstimate mc_mean(const std::vector<double>& samples) {
  const std::size_t m = samples.size();
  McEstimate e;
  if (m == 0) return e;
  e.estimate = pairwise_sum(samples) / static_cast<double>(m);
  if (m < 2) return e;
  std::vector<double> dev2(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double d = samples[i] - e.estimate;
    dev2[i] = d * d;
  }
  const double var = pairwise_sum(dev2) / static_cast<double>(m - 1);
  e.standard_error = std::sqrt(var / static_cast<double>(m));
  return e;
}

GeneralizationReport generalization_error_mc(const ParameterVector& params,
                                             const KolmogorovPde& pde,
                                             std::size_t m_eval,
                                             std::uint64_t seed, int threads) {
  if (m_eval < 2) throw std::invalid_argument("m_eval must be at least 2");
  const CollocationSets sets = sample_sets(pde, m_eval, m_eval, m_eval, seed);
  GeneralizationReport rep;
  rep.interior = mc_mean(parallel_map(
      m_eval,
      [&](std::size_t n) {
        const double r = residual_interior(pde, params, sets.interior_x[n],
                                           sets.interior_t[n]);
        return r * r;
      },
      threads));
  rep.spatial = mc_mean(parallel_map(
      m_eval,
      [&](std::size_t n) {
        const double r = residual_spatial(pde, params, sets.boundary_y[n],
                                          sets.boundary_t[n]);
        return r * r;
      },
      threads));
  rep.temporal = mc_mean(parallel_map(
      m_eval,
      [&](std::size_t n) {
        const double r = residual_temporal(pde, params, sets.initial_x[n]);
        return r * r;
      },
      threads));
  rep.total.estimate =
      rep.interior.estimate + rep.spatial.estimate + rep.temporal.estimate;
  rep.total.standard_error = std::sqrt(
      rep.interior.standard_error * rep.interior.standard_error +
      rep.spatial.standard_error * rep.spatial.standard_error +
      rep.temporal.standard_error * rep.temporal.standard_error);
  return rep;
}

}  // namespace kolpinn
