#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kolpinn/certificates.hpp"
#include "kolpinn/rng.hpp"
#include "kolpinn/verify.hpp"

using namespace kolpinn;

namespace {

KolmogorovPde heat_sine(int d, double kappa) {
  KolmogorovPde pde = heat_instance(d, kappa);
  attach_sine_data(pde, std::vector<int>(static_cast<std::size_t>(d), 1));
  return pde;
}

}  // namespace

TEST_CASE("stability constants of the built-in instances") {
  const StabilityConstants heat = stability_constants(heat_sine(1, 1.0));
  CHECK(heat.C0 == 0.0);
  CHECK(heat.div_mu_norm == 0.0);
  CHECK(heat.C1 == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(std::abs(heat.C1 - 1.0 * std::exp((heat.C0 + heat.div_mu_norm + 1.0) *
                                          1.0)) <= 1e-12);

  KolmogorovPde linear_drift = heat_sine(1, 1.0);
  linear_drift.drift.A = {1.0};  // mu(x) = x
  CHECK(stability_constants(linear_drift).div_mu_norm == 1.0);

  KolmogorovPde bs =
      black_scholes_instance(std::vector<double>{0.2},
                             std::vector<double>{1.0}, 0.05);
  attach_basket_call(bs, {1.0}, 1.0, 0.05);
  const StabilityConstants c = stability_constants(bs);
  CHECK(c.C0 == doctest::Approx(0.16).epsilon(1e-13));  // 4 beta^2
  CHECK(c.mu_sup == doctest::Approx(0.05).epsilon(1e-13));
}

TEST_CASE("certificate bound has the expected structure") {
  StabilityConstants constants;
  constants.C0 = 0.0;
  constants.C1 = 2.0;
  constants.C3 = 0.5;

  ResidualNorms zero;
  CHECK(l2_certificate(zero, constants, 0.0, C2Mode::Oracle).bound == 0.0);

  ResidualNorms norms;
  norms.interior2 = {1.0, 0.0};
  Certificate one = l2_certificate(norms, constants, 0.0, C2Mode::Oracle);
  norms.interior2 = {4.0, 0.0};  // doubled residual norm, squared is 4x
  Certificate four = l2_certificate(norms, constants, 0.0, C2Mode::Oracle);
  CHECK(four.bound == doctest::Approx(4.0 * one.bound).epsilon(1e-15));

  norms.spatial2 = {0.09, 0.0};
  const Certificate full = l2_certificate(norms, constants, 1.5, C2Mode::User);
  CHECK(full.bound ==
        doctest::Approx(2.0 * (4.0 + 0.0 + 1.5 * 0.3 + 0.5 * 0.09))
            .epsilon(1e-14));
  CHECK(!full.heuristic);
  CHECK(l2_certificate(norms, constants, 1.5, C2Mode::Heuristic).heuristic);
}

TEST_CASE("lipschitz ledger reproduces the hand-computed values") {
  const KolmogorovPde pde = heat_sine(1, 1.0);  // C = 1 + 0 + 2 = 3, beta = 2
  const LipschitzLedger at_w10 =
      lipschitz_ledger(pde, Architecture({2, 10, 1}, 1.0));
  CHECK(at_w10.beta == 2.0);
  CHECK(at_w10.C == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(at_w10.c_t == doctest::Approx(20.0).epsilon(1e-13));  // 2WR
  CHECK(at_w10.c_s == at_w10.c_t);

  // L=2, W=2, R=1, d=1, beta=2, C=3: 2^5 * 9 * 64 * 16 * 1 * 2^6 * 2^4.
  const LipschitzLedger small =
      lipschitz_ledger(pde, Architecture({2, 2, 1}, 1.0));
  CHECK(small.residual_bound ==
        doctest::Approx(301989888.0).epsilon(1e-12));

  // Jacobian bound collapses at L=1 to 2 alpha (din + 7) R.
  const LipschitzLedger affine =
      lipschitz_ledger(pde, Architecture({2, 1}, 1.5));
  CHECK(affine.jacobian_bound ==
        doctest::Approx(2.0 * 1.0 * 9.0 * 1.5).epsilon(1e-13));
}

TEST_CASE("ledger bounds are monotone in R, W and L") {
  const KolmogorovPde pde = heat_sine(1, 1.0);
  auto all_of = [](const LipschitzLedger& a, const LipschitzLedger& b) {
    return a.network_bound <= b.network_bound &&
           a.jacobian_bound <= b.jacobian_bound &&
           a.hessian_bound <= b.hessian_bound &&
           a.residual_bound <= b.residual_bound && a.c_i <= b.c_i &&
           a.c_t <= b.c_t;
  };
  CHECK(all_of(lipschitz_ledger(pde, Architecture({2, 4, 1}, 1.0)),
               lipschitz_ledger(pde, Architecture({2, 4, 1}, 2.0))));
  CHECK(all_of(lipschitz_ledger(pde, Architecture({2, 4, 1}, 1.5)),
               lipschitz_ledger(pde, Architecture({2, 8, 1}, 1.5))));
  CHECK(all_of(lipschitz_ledger(pde, Architecture({2, 4, 1}, 1.5)),
               lipschitz_ledger(pde, Architecture({2, 4, 4, 1}, 1.5))));
}

TEST_CASE("generic sample sizes match hand evaluations") {
  // k = a = c = L = 1, eps = eta = 0.5: ceil(8 (ln 8 + ln 2)) = 23.
  const SampleSize m = sample_size_generic(1, 1, 1, 1, 0.5, 0.5,
                                           SampleSizeMode::Probabilistic);
  CHECK(m.count == 23);
  CHECK(m.raw == doctest::Approx(8.0 * (std::log(8.0) + std::log(2.0)))
                     .epsilon(1e-14));
  CHECK(!m.floored);

  // Degenerate: huge eps drives the bound non-positive; floored at 1.
  const SampleSize f = sample_size_generic(1, 1, 1, 1, 50.0, 0.9,
                                           SampleSizeMode::Probabilistic);
  CHECK(f.count == 1);
  CHECK(f.floored);

  // Cumulative dominates probabilistic at eta = eps^2 / (2c).
  for (int i = 0; i < 10; ++i) {
    const double eps = uniform(0.05, 0.5, 61, static_cast<std::uint64_t>(i));
    const double c = uniform(0.5, 3.0, 62, static_cast<std::uint64_t>(i));
    const double lip = uniform(1.0, 50.0, 63, static_cast<std::uint64_t>(i));
    const SampleSize prob = sample_size_generic(
        2, 1.5, c, lip, eps, eps * eps / (2.0 * c),
        SampleSizeMode::Probabilistic);
    const SampleSize cumu = sample_size_generic(
        2, 1.5, c, lip, eps, 0.5, SampleSizeMode::Cumulative);
    CHECK(cumu.raw >= prob.raw);
  }
}

TEST_CASE("specialized sample sizes match hand evaluations") {
  const KolmogorovPde pde = heat_sine(1, 1.0);
  const Architecture arch({2, 10, 1}, 1.0);

  // Supervised plan at d=1, L=2, W=10, R=1, eps=0.1:
  // 16 * 25 * 10^6 / 10^-4 * ln(4 * 5^(1/5) * 10 / 0.1).
  const SampleSizePlan sup =
      sample_size_specialized(pde, arch, 0.1, PlanKind::Supervised, 0, 0, 0);
  const long double raw_sup =
      16.0L * 25.0L * 1e6L / 1e-4L *
      std::log(4.0L * std::pow(5.0L, 0.2L) * 10.0L / 0.1L);
  CHECK(static_cast<long long>(std::ceil(static_cast<double>(raw_sup))) ==
        sup.interior.count);
  CHECK(sup.interior.count == 25253408518380LL);
  CHECK(sup.spatial.count == sup.interior.count);
  CHECK(sup.temporal.count == sup.interior.count);

  // PINN plan at c_q = 20 (= c_s), beta = 2, C = 3:
  // 24 * 4 * 100 * 400 / 10^-4 * ln(4 * 20 * 10 * 2 * (3*8/0.01)^(1/6)).
  const LipschitzLedger ledger = lipschitz_ledger(pde, arch);
  const SampleSizePlan pinn = sample_size_specialized(
      pde, arch, 0.1, PlanKind::Pinn, ledger.c_i, ledger.c_s, ledger.c_t);
  const long double raw_pinn =
      24.0L * 4.0L * 100.0L * 400.0L / 1e-4L *
      std::log(1600.0L * std::pow(2400.0L, 1.0L / 6.0L));
  CHECK(static_cast<long long>(std::ceil(static_cast<double>(raw_pinn))) ==
        pinn.spatial.count);
  CHECK(pinn.spatial.count == 333118575781LL);
  CHECK(pinn.temporal.count == pinn.spatial.count);

  // Halving eps multiplies the supervised count by ~16 plus log growth.
  const SampleSizePlan half =
      sample_size_specialized(pde, arch, 0.05, PlanKind::Supervised, 0, 0, 0);
  const double ratio = half.interior.raw / sup.interior.raw;
  CHECK(ratio >= 16.0);
  CHECK(ratio <= 18.0);
}

TEST_CASE("empirical c_q sits below the analytic ledger value") {
  const KolmogorovPde pde = heat_sine(1, 1.0);
  const Architecture arch({2, 10, 1}, 1.0);
  const LipschitzLedger ledger = lipschitz_ledger(pde, arch);
  const double big = cq_empirical(pde, arch, 1000, 3);
  const double small = cq_empirical(pde, arch, 100, 3);
  CHECK(big <= ledger.c_i);
  CHECK(big >= small);  // nested maxima under the same seed

  KolmogorovPde inert;
  inert.dim = 1;
  inert.drift = AffineDrift::zero(1);
  inert.diffusion = AffineDiffusion::zero(1);
  const Architecture degenerate({2, 4, 1}, 0.0);
  CHECK(cq_empirical(inert, degenerate, 50, 5) == 0.0);
}

TEST_CASE("cumulative bound isolates its epsilon term") {
  StabilityConstants constants;
  constants.C1 = std::exp(1.0);
  constants.C3 = 1.0;
  CHECK(cumulative_l2_bound(0, 0, 0, 0.0, constants, 0.0) == 0.0);
  CHECK(cumulative_l2_bound(0, 0, 0, 0.01, constants, 0.0) ==
        doctest::Approx(0.08154845485377136).epsilon(1e-14));  // 3 e / 100

  // Monotone in every argument.
  for (int i = 0; i < 20; ++i) {
    auto u = [&](std::uint64_t c) {
      return uniform(0.0, 1.0, 91, static_cast<std::uint64_t>(i), c);
    };
    const double ei = u(0), es = u(1), et = u(2), eps = u(3), C2 = u(4);
    const double base = cumulative_l2_bound(ei, es, et, eps, constants, C2);
    CHECK(cumulative_l2_bound(ei + 0.1, es, et, eps, constants, C2) >= base);
    CHECK(cumulative_l2_bound(ei, es + 0.1, et, eps, constants, C2) >= base);
    CHECK(cumulative_l2_bound(ei, es, et + 0.1, eps, constants, C2) >= base);
    CHECK(cumulative_l2_bound(ei, es, et, eps + 0.1, constants, C2) >= base);
    CHECK(cumulative_l2_bound(ei, es, et, eps, constants, C2 + 0.1) >= base);
  }
}

TEST_CASE("delta covers tile the parameter box") {
  const auto four = delta_cover(1.0, 2, 0.5);
  CHECK(four.size() == 4);
  for (const auto& c : four) {
    CHECK(std::abs(std::abs(c[0]) - 0.5) <= 1e-15);
    CHECK(std::abs(std::abs(c[1]) - 0.5) <= 1e-15);
  }
  const auto single = delta_cover(1.0, 1, 1.0);
  CHECK(single.size() == 1);
  CHECK(single[0][0] == doctest::Approx(0.0).epsilon(1e-15));

  const double a = 0.8, delta = 0.17;
  const auto cover = delta_cover(a, 2, delta);
  CHECK(static_cast<double>(cover.size()) <=
        std::pow(std::ceil(a / delta), 2));
  for (int probe = 0; probe < 10000; ++probe) {
    const double x =
        uniform(-a, a, 71, static_cast<std::uint64_t>(probe), 0);
    const double y =
        uniform(-a, a, 71, static_cast<std::uint64_t>(probe), 1);
    double best = 1e300;
    for (const auto& c : cover) {
      best = std::min(best,
                      std::max(std::abs(x - c[0]), std::abs(y - c[1])));
    }
    CHECK(best <= delta + 1e-12);
  }
}

TEST_CASE("error decomposition inequality on synthetic families") {
  // Constant-in-theta family: both moduli vanish.
  SyntheticFamily constant;
  constant.k = 1;
  constant.a = 1.0;
  constant.f = [](std::span<const double>, double z) { return z; };
  constant.target = [](double z) { return z * z; };
  std::vector<double> data;
  for (int i = 0; i < 50; ++i) {
    data.push_back(uniform01(81, static_cast<std::uint64_t>(i)));
  }
  const DecompositionReport flat =
      decomposition_check(constant, 0.25, data, 2000, 5);
  CHECK(flat.modulus_g == 0.0);
  CHECK(flat.modulus_t == 0.0);
  CHECK(flat.holds);

  // Linear families over random datasets.
  for (int rep = 0; rep < 10; ++rep) {
    SyntheticFamily linear;
    linear.k = 1;
    linear.a = 1.0;
    const double slope = uniform(-1.0, 1.0, 82, static_cast<std::uint64_t>(rep));
    linear.f = [](std::span<const double> th, double z) {
      return th[0] * z;
    };
    linear.target = [slope](double z) { return slope * z; };
    std::vector<double> pts;
    for (int i = 0; i < 30; ++i) {
      pts.push_back(uniform01(83, static_cast<std::uint64_t>(rep), i));
    }
    const DecompositionReport rpt = decomposition_check(
        linear, 0.2, pts, 2000, 90 + static_cast<std::uint64_t>(rep));
    CHECK(rpt.holds);
  }

  // Shrinking delta shrinks the modulus terms.
  SyntheticFamily fam;
  fam.k = 1;
  fam.a = 1.0;
  fam.f = [](std::span<const double> th, double z) {
    return std::sin(3.0 * th[0]) * z;
  };
  fam.target = [](double z) { return 0.4 * z; };
  const DecompositionReport wide = decomposition_check(fam, 0.5, data, 2000, 7);
  const DecompositionReport narrow =
      decomposition_check(fam, 0.05, data, 2000, 7);
  CHECK(narrow.modulus_g <= wide.modulus_g + 1e-9);
  CHECK(narrow.modulus_t <= wide.modulus_t + 1e-9);
}

TEST_CASE("rho_d estimate: degenerate and dimension sweeps") {
  KolmogorovPde inert;
  inert.dim = 1;
  inert.drift = AffineDrift::zero(1);
  inert.diffusion = AffineDiffusion::zero(1);
  CHECK(estimate_rho_d(inert, 2.5, 4.0, 3, 4, 64, 1) == 0.0);

  const double r1 = estimate_rho_d(heat_sine(1, 0.5), 2.5, 4.0, 3, 4, 256, 2);
  const double r4 = estimate_rho_d(heat_sine(4, 0.5), 2.5, 4.0, 3, 4, 256, 2);
  CHECK(r1 > 0.0);
  CHECK(r4 / r1 <= 8.0);  // polynomial, not exponential, growth in d

  // Nested space grids only enlarge the maximum.
  const KolmogorovPde pde = heat_sine(1, 0.5);
  const double coarse = estimate_rho_d(pde, 2.5, 4.0, 3, 4, 256, 9);
  const double fine = estimate_rho_d(pde, 2.5, 4.0, 5, 4, 256, 9);
  CHECK(fine >= coarse - 1e-12);
}

TEST_CASE("oracle certificate dominates the measured error") {
  const KolmogorovPde pde = heat_sine(1, 1.0);
  const Architecture arch({2, 8, 1}, 1.0);
  const ParameterVector params = random_params(arch, 77);
  const StabilityConstants constants = stability_constants(pde);
  const ResidualNorms norms = residual_l2_norms(params, pde, 4000, 101);
  const double C2 = c2_oracle(pde, params, 2000, 102);
  CHECK(C2 >= 0.0);
  const Certificate cert =
      l2_certificate(norms, constants, C2, C2Mode::Oracle);
  const McEstimate measured = measured_l2_error(params, pde, 4000, 103);
  CHECK(measured.estimate <= cert.bound + 3.0 * measured.standard_error);
}
