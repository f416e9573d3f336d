#include <doctest.h>

#include <cmath>
#include <limits>

#include "kolpinn/derivatives.hpp"
#include "kolpinn/rng.hpp"

using namespace kolpinn;

TEST_CASE("tanh derivatives at the origin") {
  const ActivationDerivs d = activation_derivatives(0.0);
  CHECK(d.v == 0.0);
  CHECK(d.d1 == 1.0);
  CHECK(d.d2 == 0.0);
  CHECK(d.d3 == -2.0);
}

TEST_CASE("tanh derivative suprema match the closed-form constants") {
  double m1 = 0.0, m2 = 0.0, m3 = 0.0;
  for (double z = -4.0; z <= 4.0; z += 1e-4) {
    const ActivationDerivs d = activation_derivatives(z);
    m1 = std::max(m1, std::abs(d.d1));
    m2 = std::max(m2, std::abs(d.d2));
    m3 = std::max(m3, std::abs(d.d3));
  }
  CHECK(m1 == doctest::Approx(1.0).epsilon(1e-4));
  // 4/(3 sqrt 3)
  CHECK(m2 == doctest::Approx(0.76980035891950102).epsilon(1e-4));
  CHECK(m3 == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("tanh first derivative closed form at z=1") {
  const ActivationDerivs d = activation_derivatives(1.0);
  CHECK(d.v == doctest::Approx(std::tanh(1.0)).epsilon(1e-15));
  CHECK(d.d1 == doctest::Approx(0.41997434161402607).epsilon(1e-14));
}

TEST_CASE("single affine layer has Jacobian W1 and zero Hessian") {
  const Architecture arch({2, 2}, 3.0);
  ParameterVector p(arch);
  p.values = {1.5, -0.5, 2.0, 0.25, 0.0, 0.0};
  const JacobianResult J = input_jacobian(p, {0.3, 0.7});
  CHECK(J(0, 0) == 1.5);
  CHECK(J(0, 1) == -0.5);
  CHECK(J(1, 0) == 2.0);
  CHECK(J(1, 1) == 0.25);
  const HessianResult H = input_hessian(p, {0.3, 0.7});
  for (double v : H.data) CHECK(v == 0.0);
}

TEST_CASE("u(x) = tanh(2x) derivative at x = 0.5") {
  const Architecture arch({1, 1, 1}, 3.0);
  ParameterVector p(arch);
  p.values = {2.0, 0.0, 1.0, 0.0};  // tanh(2x) then identity output
  const JacobianResult J = input_jacobian(p, {0.5});
  // 2 (1 - tanh(1)^2)
  CHECK(J(0, 0) == doctest::Approx(0.83994868322805214).epsilon(1e-14));
  const HessianResult H = input_hessian(p, {0.0});
  CHECK(H(0, 0, 0) == 0.0);  // sigma''(0) = 0
}

TEST_CASE("jacobian and hessian match finite differences on a random net") {
  const Architecture arch({3, 8, 8, 1}, 1.0);
  const ParameterVector p = random_params(arch, 5);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(3);
    for (int i = 0; i < 3; ++i) {
      x[static_cast<std::size_t>(i)] =
          uniform(-1.0, 1.0, 17, static_cast<std::uint64_t>(trial), i);
    }
    const JacobianResult J = input_jacobian(p, x);
    const HessianResult H = input_hessian(p, x);
    for (int i = 0; i < 3; ++i) {
      auto at = [&](int c, double dh) {
        std::vector<double> y = x;
        y[static_cast<std::size_t>(c)] += dh;
        return y;
      };
      const double fd =
          (forward(p, at(i, h))[0] - forward(p, at(i, -h))[0]) / (2 * h);
      CHECK(J(0, i) ==
            doctest::Approx(fd).epsilon(1e-6).scale(std::max(1.0, std::abs(fd))));
      const JacobianResult Ju = input_jacobian(p, at(i, h));
      const JacobianResult Jd = input_jacobian(p, at(i, -h));
      for (int j = 0; j < 3; ++j) {
        const double fd2 = (Ju(0, j) - Jd(0, j)) / (2 * h);
        CHECK(H(0, i, j) ==
              doctest::Approx(fd2).epsilon(1e-5).scale(std::max(1.0, std::abs(fd2))));
        CHECK(std::abs(H(0, i, j) - H(0, j, i)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("parameter gradient: quadratic and constant losses") {
  const Architecture arch({2, 3, 1}, 1.0);
  const ParameterVector p = random_params(arch, 21);

  LossFunction quadratic;
  quadratic.value = [](const ParameterVector& q) {
    double s = 0.0;
    for (double v : q.values) s += v * v;
    return s;
  };
  const auto g = param_gradient(quadratic, p, GradientMode::FiniteDifference);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(g[i] == doctest::Approx(2.0 * p.values[i]).epsilon(1e-8));
  }

  LossFunction constant;
  constant.value = [](const ParameterVector&) { return 3.5; };
  for (double v : param_gradient(constant, p, GradientMode::FiniteDifference)) {
    CHECK(v == doctest::Approx(0.0).epsilon(1e-10));
  }
}

TEST_CASE("non-finite loss raises a numerical failure with the index") {
  const Architecture arch({2, 2, 1}, 1.0);
  const ParameterVector p = random_params(arch, 2);
  LossFunction bad;
  bad.value = [](const ParameterVector&) {
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_AS(param_gradient(bad, p, GradientMode::FiniteDifference),
                  NumericalFailure);
}
