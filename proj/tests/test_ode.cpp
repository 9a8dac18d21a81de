#include <doctest.h>

#include <cmath>

#include "pdmp/ode.hpp"

using namespace pdmp;

TEST_CASE("rk45 integrates exponential decay to tolerance") {
  OdeRhs rhs = [](double, std::span<const double> y, std::span<double> dy) { dy[0] = -y[0]; };
  const double y0 = 1.0;
  DensePath path = integrate_dense(rhs, 0.0, {&y0, 1}, 1.0, {1e-10, 1e-12});
  CHECK(path.back_time() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(path.eval_component(1.0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
}

TEST_CASE("dense output is accurate between nodes") {
  OdeRhs rhs = [](double t, std::span<const double>, std::span<double> dy) {
    dy[0] = std::cos(t);
  };
  const double y0 = 0.0;
  DensePath path = integrate_dense(rhs, 0.0, {&y0, 1}, 6.0, {1e-9, 1e-12});
  for (double t = 0.0; t <= 6.0; t += 0.0137)
    CHECK(path.eval_component(t, 0) == doctest::Approx(std::sin(t)).epsilon(5e-7));
}

TEST_CASE("rk45 handles a 2d linear system") {
  // circular motion: exact solution preserves the radius
  OdeRhs rhs = [](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = -y[1];
    dy[1] = y[0];
  };
  std::vector<double> y0{1.0, 0.0};
  DensePath path = integrate_dense(rhs, 0.0, y0, 10.0, {1e-10, 1e-12});
  std::vector<double> yt(2);
  path.eval(10.0, yt);
  CHECK(yt[0] == doctest::Approx(std::cos(10.0)).epsilon(1e-7));
  CHECK(yt[1] == doctest::Approx(std::sin(10.0)).epsilon(1e-7));
}

TEST_CASE("non-finite right-hand side is reported") {
  OdeRhs rhs = [](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[0] * y[0];  // blows up at t = 1
  };
  const double y0 = 1.0;
  CHECK_THROWS_AS(integrate_dense(rhs, 0.0, {&y0, 1}, 2.0, {1e-8, 1e-10}),
                  std::runtime_error);
}
