#include <doctest.h>

#include <cmath>

#include "pdmp/model.hpp"
#include "pdmp/motor.hpp"

using namespace pdmp;

namespace {

PdmpModel two_state(double g0 = 1.0, double g1 = 3.0) {
  return registry_get("two_state_linear", {{"gamma0", g0}, {"gamma1", g1}});
}

}  // namespace

TEST_CASE("total jump rate sums outgoing rates") {
  auto model = two_state(1.0, 3.0);
  const double x = 0.0;
  CHECK(total_jump_rate(model, 0, {&x, 1}, 0.0) == doctest::Approx(1.0));
  CHECK(total_jump_rate(model, 1, {&x, 1}, 0.0) == doctest::Approx(3.0));

  // |Gamma| = 3 with all rates 2 -> total 4
  PdmpModel tri;
  tri.states = ChemicalStateSpace::indexed(3);
  tri.dim = 1;
  tri.horizon = 1.0;
  tri.force.evaluate = [](int, std::span<const double>, double, std::span<double> out) {
    out[0] = 0.0;
  };
  tri.rates.evaluate = [](int, int, std::span<const double>, double) { return 2.0; };
  CHECK(total_jump_rate(tri, 0, {&x, 1}, 0.0) == doctest::Approx(4.0));
  CHECK(total_jump_rate(tri, 2, {&x, 1}, 0.0) == doctest::Approx(4.0));
}

TEST_CASE("total jump rate matches hand-summed motor rates") {
  motor::MotorParams p;
  p.beta = 8.0;
  p.epsilon = -0.5;
  p.f = 0.4;
  auto model = motor::build_model(p, 2.0);
  const double x = 0.0;
  const double expected = motor::rate(p, 1, 0, x) + motor::rate(p, 1, 2, x);
  CHECK(total_jump_rate(model, 1, {&x, 1}, 0.0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("chemical generator rows sum to zero") {
  auto model = two_state(1.0, 3.0);
  const double x = 0.5;
  Eigen::MatrixXd gen = chemical_generator(model, {&x, 1}, 0.0);
  CHECK(gen(0, 0) == doctest::Approx(-1.0));
  CHECK(gen(0, 1) == doctest::Approx(1.0));
  CHECK(gen(1, 0) == doctest::Approx(3.0));
  CHECK(gen(1, 1) == doctest::Approx(-3.0));

  // singleton state space
  PdmpModel solo;
  solo.states = ChemicalStateSpace::indexed(1);
  solo.dim = 1;
  solo.horizon = 1.0;
  solo.force.evaluate = [](int, std::span<const double>, double, std::span<double> out) {
    out[0] = 0.0;
  };
  solo.rates.evaluate = [](int, int, std::span<const double>, double) { return 0.0; };
  CHECK(chemical_generator(solo, {&x, 1}, 0.0)(0, 0) == 0.0);

  auto rnd = registry_get("random_ergodic", {{"seed", 3.0}, {"n_states", 3.0}});
  Eigen::MatrixXd g3 = chemical_generator(rnd, {&x, 1}, 0.3);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(g3.row(i).sum()) < 1e-14 * g3.cwiseAbs().maxCoeff());
}

TEST_CASE("embedded probabilities sum to one wherever the rate is positive") {
  auto model = registry_get("random_ergodic", {{"seed", 11.0}, {"n_states", 4.0}});
  for (double x : {-1.0, 0.0, 0.7}) {
    for (int s = 0; s < 4; ++s) {
      const double total = total_jump_rate(model, s, {&x, 1}, 0.1);
      REQUIRE(total > 0.0);
      double acc = 0.0;
      for (int to = 0; to < 4; ++to) acc += model.rate_at(s, to, {&x, 1}, 0.1);
      CHECK(acc / total == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("validate accepts an everywhere-positive two-state chain") {
  auto model = two_state(1.0, 2.0);
  auto grid = ProbeGrid::box({-3.0}, {3.0}, 7, model.horizon, 4);
  auto report = validate(model, grid);
  CHECK(report.passed());
  CHECK(report.n_probes == 28);
  CHECK(report.sup_total_rate == doctest::Approx(2.0));
  CHECK(report.summary().find("28 probes") != std::string::npos);
}

TEST_CASE("validate flags a one-way chain as A2 failure") {
  PdmpModel model;
  model.states = ChemicalStateSpace::indexed(2);
  model.dim = 1;
  model.horizon = 1.0;
  model.force.evaluate = [](int, std::span<const double>, double, std::span<double> out) {
    out[0] = 0.0;
  };
  model.force.kappa1 = 1.0;
  model.force.kappa2 = 1.0;
  model.rates.evaluate = [](int from, int, std::span<const double>, double) {
    return from == 1 ? 1.0 : 0.0;  // r(0,1) = 0
  };
  auto report = validate(model, ProbeGrid::box({-1.0}, {1.0}, 3, 1.0, 2));
  CHECK_FALSE(report.passed());
  CHECK(report.failed_assumption.value() == "A2");
}

TEST_CASE("validate flags a superlinear force as A4 failure inside the box") {
  PdmpModel model = two_state(1.0, 1.0);
  model.force.evaluate = [](int, std::span<const double> x, double, std::span<double> out) {
    out[0] = x[0] * x[0];
  };
  model.force.kappa1 = 1.0;
  model.force.kappa2 = 1.0;  // claimed bound 1 + |x| fails for |x| large
  auto report = validate(model, ProbeGrid::box({-10.0}, {10.0}, 21, 1.0, 2));
  CHECK_FALSE(report.passed());
  CHECK(report.failed_assumption.value() == "A4");
  CHECK(std::abs(report.witness_x[0]) > 1.0);
}

TEST_CASE("validate checks intra-block irreducibility when a partition is given") {
  motor::MotorParams p;
  p.beta = 8.0;
  p.epsilon = -0.5;
  p.f = 0.4;
  auto model = motor::build_model(p, 2.0);
  auto partition = motor::motor_partition();
  auto report = validate(model, ProbeGrid::box({-2.0}, {2.0}, 9, 2.0, 3), &partition);
  CHECK(report.passed());
  CHECK(report.checked_partition);
}

TEST_CASE("validate is pure") {
  auto model = two_state(1.0, 2.0);
  auto grid = ProbeGrid::box({-2.0}, {2.0}, 5, model.horizon, 3);
  auto a = validate(model, grid);
  auto b = validate(model, grid);
  CHECK(a.sup_total_rate == b.sup_total_rate);
  CHECK(a.passed() == b.passed());
  CHECK(a.summary() == b.summary());
}

TEST_CASE("registry: two_state_linear symmetric rates") {
  auto model = registry_get("two_state_linear", {{"a", 1.0}, {"gamma0", 1.0}, {"gamma1", 1.0}});
  const double x = 0.3;
  Eigen::MatrixXd gen = chemical_generator(model, {&x, 1}, 0.0);
  CHECK(gen(0, 1) == doctest::Approx(1.0));
  CHECK(gen(1, 0) == doctest::Approx(1.0));
  std::vector<double> f(1);
  model.force_at(0, {&x, 1}, 0.0, f);
  CHECK(f[0] == doctest::Approx(-0.3));
  model.force_at(1, {&x, 1}, 0.0, f);
  CHECK(f[0] == doctest::Approx(0.7));
}

TEST_CASE("registry: motor3 assembles a model that passes validation") {
  auto model = registry_get(
      "motor3", {{"beta", 8.0}, {"epsilon", -0.5}, {"f", 0.4}});
  auto partition = motor::motor_partition();
  auto report = validate(model, ProbeGrid::box({-2.0}, {2.0}, 9, model.horizon, 3), &partition);
  CHECK(report.passed());
}

TEST_CASE("registry: random_ergodic is deterministic in its seed") {
  auto a = registry_get("random_ergodic", {{"seed", 7.0}, {"n_states", 4.0}});
  auto b = registry_get("random_ergodic", {{"seed", 7.0}, {"n_states", 4.0}});
  auto c = registry_get("random_ergodic", {{"seed", 8.0}, {"n_states", 4.0}});
  bool differs = false;
  for (double x : {-1.0, 0.0, 0.5, 2.0})
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        if (i == j) continue;
        CHECK(a.rates.evaluate(i, j, {&x, 1}, 0.0) == b.rates.evaluate(i, j, {&x, 1}, 0.0));
        if (a.rates.evaluate(i, j, {&x, 1}, 0.0) != c.rates.evaluate(i, j, {&x, 1}, 0.0))
          differs = true;
      }
  CHECK(differs);
}

TEST_CASE("registry rejects unknown families and bad parameters") {
  CHECK_THROWS_AS(registry_get("nope", {}), UnknownFamily);
  CHECK_THROWS_AS(registry_get("two_state_linear", {{"gamma0", -1.0}}), BadParams);
  CHECK_THROWS_AS(registry_get("two_state_linear", {{"typo", 1.0}}), BadParams);
  CHECK_THROWS_AS(registry_get("motor3", {{"beta", -8.0}}), BadParams);
  CHECK_THROWS_AS(registry_get("random_ergodic", {{"n_states", 1.0}}), BadParams);
}

TEST_CASE("partition constructor rejects malformed block lists") {
  CHECK_THROWS_AS(MetastatePartition::make({{0, 1}, {1, 2}}, 3), BadParams);
  CHECK_THROWS_AS(MetastatePartition::make({{0}}, 2), BadParams);
  CHECK_THROWS_AS(MetastatePartition::make({}, 1), BadParams);
  auto p = MetastatePartition::make({{0}, {1, 2}}, 3);
  CHECK(p.block_of[2] == 1);
  CHECK(p.same_block(1, 2));
  CHECK_FALSE(p.same_block(0, 2));
}
