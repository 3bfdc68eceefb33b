#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mfchain/linearized.hpp"
#include "mfchain/master_eq.hpp"
#include "mfchain/observables.hpp"
#include "test_support.hpp"

using namespace mfchain;
using testing_support::interior_measure;
using testing_support::uniform;

namespace {

PropagatedObservable quadratic(const Model& m) {
  return PropagatedObservable(m, observables::squared_distance(Measure::barycenter(m.dim())));
}

std::vector<State> config_from_counts(const std::vector<std::size_t>& counts) {
  std::vector<State> out;
  for (State x = 0; x < counts.size(); ++x) out.insert(out.end(), counts[x], x);
  return out;
}

}  // namespace

TEST_CASE("value examples") {
  const PropagatedObservable w = quadratic(weak_interaction(1, 1, 0.25));
  const Measure mu({0.9, 0.1});
  CHECK(w.value(0.0, mu) == doctest::Approx(0.32));

  const PropagatedObservable s = quadratic(example_slow_conv());
  CHECK(std::abs(s.value(0.5, Measure({1.0, 0.0})) - 1.0 / 18.0) < 1e-6);

  const PropagatedObservable c(example_non_erg(), observables::constant(2.5));
  for (double t : {0.0, 0.5, 3.0}) CHECK(c.value(t, Measure({0.2, 0.8})) == 2.5);
  CHECK_FALSE(c.uses_fd_fallback());

  ScalarField bare;
  bare.eval = [](const Measure& m) { return m[0]; };
  CHECK(PropagatedObservable(example_non_erg(), bare).uses_fd_fallback());
}

TEST_CASE("functional derivative examples") {
  const Model m = weak_interaction(1, 1, 0.25);
  const ScalarField phi = observables::squared_distance(Measure({0.2, 0.8}));
  const PropagatedObservable obs(m, phi);
  const Measure mu({0.7, 0.3});
  for (State z = 0; z < 2; ++z) {
    CHECK(obs.functional_derivative(0.0, mu, z) == linear_functional_derivative(phi, mu, z));
  }

  const std::vector<double> c = {1.5, -0.5};
  const PropagatedObservable lin(m, observables::linear(c));
  const TimeGrid grid({0.0, 1.3});
  for (State z = 0; z < 2; ++z) {
    const auto dm = dm_dmeasure(m, mu, z, grid);
    const double expected = dm.values.back()[0] * c[0] + dm.values.back()[1] * c[1];
    CHECK(lin.functional_derivative(1.3, mu, z) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("property: functional derivative matches finite differences of U") {
  Rng rng(61);
  for (const Model& m : {weak_interaction(1, 1, 0.25), example_non_erg(), constant_symmetric(3, 0.6)}) {
    const PropagatedObservable obs(m, observables::entropy_like(0.3));
    for (int k = 0; k < 15; ++k) {
      const Measure mu = interior_measure(m.dim(), rng, 0.05);
      const double t = uniform(rng, 0.1, 3.0);
      ScalarField u;
      u.eval = [&](const Measure& nu) { return obs.value(t, nu); };
      for (State z = 0; z < m.dim(); ++z) {
        CHECK(std::abs(obs.functional_derivative(t, mu, z) - linear_functional_derivative(u, mu, z)) < 1e-5);
      }
    }
  }
}

TEST_CASE("property: normalization of the functional derivative of U") {
  Rng rng(62);
  for (const Model& m : {weak_interaction(1, 1, 0.25), example_slow_conv(), constant_symmetric(4, 1.0)}) {
    const PropagatedObservable obs = quadratic(m);
    for (int k = 0; k < 20; ++k) {
      const Measure mu = interior_measure(m.dim(), rng, 0.0);
      const double t = uniform(rng, 0.0, 5.0);
      const auto du = obs.functional_derivatives(t, mu);
      double s = 0.0;
      for (State z = 0; z < m.dim(); ++z) s += mu[z] * du[z];
      CHECK(std::abs(s) < 1e-8);
    }
  }
}

TEST_CASE("master residual examples") {
  const PropagatedObservable c(weak_interaction(1, 1, 0.25), observables::constant(1.0));
  CHECK(master_residual(c, 1.0, Measure({0.3, 0.7})) == 0.0);

  const PropagatedObservable w = quadratic(weak_interaction(1, 1, 0.25));
  CHECK(master_residual(w, 2.0, Measure({0.5, 0.5})) < 1e-12);
  CHECK_THROWS_AS(master_residual(w, 0.0, Measure({0.5, 0.5})), std::invalid_argument);
}

TEST_CASE("property: master equation holds on random points") {
  for (const Model& m : {weak_interaction(1, 1, 0.25), example_slow_conv()}) {
    const auto rows = residual_scan(quadratic(m), 100, 0.1, 5.0, 63);
    REQUIRE(rows.size() == 100);
    for (const auto& r : rows) {
      CHECK(r.t >= 0.1);
      CHECK(r.t <= 5.0);
      CHECK(r.residual < 1e-5);
    }
  }
}

TEST_CASE("property: Lipschitz bound on dU is uniform in time") {
  const Model m = weak_interaction(1, 1, 0.25);
  const PropagatedObservable obs = quadratic(m);
  Rng rng(64);
  std::vector<std::pair<Measure, Measure>> pairs;
  for (int k = 0; k < 30; ++k) pairs.emplace_back(interior_measure(2, rng, 0.0), interior_measure(2, rng, 0.0));
  auto max_ratio = [&](std::initializer_list<double> times) {
    double best = 0.0;
    for (double t : times) {
      for (const auto& [a, b] : pairs) {
        const auto da = obs.functional_derivatives(t, a);
        const auto db = obs.functional_derivatives(t, b);
        for (State z = 0; z < 2; ++z) best = std::max(best, std::abs(da[z] - db[z]) / l1_distance(a, b));
      }
    }
    return best;
  };
  const double early = max_ratio({0.5, 1.0, 2.0});
  const double late = max_ratio({5.0, 10.0, 20.0});
  CHECK(early > 0.0);
  CHECK(late <= 1.2 * early);
}

TEST_CASE("tau remainder examples") {
  SquareMatrix g(3, {0, 1.0, 0.5, 0.7, 0, 1.2, 0.4, 0.9, 0});
  const PropagatedObservable lin(constant(g), observables::linear({1.0, -2.0, 0.5}));
  const auto cfg3 = config_from_counts({3, 4, 3});
  CHECK(std::abs(tau_remainder(lin, 1.0, cfg3, 0, 2)) < 1e-12);

  const PropagatedObservable w = quadratic(weak_interaction(1, 1, 0.25));
  const auto cfg = config_from_counts({15, 35});
  CHECK(tau_remainder(w, 1.0, cfg, 0, 0) == 0.0);
  CHECK(tau_remainder(w, 1.0, cfg, 20, 1) == 0.0);
  CHECK_THROWS_AS(tau_remainder(w, 1.0, cfg, 50, 1), std::invalid_argument);
}

TEST_CASE("tau remainder scales like 1/N") {
  const PropagatedObservable w = quadratic(weak_interaction(1, 1, 0.25));
  for (double s : {0.5, 1.0, 2.0}) {
    const double t50 = tau_remainder(w, s, config_from_counts({15, 35}), 0, 1);
    const double t100 = tau_remainder(w, s, config_from_counts({30, 70}), 0, 1);
    REQUIRE(t100 != 0.0);
    const double ratio = t50 / t100;
    CHECK(ratio >= 1.5);
    CHECK(ratio <= 2.5);
  }
}

TEST_CASE("property: tau remainder decays in time") {
  const PropagatedObservable w = quadratic(weak_interaction(1, 1, 0.25));
  for (const auto& counts : {std::vector<std::size_t>{10, 40}, {45, 5}, {25, 25}}) {
    const auto cfg = config_from_counts(counts);
    for (std::size_t i : {std::size_t{0}, cfg.size() - 1}) {
      const State z = cfg[i] == 0 ? 1 : 0;
      double prev = std::abs(tau_remainder(w, 1.0, cfg, i, z));
      CHECK(prev > 0.0);
      for (double s : {2.0, 4.0, 8.0}) {
        const double cur = std::abs(tau_remainder(w, s, cfg, i, z));
        CHECK(cur < prev);
        prev = cur;
      }
    }
  }
}

TEST_CASE("residual CSV header") {
  std::ostringstream out;
  write_residual_csv(out, residual_scan(quadratic(example_slow_conv()), 3, 0.1, 1.0, 1));
  CHECK(out.str().rfind("t,mu_1,mu_2,residual\n", 0) == 0);
}
