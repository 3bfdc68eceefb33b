#include <doctest.h>

#include <cmath>

#include "mfchain/observables.hpp"
#include "mfchain/simplex.hpp"
#include "test_support.hpp"

using namespace mfchain;
using testing_support::interior_measure;
using testing_support::random_smooth_field;

namespace {

ScalarField mu1_squared() {
  ScalarField f;
  f.name = "mu1^2";
  f.eval = [](const Measure& mu) { return mu[0] * mu[0]; };
  return f;
}

}  // namespace

TEST_CASE("Measure validates its weights") {
  CHECK_NOTHROW(Measure({0.25, 0.75}));
  CHECK_THROWS_AS(Measure({1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Measure({-0.1, 1.1}), std::invalid_argument);
  CHECK_THROWS_AS(Measure({0.5, 0.6}), std::invalid_argument);
  CHECK_NOTHROW(Measure({0.5, 0.5 + 5e-13}));
  CHECK(Measure::dirac(3, 1).vec() == std::vector<double>{0.0, 1.0, 0.0});
  CHECK(Measure::barycenter(4)[2] == doctest::Approx(0.25));
}

TEST_CASE("TangentVector requires zero sum") {
  CHECK_NOTHROW(TangentVector({1.0, -1.0}));
  CHECK_THROWS_AS(TangentVector({1.0, -0.5}), std::invalid_argument);
  const auto diff = TangentVector::difference(Measure({1.0, 0.0}), Measure({0.25, 0.75}));
  CHECK(diff[0] == doctest::Approx(0.75));
  CHECK(diff[1] == doctest::Approx(-0.75));
}

TEST_CASE("l1_distance examples") {
  CHECK(l1_distance(Measure({1.0, 0.0}), Measure({0.0, 1.0})) == 2.0);
  const Measure mu({0.3, 0.7});
  CHECK(l1_distance(mu, mu) == 0.0);
  CHECK(l1_distance(Measure({0.25, 0.75}), Measure({0.5, 0.5})) == doctest::Approx(0.5));
  CHECK_THROWS_AS(l1_distance(Measure({0.5, 0.5}), Measure::barycenter(3)), std::invalid_argument);
}

TEST_CASE("l1_distance is a metric on random measures") {
  Rng rng(11);
  for (int k = 0; k < 100; ++k) {
    const auto a = interior_measure(4, rng, 0.0);
    const auto b = interior_measure(4, rng, 0.0);
    const auto c = interior_measure(4, rng, 0.0);
    CHECK(l1_distance(a, b) == doctest::Approx(l1_distance(b, a)));
    CHECK(l1_distance(a, c) <= l1_distance(a, b) + l1_distance(b, c) + 1e-15);
    CHECK(l1_distance(a, b) <= 2.0 + 1e-15);
  }
}

TEST_CASE("mix examples") {
  const Measure mu({0.3, 0.7}), nu({0.9, 0.1});
  CHECK(mix(mu, nu, 0.0) == mu);
  CHECK(mix(mu, nu, 1.0) == nu);
  const Measure mid = mix(Measure({1.0, 0.0}), Measure({0.0, 1.0}), 0.5);
  CHECK(mid[0] == 0.5);
  const Measure avg = mix(Measure({0.25, 0.75}), Measure({0.75, 0.25}), 0.5);
  CHECK(avg[0] == doctest::Approx(0.5));
  CHECK_THROWS_AS(mix(mu, nu, 1.5), DomainError);
  CHECK_THROWS_AS(mix(mu, nu, -0.1), DomainError);
}

TEST_CASE("linear functional derivative of mu1^2") {
  const ScalarField f = mu1_squared();
  const Measure mu({0.3, 0.7});
  CHECK(linear_functional_derivative(f, mu, 0) == doctest::Approx(0.42).epsilon(1e-8));
  CHECK(linear_functional_derivative(f, mu, 1) == doctest::Approx(-0.18).epsilon(1e-8));
  CHECK(directional_derivative(f, mu, 0, 1) == doctest::Approx(-0.60).epsilon(1e-8));
  CHECK(directional_derivative(f, mu, 1, 0) == doctest::Approx(0.60).epsilon(1e-8));
  CHECK(directional_derivative(f, mu, 1, 1) == 0.0);
}

TEST_CASE("constant field has zero derivative") {
  const ScalarField c = observables::constant(3.5);
  const Measure mu({0.2, 0.3, 0.5});
  for (State z = 0; z < 3; ++z) {
    CHECK(linear_functional_derivative(c, mu, z) == 0.0);
    CHECK(fd_functional_derivative(c, mu, z) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("chord finite difference stays inside the simplex at a vertex") {
  const ScalarField f = mu1_squared();
  const Measure vertex = Measure::dirac(2, 1);
  // F((1-e) delta_2 + e delta_1) = e^2, derivative 0 at e = 0.
  CHECK(linear_functional_derivative(f, vertex, 0) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("ftc_difference examples") {
  const ScalarField f = mu1_squared();
  const Measure a({0.0, 1.0}), b({1.0, 0.0});
  CHECK(ftc_difference(f, a, b) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(ftc_difference(f, a, a) == 0.0);
  const ScalarField lin = observables::linear({2.0, -1.0, 0.5});
  const Measure p({0.2, 0.3, 0.5}), q({0.6, 0.1, 0.3});
  for (std::size_t n : {2u, 3u, 4u, 5u, 8u}) {
    CHECK(ftc_difference(lin, p, q, n) == doctest::Approx(lin(q) - lin(p)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(ftc_difference(lin, p, q, 1), std::invalid_argument);
}

TEST_CASE("composite weights integrate low-degree polynomials exactly") {
  for (std::size_t n = 3; n <= 12; ++n) {
    const auto w = composite_weights(n);
    double s0 = 0.0, s3 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double x = static_cast<double>(k) / static_cast<double>(n - 1);
      s0 += w[k];
      s3 += w[k] * x * x * x;
    }
    CHECK(s0 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s3 == doctest::Approx(0.25).epsilon(1e-13));
  }
}

TEST_CASE("property: normalization of analytic derivatives") {
  Rng rng(2024);
  const std::vector<ScalarField> fields = {
      observables::squared_distance(Measure({0.1, 0.2, 0.7})),
      observables::linear({1.0, -2.0, 0.3}), observables::entropy_like(0.1),
      testing_support::as_scalar_field(random_smooth_field(3, rng))};
  for (const auto& f : fields) {
    for (int k = 0; k < 100; ++k) {
      const Measure mu = interior_measure(3, rng, 0.0);
      double s = 0.0;
      for (State z = 0; z < 3; ++z) s += mu[z] * linear_functional_derivative(f, mu, z);
      CHECK(std::abs(s) < 1e-8);
    }
  }
}

TEST_CASE("property: analytic derivative agrees with the chord finite difference") {
  Rng rng(7);
  for (int k = 0; k < 50; ++k) {
    const auto sf = random_smooth_field(3, rng);
    const ScalarField f = testing_support::as_scalar_field(sf);
    const Measure mu = interior_measure(3, rng);
    for (State z = 0; z < 3; ++z) {
      CHECK(fd_functional_derivative(f, mu, z) ==
            doctest::Approx(linear_functional_derivative(f, mu, z)).epsilon(1e-6));
    }
  }
}

TEST_CASE("property: representation through the first-coordinate directional derivatives") {
  // dF/dm(mu, z) = sum_y D_{1y} F(mu) (delta_z - mu)_y.
  Rng rng(8);
  for (int k = 0; k < 50; ++k) {
    const ScalarField f = testing_support::as_fd_field(random_smooth_field(4, rng));
    const Measure mu = interior_measure(4, rng);
    std::vector<double> d1(4);
    for (State y = 0; y < 4; ++y) d1[y] = directional_derivative(f, mu, 0, y);
    for (State z = 0; z < 4; ++z) {
      double rep = 0.0;
      for (State y = 0; y < 4; ++y) rep += d1[y] * ((y == z ? 1.0 : 0.0) - mu[y]);
      CHECK(rep == doctest::Approx(linear_functional_derivative(f, mu, z)).epsilon(1e-6));
    }
  }
}

TEST_CASE("property: aggregation of directional derivatives") {
  // sum_y D_{yz} F(mu) mu_y = dF/dm(mu, z).
  Rng rng(9);
  for (int k = 0; k < 50; ++k) {
    const ScalarField f = testing_support::as_fd_field(random_smooth_field(3, rng));
    const Measure mu = interior_measure(3, rng);
    for (State z = 0; z < 3; ++z) {
      double agg = 0.0;
      for (State y = 0; y < 3; ++y) agg += directional_derivative(f, mu, y, z) * mu[y];
      CHECK(agg == doctest::Approx(linear_functional_derivative(f, mu, z)).epsilon(1e-6));
    }
  }
}

TEST_CASE("property: ftc_difference on random chords") {
  Rng rng(10);
  for (int k = 0; k < 100; ++k) {
    const ScalarField f = testing_support::as_scalar_field(random_smooth_field(3, rng));
    const Measure a = interior_measure(3, rng, 0.0);
    const Measure b = interior_measure(3, rng, 0.0);
    // Simpson error for these fields is far below 1e-7 at 33 nodes.
    CHECK(std::abs(ftc_difference(f, a, b) - (f(b) - f(a))) < 1e-7);
  }
}

TEST_CASE("property: time chain rule along smooth simplex paths") {
  // phi(t) = softmax(c + t v): smooth, strictly inside the simplex.
  Rng rng(12);
  auto path = [](const std::vector<double>& c, const std::vector<double>& v, double t) {
    std::vector<double> w(c.size());
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      w[i] = std::exp(c[i] + t * v[i]);
      s += w[i];
    }
    for (double& x : w) x /= s;
    double head = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) head += w[i];
    w.back() = 1.0 - head;
    return Measure(std::move(w));
  };
  for (int k = 0; k < 50; ++k) {
    const ScalarField f = testing_support::as_scalar_field(random_smooth_field(3, rng));
    std::vector<double> c(3), v(3);
    for (auto& x : c) x = testing_support::uniform(rng, -1.0, 1.0);
    for (auto& x : v) x = testing_support::uniform(rng, -1.0, 1.0);
    const double t = testing_support::uniform(rng, -1.0, 1.0);
    const double h = 1e-4;
    const double lhs = (f(path(c, v, t + h)) - f(path(c, v, t - h))) / (2.0 * h);
    const Measure p = path(c, v, t);
    // Exact derivative of softmax: p_i (v_i - p.v).
    double pv = 0.0;
    for (int i = 0; i < 3; ++i) pv += p[i] * v[i];
    double rhs = 0.0;
    for (State z = 0; z < 3; ++z) rhs += linear_functional_derivative(f, p, z) * p[z] * (v[z] - pv);
    CHECK(std::abs(lhs - rhs) < 1e-6);
  }
}

TEST_CASE("property: chain rule for compositions with simplex maps") {
  // d(F o psi)/dm(mu, z) = sum_y dF/dm(psi(mu), y) dpsi_y/dm(mu, z), with the
  // derivative of psi taken by a central difference through mixtures.
  Rng rng(13);
  for (int k = 0; k < 50; ++k) {
    const std::size_t d = 2 + k % 3;
    const auto sf = random_smooth_field(d, rng);
    const ScalarField f = testing_support::as_scalar_field(sf);
    const auto psi = testing_support::random_simplex_map(d, rng);
    const Measure mu = interior_measure(d, rng, 0.05);
    ScalarField composed;
    composed.eval = [&](const Measure& m) { return f(psi(m.vec())); };
    const Measure image = psi(mu.vec());
    for (State z = 0; z < d; ++z) {
      const double h = 1e-5;
      std::vector<double> plus(d), minus(d);
      for (std::size_t x = 0; x < d; ++x) {
        const double dz = x == z ? 1.0 : 0.0;
        plus[x] = mu[x] + h * (dz - mu[x]);
        minus[x] = mu[x] - h * (dz - mu[x]);
      }
      const Measure pp = psi(plus), pm = psi(minus);
      double rhs = 0.0;
      for (State y = 0; y < d; ++y) {
        rhs += linear_functional_derivative(f, image, y) * (pp[y] - pm[y]) / (2.0 * h);
      }
      CHECK(std::abs(linear_functional_derivative(composed, mu, z) - rhs) < 1e-6);
    }
  }
}
