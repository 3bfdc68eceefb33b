#ifndef MFCHAIN_TEST_SUPPORT_HPP
#define MFCHAIN_TEST_SUPPORT_HPP

// Hand-rolled generators shared by the property tests.

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "mfchain/models.hpp"
#include "mfchain/observables.hpp"
#include "mfchain/random.hpp"
#include "mfchain/simplex.hpp"

namespace testing_support {

using namespace mfchain;

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Random measure with every weight at least floor (then renormalized).
inline Measure interior_measure(std::size_t d, Rng& rng, double floor = 0.02) {
  std::vector<double> w(d);
  double s = 0.0;
  for (double& x : w) {
    x = floor + uniform01(rng);
    s += x;
  }
  for (double& x : w) x /= s;
  // Fix the last coordinate so the sum is 1 to rounding.
  double head = 0.0;
  for (std::size_t i = 0; i + 1 < d; ++i) head += w[i];
  w[d - 1] = 1.0 - head;
  return Measure(std::move(w));
}

/// F(mu) = a.mu + mu B mu + c sum mu_x log(mu_x + kappa), with its gradient.
struct SmoothField {
  std::vector<double> a;
  std::vector<double> B;  // d*d
  double c = 0.0;
  double kappa = 0.5;

  double value(std::span<const double> mu) const {
    const std::size_t d = a.size();
    double v = 0.0;
    for (std::size_t x = 0; x < d; ++x) {
      v += a[x] * mu[x] + c * mu[x] * std::log(mu[x] + kappa);
      for (std::size_t y = 0; y < d; ++y) v += mu[x] * B[x * d + y] * mu[y];
    }
    return v;
  }

  void gradient(std::span<const double> mu, std::span<double> g) const {
    const std::size_t d = a.size();
    for (std::size_t x = 0; x < d; ++x) {
      g[x] = a[x] + c * (std::log(mu[x] + kappa) + mu[x] / (mu[x] + kappa));
      for (std::size_t y = 0; y < d; ++y) g[x] += (B[x * d + y] + B[y * d + x]) * mu[y];
    }
  }
};

inline SmoothField random_smooth_field(std::size_t d, Rng& rng) {
  SmoothField f;
  f.a.resize(d);
  f.B.resize(d * d);
  for (double& v : f.a) v = uniform(rng, -1.0, 1.0);
  for (double& v : f.B) v = uniform(rng, -1.0, 1.0);
  f.c = uniform(rng, -0.5, 0.5);
  f.kappa = uniform(rng, 0.2, 1.0);
  return f;
}

inline ScalarField as_scalar_field(const SmoothField& f) {
  auto p = std::make_shared<SmoothField>(f);
  return observables::from_gradient(
      "smooth", [p](const Measure& mu) { return p->value(mu.weights()); },
      [p](const Measure& mu, std::span<double> g) { p->gradient(mu.weights(), g); });
}

/// Same field without an analytic derivative (forces finite differences).
inline ScalarField as_fd_field(const SmoothField& f) {
  auto p = std::make_shared<SmoothField>(f);
  ScalarField s;
  s.name = "smooth_fd";
  s.eval = [p](const Measure& mu) { return p->value(mu.weights()); };
  return s;
}

/// psi(mu)_x = w_x / sum w with w_x = mu_x^2 + b_x mu_x + c_x, c_x > 0:
/// a smooth map of the simplex into itself.
struct SimplexMap {
  std::vector<double> b, c;

  Measure operator()(const std::vector<double>& mu) const {
    const std::size_t d = b.size();
    std::vector<double> w(d);
    double s = 0.0;
    for (std::size_t x = 0; x < d; ++x) {
      w[x] = mu[x] * mu[x] + b[x] * mu[x] + c[x];
      s += w[x];
    }
    double head = 0.0;
    for (std::size_t x = 0; x + 1 < d; ++x) {
      w[x] /= s;
      head += w[x];
    }
    w[d - 1] = 1.0 - head;
    return Measure(std::move(w));
  }
};

inline SimplexMap random_simplex_map(std::size_t d, Rng& rng) {
  SimplexMap m;
  for (std::size_t x = 0; x < d; ++x) {
    m.b.push_back(uniform(rng, 0.0, 2.0));
    m.c.push_back(uniform(rng, 0.1, 1.0));
  }
  return m;
}

}  // namespace testing_support

#endif  // MFCHAIN_TEST_SUPPORT_HPP
