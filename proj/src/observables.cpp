#include "mfchain/observables.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace mfchain::observables {

ScalarField from_gradient(std::string name,
                          std::function<double(const Measure&)> value,
                          Gradient gradient) {
  ScalarField f;
  f.name = std::move(name);
  f.eval = std::move(value);
  f.derivative = [gradient = std::move(gradient)](const Measure& mu, State z) {
    std::vector<double> g(mu.dim());
    gradient(mu, g);
    double avg = 0.0;
    for (std::size_t x = 0; x < g.size(); ++x) avg += g[x] * mu[x];
    return g[z] - avg;
  };
  return f;
}

ScalarField squared_distance(const Measure& target) {
  const std::vector<double> t = target.vec();
  return from_gradient(
      "squared_distance",
      [t](const Measure& mu) {
        if (mu.dim() != t.size()) throw std::invalid_argument("dimension mismatch");
        double s = 0.0;
        for (std::size_t x = 0; x < t.size(); ++x) s += (mu[x] - t[x]) * (mu[x] - t[x]);
        return s;
      },
      [t](const Measure& mu, std::span<double> g) {
        for (std::size_t x = 0; x < t.size(); ++x) g[x] = 2.0 * (mu[x] - t[x]);
      });
}

ScalarField linear(std::vector<double> c) {
  auto coeff = std::make_shared<const std::vector<double>>(std::move(c));
  return from_gradient(
      "linear",
      [coeff](const Measure& mu) {
        if (mu.dim() != coeff->size()) throw std::invalid_argument("dimension mismatch");
        double s = 0.0;
        for (std::size_t x = 0; x < coeff->size(); ++x) s += mu[x] * (*coeff)[x];
        return s;
      },
      [coeff](const Measure&, std::span<double> g) {
        std::copy(coeff->begin(), coeff->end(), g.begin());
      });
}

ScalarField entropy_like(double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("entropy_like needs kappa > 0");
  return from_gradient(
      "entropy_like",
      [kappa](const Measure& mu) {
        double s = 0.0;
        for (std::size_t x = 0; x < mu.dim(); ++x) s += mu[x] * std::log(mu[x] + kappa);
        return s;
      },
      [kappa](const Measure& mu, std::span<double> g) {
        for (std::size_t x = 0; x < mu.dim(); ++x) {
          g[x] = std::log(mu[x] + kappa) + mu[x] / (mu[x] + kappa);
        }
      });
}

ScalarField constant(double c) {
  return from_gradient(
      "constant", [c](const Measure&) { return c; },
      [](const Measure&, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); });
}

ScalarField make(const std::string& name, const std::vector<double>& params,
                 std::size_t d, const std::vector<double>& stationary) {
  if (name == "squared_distance") {
    if (params.empty()) return squared_distance(Measure(stationary));
    if (params.size() != d) throw std::invalid_argument("squared_distance needs d target weights");
    return squared_distance(Measure(params));
  }
  if (name == "linear") {
    if (params.size() != d) throw std::invalid_argument("linear needs d coefficients");
    return linear(params);
  }
  if (name == "entropy_like") {
    if (params.size() != 1) throw std::invalid_argument("entropy_like needs kappa");
    return entropy_like(params[0]);
  }
  if (name == "constant") {
    if (params.size() != 1) throw std::invalid_argument("constant needs one value");
    return constant(params[0]);
  }
  throw std::invalid_argument("unknown observable '" + name + "'");
}

std::vector<std::string> names() {
  return {"squared_distance", "linear", "entropy_like", "constant"};
}

}  // namespace mfchain::observables
