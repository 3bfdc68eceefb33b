#include "mfchain/master_eq.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "mfchain/linearized.hpp"
#include "mfchain/random.hpp"
#include "mfchain/report_io.hpp"

namespace mfchain {

PropagatedObservable::PropagatedObservable(Model model, ScalarField phi,
                                           double step)
    : model_(std::move(model)), phi_(std::move(phi)), step_(step) {
  if (!phi_.eval) throw std::invalid_argument("observable has no evaluator");
  if (!(step_ > 0.0)) throw std::invalid_argument("ODE step must be positive");
}

double PropagatedObservable::value(double t, const Measure& mu) const {
  return phi_(flow_map(model_, mu, t, step_));
}

std::vector<double> PropagatedObservable::functional_derivatives(
    double t, const Measure& mu) const {
  const FlowDerivative fd = flow_with_derivatives(model_, mu, t, step_);
  const std::size_t d = model_.dim();
  std::vector<double> dphi(d);
  for (State y = 0; y < d; ++y) dphi[y] = linear_functional_derivative(phi_, fd.flow, y);
  std::vector<double> out(d, 0.0);
  for (State z = 0; z < d; ++z) {
    for (State y = 0; y < d; ++y) out[z] += dphi[y] * fd.by_state[z][y];
  }
  return out;
}

double PropagatedObservable::functional_derivative(double t, const Measure& mu,
                                                   State z) const {
  if (z >= model_.dim()) throw std::invalid_argument("state out of range");
  if (t == 0.0) return linear_functional_derivative(phi_, mu, z);
  return functional_derivatives(t, mu)[z];
}

double master_residual(const PropagatedObservable& obs, double t,
                       const Measure& mu) {
  if (!(t > 0.0)) throw std::invalid_argument("master residual needs t > 0");
  const double h = std::min(kMasterTimeStep, 0.5 * t);
  auto central = [&](double dt) {
    return (obs.value(t + dt, mu) - obs.value(t - dt, mu)) / (2.0 * dt);
  };
  const double dudt = (4.0 * central(0.5 * h) - central(h)) / 3.0;

  const std::vector<double> drift = kolmogorov_drift(obs.model(), mu.weights());
  const std::vector<double> du = obs.functional_derivatives(t, mu);
  double rhs = 0.0;
  for (std::size_t z = 0; z < du.size(); ++z) rhs += du[z] * drift[z];
  return std::abs(dudt - rhs);
}

double tau_remainder(const PropagatedObservable& obs, double s,
                     const std::vector<State>& config, std::size_t i, State z) {
  const std::size_t d = obs.model().dim();
  const std::size_t n = config.size();
  if (n == 0) throw std::invalid_argument("empty particle configuration");
  if (i >= n) throw std::invalid_argument("particle index out of range");
  if (z >= d) throw std::invalid_argument("state out of range");
  std::vector<double> counts(d, 0.0);
  for (State x : config) {
    if (x >= d) throw std::invalid_argument("particle state out of range");
    counts[x] += 1.0;
  }
  const State x = config[i];
  if (x == z) return 0.0;

  const double inv_n = 1.0 / static_cast<double>(n);
  auto d_xz = [&](double zeta) {
    std::vector<double> w(d);
    for (std::size_t k = 0; k < d; ++k) w[k] = counts[k] * inv_n;
    w[z] += zeta * inv_n;
    w[x] = std::max(0.0, w[x] - zeta * inv_n);
    const std::vector<double> du = obs.functional_derivatives(s, Measure(std::move(w)));
    return du[z] - du[x];
  };

  constexpr std::size_t kNodes = 9;
  const std::vector<double> weights = composite_weights(kNodes);
  const double base = d_xz(0.0);
  double total = 0.0;
  for (std::size_t k = 1; k < kNodes; ++k) {
    const double zeta = static_cast<double>(k) / static_cast<double>(kNodes - 1);
    total += weights[k] * (d_xz(zeta) - base);
  }
  return total;
}

std::vector<ResidualSample> residual_scan(const PropagatedObservable& obs,
                                          std::size_t points, double t_min,
                                          double t_max, std::uint64_t seed) {
  if (!(t_min > 0.0) || t_max < t_min) throw std::invalid_argument("need 0 < t_min <= t_max");
  Rng rng(seed);
  std::vector<ResidualSample> rows;
  rows.reserve(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double t = t_min + (t_max - t_min) * uniform01(rng);
    const Measure mu = random_measure(obs.model().dim(), rng, obs.model().region());
    rows.push_back({t, mu.vec(), master_residual(obs, t, mu)});
  }
  return rows;
}

void write_residual_csv(std::ostream& out, const std::vector<ResidualSample>& rows) {
  const std::size_t d = rows.empty() ? 0 : rows.front().mu.size();
  out << "t";
  for (std::size_t x = 0; x < d; ++x) out << ",mu_" << x + 1;
  out << ",residual\n";
  for (const auto& r : rows) {
    out << format_double(r.t);
    for (double m : r.mu) out << ',' << format_double(m);
    out << ',' << format_double(r.residual) << '\n';
  }
}

}  // namespace mfchain
