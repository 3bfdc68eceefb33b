#include "mfchain/kolmogorov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "mfchain/report_io.hpp"
#include "mfchain/rk4.hpp"

namespace mfchain {

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.empty() || times_.front() != 0.0) {
    throw std::invalid_argument("time grid must start at 0");
  }
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i])) throw std::invalid_argument("time grid is not finite");
    if (i > 0 && !(times_[i] > times_[i - 1])) {
      throw std::invalid_argument("time grid must be strictly increasing");
    }
  }
}

TimeGrid TimeGrid::uniform(double horizon, double spacing) {
  if (!(horizon > 0.0) || !(spacing > 0.0)) {
    throw std::invalid_argument("horizon and spacing must be positive");
  }
  const auto n = static_cast<std::size_t>(std::floor(horizon / spacing + 1e-9));
  std::vector<double> t;
  t.reserve(n + 2);
  for (std::size_t k = 0; k <= n; ++k) t.push_back(static_cast<double>(k) * spacing);
  if (horizon - t.back() > 1e-9 * horizon) {
    t.push_back(horizon);
  } else {
    t.back() = horizon;
  }
  return TimeGrid(std::move(t));
}

double TimeGrid::min_spacing() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < times_.size(); ++i) {
    m = std::min(m, times_[i] - times_[i - 1]);
  }
  return m;
}

namespace detail {

double clip_and_renormalize(std::span<double> m, double time) {
  double clip = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    double& v = m[i];
    if (!std::isfinite(v)) {
      throw IntegrationError("Kolmogorov state is not finite", time);
    }
    if (v < 0.0) {
      if (v < -kClipLimit) {
        std::ostringstream msg;
        msg << "component " << i + 1 << " fell to " << v << " at t = " << time
            << "; reduce the ODE step";
        throw IntegrationError(msg.str(), time);
      }
      clip = std::max(clip, -v);
      v = 0.0;
    }
    sum += v;
  }
  for (double& v : m) v /= sum;
  return clip;
}

std::size_t substeps(double interval, double step) {
  const double n = std::ceil(interval / step - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

}  // namespace detail

namespace {

class FlowIntegrator {
 public:
  explicit FlowIntegrator(const Model& model)
      : model_(model), d_(model.dim()), rk_(d_), rates_(d_ * d_) {}

  /// Advances y from t0 to t1 in equal substeps no longer than step.
  void advance(std::vector<double>& y, double t0, double t1, double step) {
    const std::size_t n = detail::substeps(t1 - t0, step);
    const double h = (t1 - t0) / static_cast<double>(n);
    auto system = [this](double, std::span<const double> m, std::span<double> dm) {
      model_.rates_into(m, rates_);
      std::fill(dm.begin(), dm.end(), 0.0);
      for (std::size_t x = 0; x < d_; ++x) {
        const double w = m[x];
        for (std::size_t z = 0; z < d_; ++z) dm[z] += w * rates_[x * d_ + z];
      }
    };
    for (std::size_t j = 0; j < n; ++j) {
      rk_.step(system, y, t0 + static_cast<double>(j) * h, h);
      const double t = j + 1 == n ? t1 : t0 + static_cast<double>(j + 1) * h;
      max_clip_ = std::max(max_clip_, detail::clip_and_renormalize(y, t));
      model_.check_region(y, t);
    }
  }

  double max_clip() const { return max_clip_; }

 private:
  const Model& model_;
  std::size_t d_;
  Rk4Stepper rk_;
  std::vector<double> rates_;
  double max_clip_ = 0.0;
};

void check_inputs(const Model& model, const Measure& mu, double step) {
  if (mu.dim() != model.dim()) throw std::invalid_argument("dimension mismatch");
  if (!(step > 0.0)) throw std::invalid_argument("ODE step must be positive");
  model.check_region(mu.weights(), 0.0);
}

}  // namespace

Trajectory solve_kolmogorov(const Model& model, const Measure& mu0,
                            const TimeGrid& grid, double step) {
  check_inputs(model, mu0, step);
  if (grid.size() > 1 && step > grid.min_spacing() * (1.0 + 1e-12)) {
    throw std::invalid_argument("ODE step exceeds the grid spacing");
  }
  FlowIntegrator flow(model);
  std::vector<double> y = mu0.vec();
  Trajectory traj{grid, {}, 0.0};
  traj.states.reserve(grid.size());
  traj.states.push_back(mu0);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    flow.advance(y, grid[k - 1], grid[k], step);
    traj.states.emplace_back(y);
  }
  traj.max_clip = flow.max_clip();
  return traj;
}

Measure flow_map(const Model& model, const Measure& mu, double t, double step) {
  check_inputs(model, mu, step);
  if (t < 0.0) throw std::invalid_argument("flow_map needs t >= 0");
  if (t == 0.0) return mu;
  FlowIntegrator flow(model);
  std::vector<double> y = mu.vec();
  flow.advance(y, 0.0, t, step);
  return Measure(std::move(y));
}

std::vector<double> kolmogorov_drift(const Model& model,
                                     std::span<const double> mu) {
  const std::size_t d = model.dim();
  std::vector<double> a(d * d);
  model.rates_into(mu, a);
  std::vector<double> out(d, 0.0);
  for (std::size_t x = 0; x < d; ++x)
    for (std::size_t z = 0; z < d; ++z) out[z] += mu[x] * a[x * d + z];
  return out;
}

StationaryResult stationary_distribution(const Model& model, double tol,
                                         double max_time, double step) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const std::size_t d = model.dim();
  StationaryResult res;
  std::vector<double> y = Measure::barycenter(d).vec();
  model.check_region(y, 0.0);

  FlowIntegrator flow(model);
  double t = 0.0;
  bool contracted = false;
  while (t < max_time) {
    const std::vector<double> prev = y;
    flow.advance(y, t, t + 1.0, step);
    t += 1.0;
    if (l1_distance(prev, y) < tol) {
      contracted = true;
      break;
    }
  }
  res.integration_time = t;

  // Damped uniformized fixed point: nu <- nu + theta * nu alpha(nu) / Lambda.
  constexpr double kDamping = 0.5;
  constexpr std::size_t kMaxPolish = 10000;
  std::vector<double> a(d * d);
  for (; res.polish_iterations < kMaxPolish; ++res.polish_iterations) {
    model.rates_into(y, a);
    double lambda = 0.0;
    for (std::size_t x = 0; x < d; ++x) lambda = std::max(lambda, std::abs(a[x * d + x]));
    const std::vector<double> drift = kolmogorov_drift(model, y);
    res.residual = l1_norm(drift);
    if (res.residual <= tol || lambda == 0.0) break;
    for (std::size_t z = 0; z < d; ++z) y[z] += kDamping * drift[z] / lambda;
    detail::clip_and_renormalize(y, t);
    if (!model.region().contains(y)) break;
  }
  res.residual = l1_norm(kolmogorov_drift(model, y));
  res.weights = y;
  res.converged = contracted && res.residual <= 10.0 * tol;
  if (!contracted) {
    std::ostringstream msg;
    msg << "no contraction below " << tol << " within t = " << max_time;
    res.message = msg.str();
  } else if (!res.converged) {
    std::ostringstream msg;
    msg << "polish stalled at residual " << res.residual;
    res.message = msg.str();
  } else {
    res.message = "converged";
  }
  return res;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const std::size_t d = traj.states.empty() ? 0 : traj.states.front().dim();
  out << "t";
  for (std::size_t x = 0; x < d; ++x) out << ",m_" << x + 1;
  out << '\n';
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << format_double(traj.grid[k]);
    for (std::size_t x = 0; x < d; ++x) out << ',' << format_double(traj.states[k][x]);
    out << '\n';
  }
}

}  // namespace mfchain
