#include "mfchain/linearized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "mfchain/rk4.hpp"
#include "mfchain/stats.hpp"

namespace mfchain {

SourceTerm SourceTerm::zero() { return {}; }

SourceTerm SourceTerm::constant(const TangentVector& v) {
  SourceTerm s;
  std::vector<double> e = v.vec();
  s.eval = [e](double, std::span<double> out) { std::copy(e.begin(), e.end(), out.begin()); };
  s.bound = l1_norm(e);
  return s;
}

SourceTerm SourceTerm::sinusoidal(const TangentVector& v, double omega,
                                  double phase) {
  SourceTerm s;
  std::vector<double> e = v.vec();
  s.eval = [e, omega, phase](double t, std::span<double> out) {
    const double f = std::sin(omega * t + phase);
    for (std::size_t i = 0; i < e.size(); ++i) out[i] = f * e[i];
  };
  s.bound = l1_norm(e);
  return s;
}

SourceTerm SourceTerm::piecewise_constant(std::vector<TangentVector> levels,
                                          double hold) {
  if (levels.empty() || !(hold > 0.0)) {
    throw std::invalid_argument("piecewise source needs levels and hold > 0");
  }
  SourceTerm s;
  for (const auto& l : levels) s.bound = std::max(s.bound, l1_norm(l.entries()));
  s.eval = [levels = std::move(levels), hold](double t, std::span<double> out) {
    const auto k = static_cast<std::size_t>(std::floor(t / hold)) % levels.size();
    const auto& e = levels[k].vec();
    std::copy(e.begin(), e.end(), out.begin());
  };
  return s;
}

TangentVector SourceTerm::at(double t, std::size_t d) const {
  std::vector<double> v(d, 0.0);
  if (eval) eval(t, v);
  return TangentVector(std::move(v));
}

namespace {

// A = G + alpha with G[x][y] = sum_z eta_z D_x[z][y].  d_buf holds d*d scratch.
void generator_into(const Model& model, std::span<const double> eta,
                    std::span<double> a, std::span<double> d_buf) {
  const std::size_t d = model.dim();
  model.rates_into(eta, a);
  for (State x = 0; x < d; ++x) {
    model.rate_derivative_into(eta, x, d_buf);
    for (std::size_t y = 0; y < d; ++y) {
      double g = 0.0;
      for (std::size_t z = 0; z < d; ++z) g += eta[z] * d_buf[z * d + y];
      a[x * d + y] += g;
    }
  }
}

TangentVector project_tangent(std::span<const double> q) {
  std::vector<double> v(q.begin(), q.end());
  double s = 0.0;
  for (double x : v) s += x;
  const double shift = s / static_cast<double>(v.size());
  for (double& x : v) x -= shift;
  return TangentVector(std::move(v));
}

// Co-integrates the base flow m and k tangent vectors in one RK4 state
// [m, q_1, ..., q_k].  The source, if any, drives q_1 only.
class TangentFlow {
 public:
  TangentFlow(const Model& model, std::size_t k, const SourceTerm* source)
      : model_(model),
        d_(model.dim()),
        k_(k),
        source_(source),
        rk_(d_ * (1 + k)),
        rates_(d_ * d_),
        a_(d_ * d_),
        dbuf_(d_ * d_),
        r_(d_) {}

  void advance(std::vector<double>& y, double t0, double t1, double step) {
    const std::size_t n = detail::substeps(t1 - t0, step);
    const double h = (t1 - t0) / static_cast<double>(n);
    auto system = [this](double t, std::span<const double> s, std::span<double> ds) {
      const auto m = s.first(d_);
      model_.rates_into(m, rates_);
      std::copy(rates_.begin(), rates_.end(), a_.begin());
      for (State x = 0; x < d_; ++x) {
        model_.rate_derivative_into(m, x, dbuf_);
        for (std::size_t yy = 0; yy < d_; ++yy) {
          double g = 0.0;
          for (std::size_t z = 0; z < d_; ++z) g += m[z] * dbuf_[z * d_ + yy];
          a_[x * d_ + yy] += g;
        }
      }
      std::fill(ds.begin(), ds.end(), 0.0);
      for (std::size_t x = 0; x < d_; ++x) {
        const double w = m[x];
        for (std::size_t z = 0; z < d_; ++z) ds[z] += w * rates_[x * d_ + z];
      }
      for (std::size_t j = 0; j < k_; ++j) {
        const auto q = s.subspan(d_ * (j + 1), d_);
        auto dq = ds.subspan(d_ * (j + 1), d_);
        for (std::size_t x = 0; x < d_; ++x) {
          const double w = q[x];
          if (w == 0.0) continue;
          for (std::size_t z = 0; z < d_; ++z) dq[z] += w * a_[x * d_ + z];
        }
      }
      if (source_ != nullptr && !source_->is_zero() && k_ > 0) {
        source_->eval(t, r_);
        auto dq = ds.subspan(d_, d_);
        for (std::size_t z = 0; z < d_; ++z) dq[z] += r_[z];
      }
    };
    for (std::size_t j = 0; j < n; ++j) {
      rk_.step(system, y, t0 + static_cast<double>(j) * h, h);
      const double t = j + 1 == n ? t1 : t0 + static_cast<double>(j + 1) * h;
      detail::clip_and_renormalize(std::span<double>(y).first(d_), t);
      model_.check_region(std::span<const double>(y).first(d_), t);
      for (double v : std::span<const double>(y).subspan(d_)) {
        if (!std::isfinite(v)) throw IntegrationError("tangent state is not finite", t);
      }
    }
  }

 private:
  const Model& model_;
  std::size_t d_;
  std::size_t k_;
  const SourceTerm* source_;
  Rk4Stepper rk_;
  std::vector<double> rates_, a_, dbuf_, r_;
};

void check_base(const Model& model, const Measure& mu, double step) {
  if (mu.dim() != model.dim()) throw std::invalid_argument("dimension mismatch");
  if (!(step > 0.0)) throw std::invalid_argument("ODE step must be positive");
  model.check_region(mu.weights(), 0.0);
}

}  // namespace

SquareMatrix linearized_generator(const Model& model, const Measure& eta) {
  model.check_region(eta.weights());
  const std::size_t d = model.dim();
  SquareMatrix a(d);
  std::vector<double> buf(d * d);
  generator_into(model, eta.weights(), a.entries(), buf);
  return a;
}

SquareMatrix proof_matrix(const Model& model, const Measure& mu, double t,
                          double step) {
  return linearized_generator(model, flow_map(model, mu, t, step));
}

TangentVector apply_L(const Model& model, const Measure& eta,
                      const TangentVector& q) {
  model.check_region(eta.weights());
  const std::size_t d = model.dim();
  if (q.dim() != d) throw std::invalid_argument("dimension mismatch");
  // B = sum_z d alpha/dm(eta, z) q_z.
  SquareMatrix b(d);
  std::vector<double> g(d * d);
  for (State z = 0; z < d; ++z) {
    if (q[z] == 0.0) continue;
    model.rate_derivative_into(eta.weights(), z, g);
    for (std::size_t i = 0; i < d * d; ++i) b.entries()[i] += q[z] * g[i];
  }
  std::vector<double> out = b.left_multiply(eta.weights());
  const std::vector<double> qa = model.rates(eta).left_multiply(q.entries());
  for (std::size_t y = 0; y < d; ++y) out[y] += qa[y];
  return project_tangent(out);
}

TangentPath solve_linear_cauchy(const Model& model, const Measure& mu,
                                const TangentVector& q0, const SourceTerm& r,
                                const TimeGrid& grid, double step) {
  check_base(model, mu, step);
  const std::size_t d = model.dim();
  if (q0.dim() != d) throw std::invalid_argument("dimension mismatch");
  if (grid.size() > 1 && step > grid.min_spacing() * (1.0 + 1e-12)) {
    throw std::invalid_argument("ODE step exceeds the grid spacing");
  }
  TangentFlow flow(model, 1, &r);
  std::vector<double> y(2 * d);
  std::copy(mu.vec().begin(), mu.vec().end(), y.begin());
  std::copy(q0.vec().begin(), q0.vec().end(), y.begin() + static_cast<std::ptrdiff_t>(d));
  TangentPath path{grid, {}};
  path.values.reserve(grid.size());
  path.values.push_back(q0);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    flow.advance(y, grid[k - 1], grid[k], step);
    path.values.push_back(project_tangent(std::span<const double>(y).subspan(d)));
  }
  return path;
}

TangentPath m1(const Model& model, const Measure& mu, const Measure& nu,
               const TimeGrid& grid, double step) {
  return solve_linear_cauchy(model, mu, TangentVector::difference(nu, mu),
                             SourceTerm::zero(), grid, step);
}

TangentPath dm_dmeasure(const Model& model, const Measure& mu, State z,
                        const TimeGrid& grid, double step) {
  if (z >= model.dim()) throw std::invalid_argument("state out of range");
  return m1(model, mu, Measure::dirac(model.dim(), z), grid, step);
}

FlowDerivative flow_with_derivatives(const Model& model, const Measure& mu,
                                     double t, double step) {
  check_base(model, mu, step);
  if (t < 0.0) throw std::invalid_argument("time must be >= 0");
  const std::size_t d = model.dim();
  std::vector<double> y(d * (1 + d));
  std::copy(mu.vec().begin(), mu.vec().end(), y.begin());
  for (State z = 0; z < d; ++z) {
    for (std::size_t x = 0; x < d; ++x) {
      y[d * (z + 1) + x] = (x == z ? 1.0 : 0.0) - mu[x];
    }
  }
  if (t > 0.0) {
    TangentFlow flow(model, d, nullptr);
    flow.advance(y, 0.0, t, step);
  }
  FlowDerivative out{Measure(std::vector<double>(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(d))), {}};
  out.by_state.reserve(d);
  for (State z = 0; z < d; ++z) {
    out.by_state.push_back(project_tangent(std::span<const double>(y).subspan(d * (z + 1), d)));
  }
  return out;
}

namespace {

TangentVector random_unit_tangent(std::size_t d, Rng& rng) {
  std::vector<double> v(d);
  for (;;) {
    double s = 0.0;
    for (double& x : v) {
      x = 2.0 * uniform01(rng) - 1.0;
      s += x;
    }
    for (double& x : v) x -= s / static_cast<double>(d);
    const double n = l1_norm(v);
    if (n > 1e-3) {
      for (double& x : v) x /= n;
      return project_tangent(v);
    }
  }
}

// Fits log(values) against times, skipping entries below floor.
std::optional<LineFit> fit_log_tail(const std::vector<double>& times,
                                    const std::vector<double>& values, double floor) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (values[i] > floor && std::isfinite(values[i])) {
      xs.push_back(times[i]);
      ys.push_back(std::log(values[i]));
    }
  }
  if (xs.size() < 3) return std::nullopt;
  return fit_line(xs, ys);
}

DecayEstimate summarize(DecayEstimate est, std::size_t degenerate) {
  if (est.sample_rates.empty()) {
    est.rate = 0.0;
    est.c2 = 0.0;
    est.decaying = false;
    est.message = "degenerate fit: no usable samples";
    return est;
  }
  est.rate = *std::min_element(est.sample_rates.begin(), est.sample_rates.end());
  est.c2 = std::exp(*std::max_element(est.sample_intercepts.begin(),
                                      est.sample_intercepts.end()));
  est.decaying = est.rate > 1e-10;
  std::ostringstream msg;
  msg << (est.decaying ? "exponential decay detected" : "no exponential decay detected");
  if (degenerate > 0) msg << "; " << degenerate << " degenerate sample(s) skipped";
  est.message = msg.str();
  return est;
}

}  // namespace

DecayEstimate estimate_decay(
    const Model& model, const std::vector<std::pair<Measure, TangentVector>>& starts,
    double horizon, const DecayOptions& opt) {
  if (starts.empty()) throw std::invalid_argument("estimate_decay needs samples >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  const std::size_t n = std::max<std::size_t>(opt.fit_points, 3);
  const double spacing = 0.5 * horizon / static_cast<double>(n - 1);
  const TimeGrid grid = TimeGrid::uniform(horizon, spacing);
  const double step = std::min(opt.step, grid.min_spacing());

  DecayEstimate est;
  std::size_t degenerate = 0;
  for (const auto& [mu, q0] : starts) {
    const TangentPath path = solve_linear_cauchy(model, mu, q0, SourceTerm::zero(), grid, step);
    std::vector<double> times, norms;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (grid[k] + 1e-12 < 0.5 * horizon) continue;
      times.push_back(grid[k]);
      norms.push_back(l1_norm(path.values[k].entries()));
    }
    const auto fit = fit_log_tail(times, norms, 0.0);
    if (!fit) {
      ++degenerate;
      continue;
    }
    est.sample_rates.push_back(-fit->slope);
    est.sample_intercepts.push_back(fit->intercept);
  }
  return summarize(std::move(est), degenerate);
}

DecayEstimate estimate_decay(const Model& model, std::size_t samples,
                             double horizon, const DecayOptions& opt) {
  if (samples < 1) throw std::invalid_argument("estimate_decay needs samples >= 1");
  Rng rng(opt.seed);
  std::vector<std::pair<Measure, TangentVector>> starts;
  starts.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    Measure mu = random_measure(model.dim(), rng, model.region());
    starts.emplace_back(std::move(mu), random_unit_tangent(model.dim(), rng));
  }
  return estimate_decay(model, starts, horizon, opt);
}

DecayEstimate estimate_nonlinear_contraction(const Model& model,
                                             std::size_t samples, double horizon,
                                             const DecayOptions& opt) {
  if (samples < 1) throw std::invalid_argument("need samples >= 1");
  const std::size_t n = std::max<std::size_t>(opt.fit_points, 3);
  const TimeGrid grid = TimeGrid::uniform(horizon, 0.5 * horizon / static_cast<double>(n - 1));
  const double step = std::min(opt.step, grid.min_spacing());
  Rng rng(opt.seed);
  DecayEstimate est;
  std::size_t degenerate = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Measure a = random_measure(model.dim(), rng, model.region());
    const Measure b = random_measure(model.dim(), rng, model.region());
    const Trajectory ta = solve_kolmogorov(model, a, grid, step);
    const Trajectory tb = solve_kolmogorov(model, b, grid, step);
    std::vector<double> times, gaps;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (grid[k] + 1e-12 < 0.5 * horizon) continue;
      times.push_back(grid[k]);
      gaps.push_back(l1_distance(ta.states[k], tb.states[k]));
    }
    const auto fit = fit_log_tail(times, gaps, 1e-12);
    if (!fit) {
      ++degenerate;
      continue;
    }
    est.sample_rates.push_back(-fit->slope);
    est.sample_intercepts.push_back(fit->intercept);
  }
  return summarize(std::move(est), degenerate);
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

ErgodicityReport check_condition1(const Model& model) {
  const std::size_t d = model.dim();
  ErgodicityReport rep;
  rep.condition = 1;
  rep.witness_mu = Measure::barycenter(d).vec();
  rep.witness_x = 0;
  rep.witness_y = 1;

  double L = 0.0;
  if (model.bounds().min_rate) {
    L = *model.bounds().min_rate;
  } else {
    const SampledBounds sb = sample_rate_bounds(model, 10000);
    L = sb.min_rate;
    rep.witness_mu = sb.argmin_point;
    rep.witness_x = sb.argmin_x;
    rep.witness_y = sb.argmin_y;
    rep.estimated = true;
  }
  double K = 0.0;
  if (model.bounds().lipschitz) {
    K = *model.bounds().lipschitz;
  } else {
    const LipschitzEstimate le = estimate_lipschitz(model);
    K = le.value;
    if (!le.witness_a.empty()) rep.witness_mu = le.witness_a;
    rep.estimated = true;
  }
  rep.constants.L = L;
  rep.constants.K = K;
  rep.margin = L / static_cast<double>(d) - K;
  rep.verdict = rep.margin > 0.0 ? Verdict::Pass : Verdict::Fail;
  rep.label = rep.estimated ? "estimated constants" : "declared constants";
  return rep;
}

namespace {

struct PointMargins {
  std::vector<double> margin;  // d*d, diagonal unused
};

PointMargins margins_at(const Model& model, std::span<const double> mu,
                        std::vector<std::vector<double>>& deriv,
                        std::vector<double>& rates) {
  const std::size_t d = model.dim();
  for (State x = 0; x < d; ++x) model.rate_derivative_into(mu, x, deriv[x]);
  model.rates_into(mu, rates);
  PointMargins pm{std::vector<double>(d * d, 0.0)};
  for (State x = 0; x < d; ++x) {
    for (State y = 0; y < d; ++y) {
      if (x == y) continue;
      // sum_{z,w} mu_z mu_w (D_x[z][y] - D_w[z][y]),  D^m_{wx} = delta_x - delta_w.
      double s = 0.0;
      for (std::size_t z = 0; z < d; ++z) {
        double inner = 0.0;
        for (std::size_t w = 0; w < d; ++w) {
          inner += mu[w] * (deriv[x][z * d + y] - deriv[w][z * d + y]);
        }
        s += mu[z] * inner;
      }
      pm.margin[x * d + y] = s + rates[x * d + y];
    }
  }
  return pm;
}

void compositions(std::size_t d, std::size_t total, std::vector<std::size_t>& cur,
                  std::vector<std::vector<std::size_t>>& out) {
  if (cur.size() + 1 == d) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (std::size_t k = 0; k <= total; ++k) {
    cur.push_back(total - k);
    compositions(d, k, cur, out);
    cur.pop_back();
  }
}

std::vector<std::vector<std::size_t>> lattice_counts(std::size_t d, std::size_t res) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  compositions(d, res, cur, out);
  return out;
}

Measure lattice_measure(const std::vector<std::size_t>& counts, std::size_t res) {
  std::vector<double> w(counts.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = static_cast<double>(counts[i]) / static_cast<double>(res);
  }
  return Measure(std::move(w));
}

}  // namespace

std::vector<Measure> simplex_lattice(std::size_t d, std::size_t resolution) {
  std::vector<Measure> out;
  for (const auto& c : lattice_counts(d, resolution)) out.push_back(lattice_measure(c, resolution));
  return out;
}

std::size_t default_lattice_resolution(std::size_t d) {
  if (d <= 3) return 50;
  if (d <= 6) return 15;
  return 8;
}

double condition2_margin(const Model& model, const Measure& mu, State x, State y) {
  model.check_region(mu.weights());
  const std::size_t d = model.dim();
  if (x >= d || y >= d || x == y) throw std::invalid_argument("need x != y in [d]");
  std::vector<std::vector<double>> deriv(d, std::vector<double>(d * d));
  std::vector<double> rates(d * d);
  return margins_at(model, mu.weights(), deriv, rates).margin[x * d + y];
}

ErgodicityReport check_condition2(const Model& model, std::size_t resolution) {
  if (resolution < 2) throw std::invalid_argument("lattice resolution must be >= 2");
  const std::size_t d = model.dim();
  ErgodicityReport rep;
  rep.condition = 2;
  rep.resolution = resolution;
  rep.estimated = !model.has_analytic_derivative();

  const auto lattice = lattice_counts(d, resolution);
  std::map<std::vector<std::size_t>, std::vector<double>> margins;
  std::vector<std::vector<double>> deriv(d, std::vector<double>(d * d));
  std::vector<double> rates(d * d);

  double best = std::numeric_limits<double>::infinity();
  for (const auto& counts : lattice) {
    const Measure mu = lattice_measure(counts, resolution);
    if (!model.region().contains(mu.weights())) continue;
    ++rep.points_checked;
    PointMargins pm = margins_at(model, mu.weights(), deriv, rates);
    for (State x = 0; x < d; ++x) {
      for (State y = 0; y < d; ++y) {
        if (x == y) continue;
        const double m = pm.margin[x * d + y];
        // Ties within 1e-12 keep the first witness in lattice order.
        if (m < best - 1e-12) {
          best = m;
          rep.witness_mu = mu.vec();
          rep.witness_x = x;
          rep.witness_y = y;
        }
      }
    }
    margins.emplace(counts, std::move(pm.margin));
  }

  // Sampled modulus of continuity over unit lattice moves.
  for (const auto& [counts, m] : margins) {
    for (std::size_t i = 0; i < d; ++i) {
      if (counts[i] == 0) continue;
      for (std::size_t j = 0; j < d; ++j) {
        if (i == j) continue;
        std::vector<std::size_t> nb = counts;
        --nb[i];
        ++nb[j];
        auto it = margins.find(nb);
        if (it == margins.end()) continue;
        for (std::size_t e = 0; e < d * d; ++e) {
          rep.modulus = std::max(rep.modulus, std::abs(m[e] - it->second[e]));
        }
      }
    }
  }

  if (rep.points_checked == 0) {
    rep.verdict = Verdict::Inconclusive;
    rep.label = "no lattice point inside the valid region";
    return rep;
  }
  rep.margin = best;
  rep.verdict = best > 0.0 ? Verdict::Pass : Verdict::Fail;
  rep.label = rep.verdict == Verdict::Pass ? "grid-certified only" : "violated at witness";
  return rep;
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const ErgodicityReport& r) {
  nlohmann::json j;
  j["condition"] = r.condition;
  j["verdict"] = to_string(r.verdict);
  j["margin"] = r.margin;
  j["witness"] = {{"mu", r.witness_mu},
                  {"x", r.witness_x + 1},
                  {"y", r.witness_y + 1}};
  j["resolution"] = r.resolution;
  j["estimated_constants"] = {{"L", opt_json(r.constants.L)},
                              {"K", opt_json(r.constants.K)},
                              {"lambda", opt_json(r.constants.lambda)},
                              {"c2", opt_json(r.constants.c2)}};
  j["estimated"] = r.estimated;
  j["label"] = r.label;
  j["modulus"] = r.modulus;
  j["points_checked"] = r.points_checked;
  return j;
}

nlohmann::json to_json(const DecayEstimate& e) {
  return {{"lambda", e.rate},
          {"c2", e.c2},
          {"decaying", e.decaying},
          {"message", e.message},
          {"samples", e.sample_rates.size()}};
}

}  // namespace mfchain
