#include "mfchain/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mfchain {

namespace {

constexpr double kRowSumTolerance = 1e-12;

}  // namespace

SquareMatrix::SquareMatrix(std::size_t d, std::vector<double> entries)
    : d_(d), a_(std::move(entries)) {
  if (a_.size() != d * d) {
    throw std::invalid_argument("matrix needs d*d entries");
  }
}

std::vector<double> SquareMatrix::left_multiply(std::span<const double> row) const {
  if (row.size() != d_) throw std::invalid_argument("dimension mismatch");
  std::vector<double> out(d_, 0.0);
  for (std::size_t x = 0; x < d_; ++x) {
    const double w = row[x];
    if (w == 0.0) continue;
    for (std::size_t y = 0; y < d_; ++y) out[y] += w * a_[x * d_ + y];
  }
  return out;
}

double SquareMatrix::max_abs_row_sum() const {
  double best = 0.0;
  for (std::size_t x = 0; x < d_; ++x) {
    double s = 0.0;
    for (std::size_t y = 0; y < d_; ++y) s += std::abs(a_[x * d_ + y]);
    best = std::max(best, s);
  }
  return best;
}

RateMatrix::RateMatrix(SquareMatrix m) : m_(std::move(m)) {
  const std::size_t d = m_.dim();
  for (std::size_t x = 0; x < d; ++x) {
    double sum = 0.0;
    double scale = 1.0;
    for (std::size_t y = 0; y < d; ++y) {
      const double v = m_(x, y);
      if (!std::isfinite(v)) throw std::invalid_argument("rate is not finite");
      if (x != y && v < 0.0) {
        std::ostringstream msg;
        msg << "negative rate alpha_" << x + 1 << y + 1 << " = " << v;
        throw std::invalid_argument(msg.str());
      }
      sum += v;
      scale = std::max(scale, std::abs(v));
    }
    if (std::abs(sum) > kRowSumTolerance * scale) {
      std::ostringstream msg;
      msg << "row " << x + 1 << " of the generator sums to " << sum;
      throw std::invalid_argument(msg.str());
    }
  }
}

bool ValidRegion::contains(std::span<const double> mu) const {
  return std::all_of(mu.begin(), mu.end(),
                     [this](double w) { return w >= min_weight; });
}

std::string ValidRegion::describe() const {
  if (min_weight <= 0.0) return "whole simplex";
  std::ostringstream s;
  s << "min_x mu_x >= " << min_weight;
  return s.str();
}

Model::Model(std::string name, std::size_t d, RatesFn rates,
             DerivativeFn derivative, ModelBounds bounds, ValidRegion region)
    : name_(std::move(name)),
      d_(d),
      rates_(std::move(rates)),
      derivative_(std::move(derivative)),
      bounds_(bounds),
      region_(region) {
  if (d_ < 2) throw std::invalid_argument("a model needs d >= 2 states");
  if (!rates_) throw std::invalid_argument("a model needs a rate function");
}

void Model::check_region(std::span<const double> mu, double time) const {
  if (mu.size() != d_) throw std::invalid_argument("dimension mismatch");
  if (region_.contains(mu)) return;
  std::ostringstream msg;
  msg << "model " << name_ << ": measure (";
  for (std::size_t i = 0; i < mu.size(); ++i) msg << (i ? "," : "") << mu[i];
  msg << ") violates " << region_.describe();
  if (time >= 0.0) msg << " at t = " << time;
  throw DomainError(msg.str(), time);
}

RateMatrix Model::rates(const Measure& mu) const {
  check_region(mu.weights());
  SquareMatrix m(d_);
  rates_(mu.weights(), m.entries());
  return RateMatrix(std::move(m));
}

void Model::rate_derivative_into(std::span<const double> mu, State z,
                                 std::span<double> out) const {
  if (derivative_) {
    derivative_(mu, z, out);
    return;
  }
  const std::size_t n = d_ * d_;
  auto map = [this, n](std::span<const double> p) {
    std::vector<double> a(n);
    rates_(p, a);
    return a;
  };
  const std::vector<double> g = chord_derivative(map, mu, z);
  std::copy(g.begin(), g.end(), out.begin());
}

SquareMatrix Model::rate_derivative(const Measure& mu, State z) const {
  check_region(mu.weights());
  if (z >= d_) throw std::invalid_argument("state out of range");
  SquareMatrix m(d_);
  rate_derivative_into(mu.weights(), z, m.entries());
  return m;
}

SquareMatrix Model::fd_rate_derivative(const Measure& mu, State z) const {
  check_region(mu.weights());
  const std::size_t n = d_ * d_;
  auto map = [this, n](std::span<const double> p) {
    std::vector<double> a(n);
    rates_(p, a);
    return a;
  };
  return SquareMatrix(d_, chord_derivative(map, mu.weights(), z));
}

RateMatrix eval_rates(const Model& model, const Measure& mu) {
  return model.rates(mu);
}

SquareMatrix rate_derivative(const Model& model, const Measure& mu, State z) {
  return model.rate_derivative(mu, z);
}

namespace {

struct Poly2 {
  double c2, c1, c0;
  double operator()(double x) const { return (c2 * x + c1) * x + c0; }
  double slope(double x) const { return 2.0 * c2 * x + c1; }
};

// Two states, both rates polynomials in mu1.  The functional derivative of
// g(mu1) toward delta_z is g'(mu1) * ((delta_z)_1 - mu1).
Model two_state_quadratic(std::string name, Poly2 up, Poly2 down,
                          ModelBounds bounds) {
  auto rates = [up, down](std::span<const double> mu, std::span<double> a) {
    const double r12 = up(mu[0]);
    const double r21 = down(mu[0]);
    a[0] = -r12;
    a[1] = r12;
    a[2] = r21;
    a[3] = -r21;
  };
  auto derivative = [up, down](std::span<const double> mu, State z,
                               std::span<double> g) {
    const double dir = (z == 0 ? 1.0 : 0.0) - mu[0];
    const double d12 = up.slope(mu[0]) * dir;
    const double d21 = down.slope(mu[0]) * dir;
    g[0] = -d12;
    g[1] = d12;
    g[2] = d21;
    g[3] = -d21;
  };
  return Model(std::move(name), 2, rates, derivative, bounds);
}

}  // namespace

Model example_non_erg() {
  ModelBounds b;
  b.max_rate = 16.0;
  b.min_rate = 12.0 / 31.0;  // minimum of 31x^2 - 18x + 3 at x = 9/31
  return two_state_quadratic("example_non_erg", {1.0, 1.0, 1.0},
                             {31.0, -18.0, 3.0}, b);
}

Model example_slow_conv() {
  ModelBounds b;
  b.max_rate = 15.0;
  b.min_rate = 119.0 / 120.0;  // minimum of 30x^2 - 19x + 4 at x = 19/60
  return two_state_quadratic("example_slow_conv", {2.0, 1.0, 1.0},
                             {30.0, -19.0, 4.0}, b);
}

Model example_chaos() {
  constexpr double sigma = 10.0;
  constexpr double beta = 8.0 / 3.0;
  constexpr double rho = 28.0;
  constexpr double a = 35.0;
  constexpr double b = 200.0;
  constexpr double ell = 0.1;
  auto rates = [](std::span<const double> mu, std::span<double> q) {
    const double m1 = mu[0], m2 = mu[1], m3 = mu[2], m4 = mu[3];
    auto at = [&q](std::size_t x, std::size_t y) -> double& { return q[x * 4 + y]; };
    at(0, 1) = a + rho + a / (b * m1);
    at(0, 2) = b * m2 + a * (beta + a) / (b * m1);
    at(0, 3) = sigma;
    at(1, 0) = sigma;
    at(1, 2) = ell;
    at(1, 3) = 1.0 + (a * (rho + a) + b * b * m1 * m3) / (b * m2);
    at(2, 0) = ell;
    at(2, 1) = a;
    at(2, 3) = beta + a * (m1 + m2) / m3;
    at(3, 0) = (m1 * (a + rho + b * m2) + a * (1.0 + beta + a) / b) / m4;
    at(3, 1) = sigma * m2 / m4;
    at(3, 2) = a * m3 / m4;
    for (std::size_t x = 0; x < 4; ++x) {
      double s = 0.0;
      for (std::size_t y = 0; y < 4; ++y) {
        if (y != x) s += at(x, y);
      }
      at(x, x) = -s;
    }
  };
  return Model("example_chaos", 4, rates, {}, ModelBounds{}, ValidRegion{0.01});
}

Model weak_interaction(double a, double b, double eps) {
  if (a < 0.0 || b < 0.0 || eps < 0.0) {
    throw std::invalid_argument("weak_interaction needs a, b, eps >= 0");
  }
  auto rates = [a, b, eps](std::span<const double> mu, std::span<double> q) {
    const double r12 = a + eps * mu[1];
    const double r21 = b + eps * mu[1];
    q[0] = -r12;
    q[1] = r12;
    q[2] = r21;
    q[3] = -r21;
  };
  auto derivative = [eps](std::span<const double> mu, State z,
                          std::span<double> g) {
    const double d = eps * ((z == 1 ? 1.0 : 0.0) - mu[1]);
    g[0] = -d;
    g[1] = d;
    g[2] = d;
    g[3] = -d;
  };
  ModelBounds bounds;
  bounds.min_rate = std::min(a, b);
  bounds.max_rate = std::max(a, b) + eps;
  bounds.lipschitz = eps;
  return Model("weak_interaction", 2, rates, derivative, bounds);
}

Model constant(const SquareMatrix& q) {
  const std::size_t d = q.dim();
  SquareMatrix g(d);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t x = 0; x < d; ++x) {
    double s = 0.0;
    for (std::size_t y = 0; y < d; ++y) {
      if (x == y) continue;
      if (q(x, y) < 0.0) throw std::invalid_argument("negative off-diagonal rate");
      g(x, y) = q(x, y);
      s += q(x, y);
      lo = std::min(lo, q(x, y));
      hi = std::max(hi, q(x, y));
    }
    g(x, x) = -s;
  }
  auto rates = [g](std::span<const double>, std::span<double> out) {
    std::copy(g.entries().begin(), g.entries().end(), out.begin());
  };
  auto derivative = [](std::span<const double>, State, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  ModelBounds bounds;
  bounds.min_rate = lo;
  bounds.max_rate = hi;
  bounds.lipschitz = 0.0;
  return Model("constant", d, rates, derivative, bounds);
}

Model constant_symmetric(std::size_t d, double rate) {
  SquareMatrix q(d);
  for (std::size_t x = 0; x < d; ++x)
    for (std::size_t y = 0; y < d; ++y)
      if (x != y) q(x, y) = rate;
  return constant(q);
}

Model zero_model(std::size_t d) { return constant(SquareMatrix(d)); }

ModelRegistry& ModelRegistry::instance() {
  static ModelRegistry registry;
  return registry;
}

namespace {

void need(const std::vector<double>& p, std::size_t n, const char* name) {
  if (p.size() != n) {
    std::ostringstream msg;
    msg << name << " expects " << n << " parameter(s), got " << p.size();
    throw std::invalid_argument(msg.str());
  }
}

std::size_t as_dim(double v) {
  if (v < 2.0 || v != std::floor(v)) throw std::invalid_argument("d must be an integer >= 2");
  return static_cast<std::size_t>(v);
}

}  // namespace

ModelRegistry::ModelRegistry() {
  add("example_non_erg",
      [](const std::vector<double>& p) { need(p, 0, "example_non_erg"); return example_non_erg(); },
      "no parameters");
  add("example_slow_conv",
      [](const std::vector<double>& p) { need(p, 0, "example_slow_conv"); return example_slow_conv(); },
      "no parameters");
  add("example_chaos",
      [](const std::vector<double>& p) { need(p, 0, "example_chaos"); return example_chaos(); },
      "no parameters");
  add("weak_interaction",
      [](const std::vector<double>& p) {
        need(p, 3, "weak_interaction");
        return weak_interaction(p[0], p[1], p[2]);
      },
      "a,b,eps");
  add("constant",
      [](const std::vector<double>& p) {
        if (p.empty()) throw std::invalid_argument("constant expects d followed by d*d rates");
        const std::size_t d = as_dim(p[0]);
        need(p, 1 + d * d, "constant");
        return constant(SquareMatrix(d, std::vector<double>(p.begin() + 1, p.end())));
      },
      "d,q11,q12,...,qdd (diagonal ignored)");
  add("constant_symmetric",
      [](const std::vector<double>& p) {
        need(p, 2, "constant_symmetric");
        return constant_symmetric(as_dim(p[0]), p[1]);
      },
      "d,rate");
  add("zero",
      [](const std::vector<double>& p) {
        need(p, 1, "zero");
        return zero_model(as_dim(p[0]));
      },
      "d");
}

void ModelRegistry::add(const std::string& name, Factory factory,
                        std::string usage) {
  entries_[name] = {std::move(factory), std::move(usage)};
}

Model ModelRegistry::make(const std::string& name,
                          const std::vector<double>& params) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw std::invalid_argument("unknown model '" + name + "'");
  }
  return it->second.first(params);
}

bool ModelRegistry::contains(const std::string& name) const {
  return entries_.count(name) != 0;
}

std::vector<std::string> ModelRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::string ModelRegistry::usage(const std::string& name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? std::string() : it->second.second;
}

Model make_model(const std::string& name, const std::vector<double>& params) {
  return ModelRegistry::instance().make(name, params);
}

Measure random_measure(std::size_t d, Rng& rng, const ValidRegion& region) {
  if (region.min_weight * static_cast<double>(d) >= 1.0) {
    throw std::invalid_argument("valid region is empty");
  }
  std::vector<double> w(d);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    double s = 0.0;
    for (double& x : w) {
      x = -std::log1p(-uniform01(rng));
      s += x;
    }
    for (double& x : w) x /= s;
    // Exact renormalization keeps the sum within the Measure tolerance.
    double t = 0.0;
    for (std::size_t i = 0; i + 1 < d; ++i) t += w[i];
    w[d - 1] = std::max(0.0, 1.0 - t);
    if (region.contains(w)) return Measure(w);
  }
  throw std::runtime_error("could not sample the valid region");
}

SampledBounds sample_rate_bounds(const Model& model, std::size_t samples,
                                 std::uint64_t seed) {
  const std::size_t d = model.dim();
  Rng rng(seed);
  SampledBounds out;
  out.min_rate = std::numeric_limits<double>::infinity();
  std::vector<double> a(d * d);
  for (std::size_t s = 0; s < samples; ++s) {
    const Measure mu = s == 0 ? Measure::barycenter(d) : random_measure(d, rng, model.region());
    model.rates_into(mu.weights(), a);
    for (std::size_t x = 0; x < d; ++x) {
      for (std::size_t y = 0; y < d; ++y) {
        if (x == y) continue;
        const double v = a[x * d + y];
        out.max_rate = std::max(out.max_rate, std::abs(v));
        if (v < out.min_rate) {
          out.min_rate = v;
          out.argmin_point = mu.vec();
          out.argmin_x = x;
          out.argmin_y = y;
        }
      }
    }
  }
  return out;
}

LipschitzEstimate estimate_lipschitz(const Model& model, std::size_t pairs,
                                     std::uint64_t seed) {
  const std::size_t d = model.dim();
  Rng rng(seed);
  LipschitzEstimate out;
  std::vector<double> a(d * d), b(d * d);
  for (std::size_t s = 0; s < pairs; ++s) {
    const Measure mu = random_measure(d, rng, model.region());
    Measure other = random_measure(d, rng, model.region());
    if (s % 2 == 1) other = mix(mu, other, 1e-2);
    if (!model.region().contains(other.weights())) continue;
    const double dist = l1_distance(mu, other);
    if (dist < 1e-12) continue;
    model.rates_into(mu.weights(), a);
    model.rates_into(other.weights(), b);
    double worst = 0.0;
    for (std::size_t x = 0; x < d; ++x) {
      double row = 0.0;
      for (std::size_t y = 0; y < d; ++y) row += std::abs(a[x * d + y] - b[x * d + y]);
      worst = std::max(worst, row);
    }
    const double ratio = worst / dist;
    if (ratio > out.value) {
      out.value = ratio;
      out.witness_a = mu.vec();
      out.witness_b = other.vec();
    }
  }
  return out;
}

}  // namespace mfchain
