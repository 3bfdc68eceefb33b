#include "mfchain/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mfchain {

namespace {

void require_same_dim(std::size_t a, std::size_t b) {
  if (a != b) {
    std::ostringstream msg;
    msg << "dimension mismatch: " << a << " vs " << b;
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

Measure::Measure(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.size() < 2) {
    throw std::invalid_argument("a measure needs at least two states");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double w = weights_[i];
    if (!(w >= 0.0) || !std::isfinite(w)) {
      std::ostringstream msg;
      msg << "measure weight " << i + 1 << " is " << w << "; must be >= 0";
      throw std::invalid_argument(msg.str());
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kSimplexSumTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "measure weights sum to " << sum << ", not 1";
    throw std::invalid_argument(msg.str());
  }
}

Measure Measure::dirac(std::size_t d, State z) {
  if (z >= d) throw std::invalid_argument("dirac: state out of range");
  std::vector<double> w(d, 0.0);
  w[z] = 1.0;
  return Measure(std::move(w));
}

Measure Measure::barycenter(std::size_t d) {
  return Measure(std::vector<double>(d, 1.0 / static_cast<double>(d)));
}

TangentVector::TangentVector(std::vector<double> entries)
    : entries_(std::move(entries)) {
  double sum = 0.0;
  double norm = 0.0;
  for (double v : entries_) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("tangent vector entry is not finite");
    }
    sum += v;
    norm += std::abs(v);
  }
  if (std::abs(sum) > kSimplexSumTolerance * std::max(1.0, norm)) {
    std::ostringstream msg;
    msg << "tangent vector entries sum to " << sum << ", not 0";
    throw std::invalid_argument(msg.str());
  }
}

TangentVector TangentVector::zero(std::size_t d) {
  return TangentVector(std::vector<double>(d, 0.0));
}

TangentVector TangentVector::difference(const Measure& a, const Measure& b) {
  require_same_dim(a.dim(), b.dim());
  std::vector<double> v(a.dim());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] - b[i];
  return TangentVector(std::move(v));
}

TangentVector TangentVector::scaled(double factor) const {
  std::vector<double> v = entries_;
  for (double& x : v) x *= factor;
  return TangentVector(std::move(v));
}

double l1_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

double l1_distance(const Measure& a, const Measure& b) {
  return l1_distance(a.weights(), b.weights());
}

double l1_distance(const TangentVector& a, const TangentVector& b) {
  return l1_distance(a.entries(), b.entries());
}

Measure mix(const Measure& mu0, const Measure& mu1, double zeta) {
  require_same_dim(mu0.dim(), mu1.dim());
  if (!(zeta >= 0.0 && zeta <= 1.0)) {
    std::ostringstream msg;
    msg << "mixing weight " << zeta << " outside [0,1]";
    throw DomainError(msg.str());
  }
  std::vector<double> w(mu0.dim());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = (1.0 - zeta) * mu0[i] + zeta * mu1[i];
  }
  return Measure(std::move(w));
}

void chord_point(std::span<const double> mu, State z, double eps,
                 std::span<double> out) {
  for (std::size_t i = 0; i < mu.size(); ++i) out[i] = (1.0 - eps) * mu[i];
  out[z] += eps;
}

std::vector<double> chord_derivative(
    const std::function<std::vector<double>(std::span<const double>)>& map,
    std::span<const double> mu, State z, double eps) {
  if (z >= mu.size()) throw std::invalid_argument("state out of range");
  std::vector<double> point(mu.size());
  const std::vector<double> base = map(mu);

  chord_point(mu, z, eps, point);
  const std::vector<double> far = map(point);
  chord_point(mu, z, 0.5 * eps, point);
  const std::vector<double> near = map(point);

  std::vector<double> out(base.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double coarse = (far[i] - base[i]) / eps;
    const double fine = (near[i] - base[i]) / (0.5 * eps);
    out[i] = 2.0 * fine - coarse;
  }
  return out;
}

double fd_functional_derivative(const ScalarField& F, const Measure& mu,
                                State z, double eps) {
  auto scalar = [&F](std::span<const double> p) {
    return std::vector<double>{F.eval(Measure(std::vector<double>(p.begin(), p.end())))};
  };
  return chord_derivative(scalar, mu.weights(), z, eps)[0];
}

double linear_functional_derivative(const ScalarField& F, const Measure& mu,
                                    State z) {
  if (z >= mu.dim()) throw std::invalid_argument("state out of range");
  if (F.has_derivative()) return F.derivative(mu, z);
  return fd_functional_derivative(F, mu, z);
}

double directional_derivative(const ScalarField& F, const Measure& mu, State y,
                              State z) {
  if (y == z) return 0.0;
  return linear_functional_derivative(F, mu, z) -
         linear_functional_derivative(F, mu, y);
}

std::vector<double> composite_weights(std::size_t n) {
  if (n < 2) throw std::invalid_argument("quadrature needs at least 2 points");
  std::vector<double> w(n, 0.0);
  const double h = 1.0 / static_cast<double>(n - 1);
  if (n == 2) {
    w[0] = w[1] = 0.5;
    return w;
  }
  const std::size_t intervals = n - 1;
  // Simpson covers an even number of intervals; an odd remainder of three
  // intervals closes with the 3/8 rule.
  const std::size_t simpson_intervals =
      intervals % 2 == 0 ? intervals : intervals - 3;
  for (std::size_t k = 0; k + 2 <= simpson_intervals; k += 2) {
    w[k] += h / 3.0;
    w[k + 1] += 4.0 * h / 3.0;
    w[k + 2] += h / 3.0;
  }
  if (simpson_intervals != intervals) {
    const std::size_t k = simpson_intervals;
    w[k] += 3.0 * h / 8.0;
    w[k + 1] += 9.0 * h / 8.0;
    w[k + 2] += 9.0 * h / 8.0;
    w[k + 3] += 3.0 * h / 8.0;
  }
  return w;
}

double ftc_difference(const ScalarField& F, const Measure& mu0,
                      const Measure& mu1, std::size_t quad_points) {
  require_same_dim(mu0.dim(), mu1.dim());
  const std::vector<double> weights = composite_weights(quad_points);
  const std::size_t d = mu0.dim();
  double total = 0.0;
  for (std::size_t k = 0; k < quad_points; ++k) {
    const double zeta =
        static_cast<double>(k) / static_cast<double>(quad_points - 1);
    const Measure point = mix(mu0, mu1, zeta);
    double integrand = 0.0;
    for (State z = 0; z < d; ++z) {
      const double chord = mu1[z] - mu0[z];
      if (chord != 0.0) {
        integrand += linear_functional_derivative(F, point, z) * chord;
      }
    }
    total += weights[k] * integrand;
  }
  return total;
}

}  // namespace mfchain
