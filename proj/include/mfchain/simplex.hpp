#ifndef MFCHAIN_SIMPLEX_HPP
#define MFCHAIN_SIMPLEX_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfchain {

/// Index of a state in [d], zero-based.
using State = std::size_t;

/// Raised when an argument lies outside the domain of an operation
/// (a measure outside a model's valid region, a mixing weight outside [0,1]).
/// Carries the simulation time at which the violation was seen, if any.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what, double time = -1.0)
      : std::domain_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Raised when a numerical integration loses the accuracy it promises.
class IntegrationError : public std::runtime_error {
 public:
  explicit IntegrationError(const std::string& what, double time = -1.0)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

inline constexpr double kSimplexSumTolerance = 1e-12;

/// A probability vector on d >= 2 states.
class Measure {
 public:
  /// Throws std::invalid_argument on a negative weight, d < 2, or a sum
  /// farther than 1e-12 from one.
  explicit Measure(std::vector<double> weights);

  static Measure dirac(std::size_t d, State z);
  static Measure barycenter(std::size_t d);

  std::size_t dim() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  const std::vector<double>& vec() const { return weights_; }

  bool operator==(const Measure&) const = default;

 private:
  std::vector<double> weights_;
};

/// A vector whose entries sum to zero: a tangent direction of the simplex.
class TangentVector {
 public:
  /// Throws std::invalid_argument when |sum| exceeds 1e-12 * max(1, |v|_1).
  explicit TangentVector(std::vector<double> entries);

  static TangentVector zero(std::size_t d);
  /// a - b.
  static TangentVector difference(const Measure& a, const Measure& b);

  std::size_t dim() const { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  std::span<const double> entries() const { return entries_; }
  const std::vector<double>& vec() const { return entries_; }

  TangentVector scaled(double factor) const;

 private:
  std::vector<double> entries_;
};

/// A real function on the simplex, optionally with an analytic linear
/// functional derivative (mu, z) -> dF/dm(mu, z).
struct ScalarField {
  std::string name;
  std::function<double(const Measure&)> eval;
  std::function<double(const Measure&, State)> derivative;

  bool has_derivative() const { return static_cast<bool>(derivative); }
  double operator()(const Measure& mu) const { return eval(mu); }
};

double l1_distance(std::span<const double> a, std::span<const double> b);
double l1_distance(const Measure& a, const Measure& b);
double l1_distance(const TangentVector& a, const TangentVector& b);
double l1_norm(std::span<const double> v);

/// (1 - zeta) mu0 + zeta mu1.  Throws DomainError for zeta outside [0,1].
Measure mix(const Measure& mu0, const Measure& mu1, double zeta);

/// The point (1 - eps) mu + eps delta_z, written into out.
void chord_point(std::span<const double> mu, State z, double eps,
                 std::span<double> out);

inline constexpr double kChordStep = 1e-6;

/// One-sided derivative of a vector-valued map along the chord from mu toward
/// delta_z, with one Richardson level (steps eps and eps/2).  The map receives
/// points inside the simplex only.
std::vector<double> chord_derivative(
    const std::function<std::vector<double>(std::span<const double>)>& map,
    std::span<const double> mu, State z, double eps = kChordStep);

/// dF/dm(mu, z): the analytic derivative when F carries one, otherwise the
/// chord finite difference.
double linear_functional_derivative(const ScalarField& F, const Measure& mu,
                                    State z);

/// Always the finite-difference estimate, ignoring any analytic derivative.
double fd_functional_derivative(const ScalarField& F, const Measure& mu,
                                State z, double eps = kChordStep);

/// D^m_{yz} F(mu) = dF/dm(mu, z) - dF/dm(mu, y).
double directional_derivative(const ScalarField& F, const Measure& mu, State y,
                              State z);

inline constexpr std::size_t kDefaultQuadPoints = 33;

/// Quadrature of the integral along the chord mu0 -> mu1 of
/// sum_z dF/dm(mix, z) (mu1 - mu0)_z, which equals F(mu1) - F(mu0).
double ftc_difference(const ScalarField& F, const Measure& mu0,
                      const Measure& mu1,
                      std::size_t quad_points = kDefaultQuadPoints);

/// Weights of a composite rule on n equispaced nodes of [0,1]: Simpson for odd
/// n, Simpson plus a closing 3/8 panel for even n >= 4, trapezoid for n = 2.
std::vector<double> composite_weights(std::size_t n);

}  // namespace mfchain

#endif  // MFCHAIN_SIMPLEX_HPP
