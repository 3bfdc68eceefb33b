#ifndef MFCHAIN_MODELS_HPP
#define MFCHAIN_MODELS_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfchain/random.hpp"
#include "mfchain/simplex.hpp"

namespace mfchain {

/// Dense d x d matrix, row-major.
class SquareMatrix {
 public:
  explicit SquareMatrix(std::size_t d = 0) : d_(d), a_(d * d, 0.0) {}
  SquareMatrix(std::size_t d, std::vector<double> entries);

  std::size_t dim() const { return d_; }
  double operator()(std::size_t x, std::size_t y) const { return a_[x * d_ + y]; }
  double& operator()(std::size_t x, std::size_t y) { return a_[x * d_ + y]; }
  std::span<const double> entries() const { return a_; }
  std::span<double> entries() { return a_; }

  /// row * A, with row treated as a row vector.
  std::vector<double> left_multiply(std::span<const double> row) const;
  double max_abs_row_sum() const;

 private:
  std::size_t d_;
  std::vector<double> a_;
};

/// A conservative generator: off-diagonal entries >= 0, rows summing to zero.
class RateMatrix {
 public:
  /// Throws std::invalid_argument if the generator invariants fail.
  explicit RateMatrix(SquareMatrix m);

  std::size_t dim() const { return m_.dim(); }
  double operator()(std::size_t x, std::size_t y) const { return m_(x, y); }
  const SquareMatrix& matrix() const { return m_; }
  std::vector<double> left_multiply(std::span<const double> row) const {
    return m_.left_multiply(row);
  }

 private:
  SquareMatrix m_;
};

/// Constraint that measures must meet before rates may be evaluated.
struct ValidRegion {
  double min_weight = 0.0;

  bool contains(std::span<const double> mu) const;
  std::string describe() const;
};

/// Declared regularity metadata; unset values are estimated by sampling.
struct ModelBounds {
  std::optional<double> max_rate;      // M
  std::optional<double> min_rate;      // L
  std::optional<double> lipschitz;     // K, row-sum norm per unit L1
};

/// A rate function mu -> alpha(mu) on d states, optionally with its measure
/// derivative z -> d alpha / dm(mu, z).
///
/// The closures write into caller-owned row-major d*d buffers and must not
/// touch the region check; Model::rates and Model::rate_derivative add it.
class Model {
 public:
  using RatesFn = std::function<void(std::span<const double>, std::span<double>)>;
  using DerivativeFn =
      std::function<void(std::span<const double>, State, std::span<double>)>;

  Model(std::string name, std::size_t d, RatesFn rates,
        DerivativeFn derivative = {}, ModelBounds bounds = {},
        ValidRegion region = {});

  const std::string& name() const { return name_; }
  std::size_t dim() const { return d_; }
  const ModelBounds& bounds() const { return bounds_; }
  const ValidRegion& region() const { return region_; }
  bool has_analytic_derivative() const { return static_cast<bool>(derivative_); }

  /// Region-checked, validated generator.
  RateMatrix rates(const Measure& mu) const;
  /// Region-checked measure derivative (analytic or chord finite difference).
  SquareMatrix rate_derivative(const Measure& mu, State z) const;
  /// Always the chord finite difference of the rates.
  SquareMatrix fd_rate_derivative(const Measure& mu, State z) const;

  /// Unchecked hot-path evaluation into a d*d buffer.
  void rates_into(std::span<const double> mu, std::span<double> out) const {
    rates_(mu, out);
  }
  void rate_derivative_into(std::span<const double> mu, State z,
                            std::span<double> out) const;

  /// Throws DomainError naming the violated constraint.
  void check_region(std::span<const double> mu, double time = -1.0) const;

 private:
  std::string name_;
  std::size_t d_;
  RatesFn rates_;
  DerivativeFn derivative_;
  ModelBounds bounds_;
  ValidRegion region_;
};

RateMatrix eval_rates(const Model& model, const Measure& mu);
SquareMatrix rate_derivative(const Model& model, const Measure& mu, State z);

// Built-in systems.

/// Two-state system with three invariant measures (0.25,0.75), (0.5,0.5),
/// (0.75,0.25).
Model example_non_erg();
/// Two-state system converging to (0.5,0.5) at rate 1/sqrt(t).
Model example_slow_conv();
/// Four-state system whose first three coordinates follow a shifted, scaled
/// Lorenz flow.  Valid only where every weight is >= 0.01.
Model example_chaos();
/// Two-state system alpha12 = a + eps mu2, alpha21 = b + eps mu2.
Model weak_interaction(double a, double b, double eps);
/// mu-independent generator; diagonals are recomputed from the off-diagonals.
Model constant(const SquareMatrix& q);
/// All off-diagonal rates equal to rate.
Model constant_symmetric(std::size_t d, double rate);
/// No transitions at all.
Model zero_model(std::size_t d);

/// Name -> factory(params) lookup used by the command-line harness.  Custom
/// models register closures here.
class ModelRegistry {
 public:
  using Factory = std::function<Model(const std::vector<double>&)>;

  static ModelRegistry& instance();

  void add(const std::string& name, Factory factory, std::string usage);
  Model make(const std::string& name, const std::vector<double>& params) const;
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;
  std::string usage(const std::string& name) const;

 private:
  ModelRegistry();
  std::map<std::string, std::pair<Factory, std::string>> entries_;
};

Model make_model(const std::string& name, const std::vector<double>& params);

// Sampling helpers shared by the certificates and the property tests.

/// Uniform (flat Dirichlet) random point of the model's valid region.
Measure random_measure(std::size_t d, Rng& rng, const ValidRegion& region = {});

struct SampledBounds {
  double max_rate = 0.0;
  double min_rate = 0.0;
  std::vector<double> argmin_point;
  State argmin_x = 0, argmin_y = 1;
};

SampledBounds sample_rate_bounds(const Model& model, std::size_t samples,
                                 std::uint64_t seed = 0x5eed);

struct LipschitzEstimate {
  double value = 0.0;
  std::vector<double> witness_a;
  std::vector<double> witness_b;
};

/// max |alpha(mu) - alpha(nu)|_rowsum / |mu - nu|_1 over sampled pairs; half
/// of the pairs are short chords.
LipschitzEstimate estimate_lipschitz(const Model& model, std::size_t pairs = 10000,
                                     std::uint64_t seed = 0x5eed);

}  // namespace mfchain

#endif  // MFCHAIN_MODELS_HPP
