#ifndef MFCHAIN_LINEARIZED_HPP
#define MFCHAIN_LINEARIZED_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfchain/kolmogorov.hpp"
#include "mfchain/models.hpp"
#include "mfchain/simplex.hpp"

namespace mfchain {

/// A source term r(t) in the tangent space with a declared sup bound.
struct SourceTerm {
  /// Writes r(t) into out; empty means r = 0.
  std::function<void(double, std::span<double>)> eval;
  double bound = 0.0;

  static SourceTerm zero();
  static SourceTerm constant(const TangentVector& v);
  /// v * sin(omega t + phase).
  static SourceTerm sinusoidal(const TangentVector& v, double omega,
                               double phase = 0.0);
  /// Cycles through levels, each held for `hold` time units.
  static SourceTerm piecewise_constant(std::vector<TangentVector> levels,
                                       double hold);

  bool is_zero() const { return !eval; }
  TangentVector at(double t, std::size_t d) const;
};

struct TangentPath {
  TimeGrid grid;
  std::vector<TangentVector> values;
};

/// A_{xy}(eta) = sum_z eta_z (d alpha / dm(eta, x))_{zy} + alpha_{xy}(eta).
/// The linearized operator acts as L_eta q = q A(eta).
SquareMatrix linearized_generator(const Model& model, const Measure& eta);

/// A(t, mu) evaluated along the flow: linearized_generator at m(t; mu).
SquareMatrix proof_matrix(const Model& model, const Measure& mu, double t,
                          double step = kDefaultOdeStep);

/// L_eta q = eta (sum_z d alpha/dm(eta, z) q_z) + q alpha(eta).
TangentVector apply_L(const Model& model, const Measure& eta,
                      const TangentVector& q);

/// Solves dq/dt = L_{m(t; mu)} q + r(t), q(0) = q0, integrating the base flow
/// and q in one RK4 state so every stage sees a consistent base point.
TangentPath solve_linear_cauchy(const Model& model, const Measure& mu,
                                const TangentVector& q0, const SourceTerm& r,
                                const TimeGrid& grid,
                                double step = kDefaultOdeStep);

/// Tangent flow started from q0 = nu - mu, no source.
TangentPath m1(const Model& model, const Measure& mu, const Measure& nu,
               const TimeGrid& grid, double step = kDefaultOdeStep);

/// d m / dm (t, mu, z) = m1(t, mu, delta_z).
TangentPath dm_dmeasure(const Model& model, const Measure& mu, State z,
                        const TimeGrid& grid, double step = kDefaultOdeStep);

/// m(t; mu) together with dm/dm(t, mu, z) for every z, from one integration.
struct FlowDerivative {
  Measure flow;
  std::vector<TangentVector> by_state;
};

FlowDerivative flow_with_derivatives(const Model& model, const Measure& mu,
                                     double t, double step = kDefaultOdeStep);

struct DecayEstimate {
  double rate = 0.0;  // lambda hat
  double c2 = 0.0;
  bool decaying = false;
  std::string message;
  std::vector<double> sample_rates;
  std::vector<double> sample_intercepts;
};

struct DecayOptions {
  double step = kDefaultOdeStep;
  std::uint64_t seed = 0xdeca7;
  std::size_t fit_points = 101;
};

/// Fits log|q(t)|_1 on the last half of [0, horizon] for random (mu, q0) with
/// |q0|_1 = 1 and r = 0.  rate = min of per-sample rates, c2 = exp(max
/// intercept).  rate <= 1e-10 is flagged as no exponential decay.
DecayEstimate estimate_decay(const Model& model, std::size_t samples,
                             double horizon = 20.0, const DecayOptions& opt = {});

/// Same fit for caller-chosen starting pairs.
DecayEstimate estimate_decay(const Model& model,
                             const std::vector<std::pair<Measure, TangentVector>>& starts,
                             double horizon, const DecayOptions& opt = {});

/// Fits log|m(t; mu) - m(t; mu_hat)|_1 on the last half of [0, horizon] for
/// random pairs, ignoring values below 1e-12 (roundoff floor).
DecayEstimate estimate_nonlinear_contraction(const Model& model,
                                             std::size_t samples,
                                             double horizon = 6.0,
                                             const DecayOptions& opt = {});

enum class Verdict { Pass, Fail, Inconclusive };
std::string to_string(Verdict v);

struct EstimatedConstants {
  std::optional<double> L, K, lambda, c2;
};

struct ErgodicityReport {
  int condition = 0;
  Verdict verdict = Verdict::Inconclusive;
  double margin = 0.0;
  std::vector<double> witness_mu;
  State witness_x = 0, witness_y = 0;
  std::size_t resolution = 0;
  bool estimated = false;  // some constant was sampled rather than declared
  double modulus = 0.0;    // largest margin change between lattice neighbours
  std::size_t points_checked = 0;
  std::string label;
  EstimatedConstants constants;
};

/// Uniform lower bound L on off-diagonal rates and Lipschitz constant K;
/// passes iff K < L/d, margin L/d - K.
ErgodicityReport check_condition1(const Model& model);

/// Minimum over a simplex lattice and x != y of
///   sum_{z,w} mu_z D^m_{wx} alpha_{zy}(mu) mu_w + alpha_{xy}(mu).
/// A pass certifies the lattice only.
ErgodicityReport check_condition2(const Model& model, std::size_t resolution);

/// The condition-2 margin at one point and pair.
double condition2_margin(const Model& model, const Measure& mu, State x, State y);

/// 50 for d <= 3, 15 for d <= 6, 8 beyond.
std::size_t default_lattice_resolution(std::size_t d);

/// Every mu = k / resolution with k a composition of resolution into d parts.
std::vector<Measure> simplex_lattice(std::size_t d, std::size_t resolution);

nlohmann::json to_json(const ErgodicityReport& report);
nlohmann::json to_json(const DecayEstimate& estimate);

}  // namespace mfchain

#endif  // MFCHAIN_LINEARIZED_HPP
