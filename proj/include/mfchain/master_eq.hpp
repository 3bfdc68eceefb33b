#ifndef MFCHAIN_MASTER_EQ_HPP
#define MFCHAIN_MASTER_EQ_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mfchain/kolmogorov.hpp"
#include "mfchain/models.hpp"
#include "mfchain/simplex.hpp"

namespace mfchain {

/// U(t, mu) = Phi(m(t; mu)).
class PropagatedObservable {
 public:
  PropagatedObservable(Model model, ScalarField phi,
                       double step = kDefaultOdeStep);

  const Model& model() const { return model_; }
  const ScalarField& phi() const { return phi_; }
  double step() const { return step_; }
  /// True when Phi has no analytic derivative and finite differences are used.
  bool uses_fd_fallback() const { return !phi_.has_derivative(); }

  double value(double t, const Measure& mu) const;
  /// dU/dm(t, mu, z) = dPhi/dm(m(t; mu), .) . dm/dm(t, mu, z).
  double functional_derivative(double t, const Measure& mu, State z) const;
  /// All z at once, from a single tangent integration.
  std::vector<double> functional_derivatives(double t, const Measure& mu) const;

 private:
  Model model_;
  ScalarField phi_;
  double step_;
};

inline constexpr double kMasterTimeStep = 1e-4;

/// |dU/dt - sum_z dU/dm(t, mu, z) (mu alpha(mu))_z|.  The time derivative is
/// a central difference of value() with step 1e-4 and one Richardson level,
/// so it shares no code with the right-hand side.  Needs t > 0.
double master_residual(const PropagatedObservable& obs, double t,
                       const Measure& mu);

/// integral over zeta in [0,1] of
///   D_{x_i z} U(s, mu^N + (zeta/N)(delta_z - delta_{x_i})) - D_{x_i z} U(s, mu^N)
/// with 9-point Simpson.  config lists the state of each of the N particles;
/// i is zero-based.
double tau_remainder(const PropagatedObservable& obs, double s,
                     const std::vector<State>& config, std::size_t i, State z);

struct ResidualSample {
  double t;
  std::vector<double> mu;
  double residual;
};

/// Residuals at `points` random (t, mu), t uniform in [t_min, t_max] and mu
/// uniform in the model's valid region.
std::vector<ResidualSample> residual_scan(const PropagatedObservable& obs,
                                          std::size_t points, double t_min,
                                          double t_max, std::uint64_t seed);

/// CSV with header t,mu_1,...,mu_d,residual.
void write_residual_csv(std::ostream& out, const std::vector<ResidualSample>& rows);

}  // namespace mfchain

#endif  // MFCHAIN_MASTER_EQ_HPP
