#ifndef MFCHAIN_KOLMOGOROV_HPP
#define MFCHAIN_KOLMOGOROV_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "mfchain/models.hpp"
#include "mfchain/simplex.hpp"

namespace mfchain {

/// Strictly increasing, finite, nonnegative times starting at 0.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> times);

  /// 0, spacing, 2 spacing, ... up to horizon (horizon always included).
  static TimeGrid uniform(double horizon, double spacing);

  std::size_t size() const { return times_.size(); }
  double operator[](std::size_t i) const { return times_[i]; }
  double back() const { return times_.back(); }
  const std::vector<double>& times() const { return times_; }
  double min_spacing() const;

 private:
  std::vector<double> times_;
};

inline constexpr double kDefaultOdeStep = 1e-3;
/// Negative components down to -kClipLimit are clipped and renormalized after
/// each step; anything below is an IntegrationError.
inline constexpr double kClipLimit = 1e-8;

struct Trajectory {
  TimeGrid grid;
  std::vector<Measure> states;
  /// Largest negative component removed by clipping (invariant-violation
  /// margin).
  double max_clip = 0.0;
};

/// Fixed-step RK4 for dm/dt = m alpha(m), sampled at grid times.  Each grid
/// interval is split into ceil(interval / step) equal substeps.
Trajectory solve_kolmogorov(const Model& model, const Measure& mu0,
                            const TimeGrid& grid, double step = kDefaultOdeStep);

/// m(t; mu).
Measure flow_map(const Model& model, const Measure& mu, double t,
                 double step = kDefaultOdeStep);

/// mu alpha(mu), the Kolmogorov vector field.
std::vector<double> kolmogorov_drift(const Model& model,
                                     std::span<const double> mu);

struct StationaryResult {
  bool converged = false;
  std::vector<double> weights;
  double residual = 0.0;        // |nu alpha(nu)|_1
  double integration_time = 0.0;
  std::size_t polish_iterations = 0;
  std::string message;

  Measure measure() const { return Measure(weights); }
};

/// Integrates from the barycenter until successive unit-time states differ
/// by less than tol, then polishes with a damped uniformized fixed point.
/// Reports non-convergence instead of throwing.
StationaryResult stationary_distribution(const Model& model, double tol = 1e-12,
                                         double max_time = 1000.0,
                                         double step = kDefaultOdeStep);

/// CSV with header t,m_1,...,m_d.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

namespace detail {

/// Clips components in [-kClipLimit, 0) and renormalizes the first d entries
/// of y.  Returns the clipped magnitude; throws IntegrationError beyond it.
double clip_and_renormalize(std::span<double> m, double time);

/// Number of equal substeps covering an interval with steps no longer than step.
std::size_t substeps(double interval, double step);

}  // namespace detail

}  // namespace mfchain

#endif  // MFCHAIN_KOLMOGOROV_HPP
