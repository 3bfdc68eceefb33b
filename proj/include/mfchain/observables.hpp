#ifndef MFCHAIN_OBSERVABLES_HPP
#define MFCHAIN_OBSERVABLES_HPP

#include <functional>
#include <string>
#include <vector>

#include "mfchain/simplex.hpp"

namespace mfchain {

/// Test functions Phi with analytic linear functional derivatives.  Each one
/// is a smooth function G on R^d restricted to the simplex, so
///   dPhi/dm(mu, z) = grad G(mu) . (delta_z - mu).
namespace observables {

using Gradient = std::function<void(const Measure&, std::span<double>)>;

/// Builds a ScalarField from G and its Euclidean gradient.
ScalarField from_gradient(std::string name,
                          std::function<double(const Measure&)> value,
                          Gradient gradient);

/// |mu - target|_2^2.
ScalarField squared_distance(const Measure& target);
/// mu . c.
ScalarField linear(std::vector<double> c);
/// sum_x mu_x log(mu_x + kappa), kappa > 0.
ScalarField entropy_like(double kappa);
ScalarField constant(double c);

/// Name + parameters, used by the command-line harness:
///   squared_distance  target weights (empty: the caller substitutes nu_inf)
///   linear            c_1..c_d
///   entropy_like      kappa
///   constant          c
/// `stationary` is used when squared_distance has no explicit target.
ScalarField make(const std::string& name, const std::vector<double>& params,
                 std::size_t d, const std::vector<double>& stationary);

std::vector<std::string> names();

}  // namespace observables
}  // namespace mfchain

#endif  // MFCHAIN_OBSERVABLES_HPP
