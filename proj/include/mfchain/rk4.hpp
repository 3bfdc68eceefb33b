#ifndef MFCHAIN_RK4_HPP
#define MFCHAIN_RK4_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace mfchain {

/// Classic four-stage Runge-Kutta step with owned scratch buffers.
/// System: void(double t, std::span<const double> y, std::span<double> dydt).
class Rk4Stepper {
 public:
  explicit Rk4Stepper(std::size_t n) : tmp_(n), k1_(n), k2_(n), k3_(n), k4_(n) {}

  template <class System>
  void step(System&& system, std::span<double> y, double t, double h) {
    const std::size_t n = y.size();
    const double h2 = 0.5 * h;
    const double h6 = h / 6.0;

    system(t, std::span<const double>(y), std::span<double>(k1_));
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h2 * k1_[i];
    system(t + h2, std::span<const double>(tmp_), std::span<double>(k2_));
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h2 * k2_[i];
    system(t + h2, std::span<const double>(tmp_), std::span<double>(k3_));
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = y[i] + h * k3_[i];
    system(t + h, std::span<const double>(tmp_), std::span<double>(k4_));
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += h6 * (k1_[i] + 2.0 * (k2_[i] + k3_[i]) + k4_[i]);
    }
  }

 private:
  std::vector<double> tmp_, k1_, k2_, k3_, k4_;
};

}  // namespace mfchain

#endif  // MFCHAIN_RK4_HPP
