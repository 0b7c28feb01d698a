#pragma once

#include "switchid/linalg.hpp"
#include "switchid/state_space.hpp"

#include <cstddef>
#include <span>

namespace switchid {

// xi(M, tau, delta) = 2 M + tau * per_step_rate, where
// per_step_rate = 10 max_S (sw^2 tr P + su^2 tr B'PB + se^2 d_x) log(1/delta)
// over the stable members S.
struct GuardThreshold {
  double M = 0.0;
  double delta = 0.0;
  double per_step_rate = 0.0;

  double xi(std::size_t tau) const { return 2.0 * M + static_cast<double>(tau) * per_step_rate; }
};

/// max over the stable systems of sw^2 tr(P) + su^2 tr(B'PB) + se^2 d_x.
double stable_energy_rate(std::span<const StateSpace> stable_systems, const NoiseSpec& noise);

GuardThreshold make_guard_threshold(double M, double delta,
                                    std::span<const StateSpace> stable_systems,
                                    const NoiseSpec& noise);

double xi_threshold(double M, std::size_t tau, double delta,
                    std::span<const StateSpace> stable_systems, const NoiseSpec& noise);

enum class GuardVerdict { UnderThreshold, ExceededXi, ExceededTwoXi };

const char* to_string(GuardVerdict v);

// Running sum of ||y_t||^2 checked against xi and 2 xi at the current step
// count. Energy equal to xi is still UnderThreshold.
class EnergyMonitor {
 public:
  explicit EnergyMonitor(GuardThreshold threshold) : threshold_(threshold) {}

  GuardVerdict feed(const Vector& y);

  double accumulated() const { return accumulated_; }
  std::size_t steps() const { return steps_; }
  const GuardThreshold& threshold() const { return threshold_; }

 private:
  GuardThreshold threshold_;
  double accumulated_ = 0.0;
  std::size_t steps_ = 0;
};

/// Steps after which an unstable closed loop has crossed 2 xi w.h.p.:
///   max{ 1600/9 log(1/d),
///        log(6400 eps_c / (9 sw^2 d) (M + 5 S log(1/d))) / log(1 + eps_a) }
/// with S the stable energy rate, rounded up.
std::size_t unstable_detection_time(double M, double delta, double eps_a, double eps_c,
                                    const NoiseSpec& noise,
                                    std::span<const StateSpace> stable_systems);

/// Hanson-Wright bound on x_1' P x_1 for x_1 ~ N(0, I): 5 m_t log(1/delta').
double initial_transient_bound(std::size_t state_dim, double m_t, double delta_prime);

}  // namespace switchid
