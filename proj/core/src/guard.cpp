#include "switchid/guard.hpp"

#include "switchid/errors.hpp"

#include <algorithm>
#include <cmath>

namespace switchid {

namespace {

void require_guard_delta(double delta) {
  if (!(delta > 0.0 && delta < std::exp(-1.0))) {
    throw ValidationError("guard confidence delta must lie in (0, 1/e)");
  }
}

}  // namespace

double stable_energy_rate(std::span<const StateSpace> stable_systems, const NoiseSpec& noise) {
  if (stable_systems.empty()) throw ValidationError("guard needs at least one stable system");
  const double sw2 = noise.sigma_w * noise.sigma_w;
  const double su2 = noise.sigma_u * noise.sigma_u;
  const double se2 = noise.sigma_eta * noise.sigma_eta;
  double worst = 0.0;
  for (const auto& sys : stable_systems) {
    const Matrix p = solve_discrete_lyapunov(sys.A, sys.C.transpose() * sys.C);
    const double rate = sw2 * p.trace() + su2 * (sys.B.transpose() * p * sys.B).trace() +
                        se2 * static_cast<double>(sys.state_dim());
    worst = std::max(worst, rate);
  }
  return worst;
}

GuardThreshold make_guard_threshold(double M, double delta,
                                    std::span<const StateSpace> stable_systems,
                                    const NoiseSpec& noise) {
  require_guard_delta(delta);
  if (!(M >= 0.0)) throw ValidationError("transient bound M must be non-negative");
  const double rate = stable_energy_rate(stable_systems, noise);
  return GuardThreshold{M, delta, 10.0 * rate * std::log(1.0 / delta)};
}

double xi_threshold(double M, std::size_t tau, double delta,
                    std::span<const StateSpace> stable_systems, const NoiseSpec& noise) {
  return make_guard_threshold(M, delta, stable_systems, noise).xi(tau);
}

const char* to_string(GuardVerdict v) {
  switch (v) {
    case GuardVerdict::UnderThreshold:
      return "under-threshold";
    case GuardVerdict::ExceededXi:
      return "exceeded-xi";
    case GuardVerdict::ExceededTwoXi:
      return "exceeded-2xi";
  }
  return "unknown";
}

GuardVerdict EnergyMonitor::feed(const Vector& y) {
  accumulated_ += y.squaredNorm();
  ++steps_;
  const double xi = threshold_.xi(steps_);
  if (accumulated_ <= xi) return GuardVerdict::UnderThreshold;
  if (accumulated_ >= 2.0 * xi) return GuardVerdict::ExceededTwoXi;
  return GuardVerdict::ExceededXi;
}

std::size_t unstable_detection_time(double M, double delta, double eps_a, double eps_c,
                                    const NoiseSpec& noise,
                                    std::span<const StateSpace> stable_systems) {
  require_guard_delta(delta);
  if (!(eps_a > 0.0)) throw ValidationError("eps_a must be positive");
  if (!(eps_c > 0.0)) throw ValidationError("eps_c must be positive");
  if (!(noise.sigma_w > 0.0)) throw ValidationError("sigma_w must be positive");
  const double log_inv = std::log(1.0 / delta);
  const double rate = stable_energy_rate(stable_systems, noise);
  const double first = 1600.0 / 9.0 * log_inv;
  const double scale = 6400.0 * eps_c / (9.0 * noise.sigma_w * noise.sigma_w * delta);
  const double second = std::log(scale * (M + 5.0 * rate * log_inv)) / std::log1p(eps_a);
  return static_cast<std::size_t>(std::ceil(std::max(first, second)));
}

double initial_transient_bound(std::size_t state_dim, double m_t, double delta_prime) {
  require_guard_delta(delta_prime);
  if (state_dim == 0) throw ValidationError("state dimension must be positive");
  if (!(m_t >= 0.0)) throw ValidationError("m_t must be non-negative");
  return 5.0 * m_t * std::log(1.0 / delta_prime);
}

}  // namespace switchid
