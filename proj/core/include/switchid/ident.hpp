#pragma once

#include "switchid/linalg.hpp"
#include "switchid/markov.hpp"
#include "switchid/simulate.hpp"
#include "switchid/state_space.hpp"

#include <array>
#include <cstddef>
#include <span>

namespace switchid {

struct OlsFit {
  Matrix G_hat;   // d_y x (h d_u)
  Matrix Lambda;  // sum_t z_t z_t'
  Matrix cross;   // sum_t y_t z_t'
  std::size_t tau = 0;
};

struct IdentBudget {
  double sigma_e_sq = 0.0;
  double sigma_eta_sq = 0.0;
  double sigma_u_sq = 0.0;
  double gamma = 0.0;
  std::size_t n_models = 0;
  double delta = 0.0;
  std::size_t tau_f = 0;
  double mu = 0.0;
  // The three candidates whose maximum sets tau_f.
  std::array<double, 3> terms{};
};

/// Sub-Gaussian scale of the OLS residual:
///   ||C A^h||^2 (||A||_Hinf^2 (sw^2 + ||B||^2 su^2) + phi(A)^2) + ||C||^2 ||A||_Hinf^2 sw^2
/// with ||A||_Hinf = hinf_norm(I, A, I) and phi = transient_bound(A).
double sigma_e_sq(const StateSpace& sys, std::size_t horizon, const NoiseSpec& noise);

/// Identification length
///   max(800/9 log(3N^2/d), 800 s/(9 g^2 su^2), 3200 s/(9 su^2 g^2) log(16000 N^4/d^2))
/// with s = sigma_e^2 + sigma_eta^2, rounded up; mu = s / g^2.
IdentBudget sample_complexity(double sigma_e_sq, double sigma_eta_sq, double sigma_u_sq,
                              double gamma, std::size_t n_models, double delta);

/// Least squares fit of y_t ~ G z_t over samples t_start..t_end (inclusive,
/// 0-based, t_start >= h). Rejects a Gram matrix with condition number above
/// 1e12.
OlsFit ols_fit(std::span<const Vector> ys, std::span<const Vector> us, std::size_t horizon,
               std::size_t t_start, std::size_t t_end);

/// Champion scan over the candidates along their critical directions: the
/// challenger j replaces champion i when it is at least as close to G_hat.
std::size_t identify_model(const Matrix& g_hat, std::span<const MarkovParameter> models,
                           std::span<const CriticalDirection> directions);

/// OLS over samples [window_start, window_start + tau_f) followed by
/// identify_model. A single candidate is returned without fitting.
std::size_t identify_from_trajectory(const Trajectory& traj,
                                     std::span<const MarkovParameter> models,
                                     std::span<const CriticalDirection> directions,
                                     std::size_t horizon, std::size_t tau_f,
                                     std::size_t window_start);

}  // namespace switchid
