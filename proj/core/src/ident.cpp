#include "switchid/ident.hpp"

#include "switchid/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace switchid {

double sigma_e_sq(const StateSpace& sys, std::size_t horizon, const NoiseSpec& noise) {
  sys.validate();
  if (!(spectral_radius(sys.A) < 1.0)) throw UnstableError("sigma_e_sq: system is unstable");
  const Eigen::Index n = sys.A.rows();
  const Matrix eye = Matrix::Identity(n, n);
  const double hinf = hinf_norm(eye, sys.A, eye);
  const double phi = transient_bound(sys.A);
  const double cah = operator_norm(sys.C * matrix_power(sys.A, horizon));
  const double b = operator_norm(sys.B);
  const double c = operator_norm(sys.C);
  const double sw2 = noise.sigma_w * noise.sigma_w;
  const double su2 = noise.sigma_u * noise.sigma_u;
  return cah * cah * (hinf * hinf * (sw2 + b * b * su2) + phi * phi) + c * c * hinf * hinf * sw2;
}

IdentBudget sample_complexity(double sigma_e_sq, double sigma_eta_sq, double sigma_u_sq,
                              double gamma, std::size_t n_models, double delta) {
  if (n_models < 2) throw ValidationError("sample_complexity: needs at least two models");
  if (!(sigma_e_sq >= 0.0) || !(sigma_eta_sq >= 0.0) || !(sigma_u_sq > 0.0) ||
      sigma_e_sq + sigma_eta_sq <= 0.0) {
    throw ValidationError("sample_complexity: noise variances must be positive");
  }
  if (!(gamma > 0.0)) throw ValidationError("sample_complexity: gamma must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("sample_complexity: delta not in (0,1)");

  IdentBudget out{sigma_e_sq, sigma_eta_sq, sigma_u_sq, gamma, n_models, delta};
  const double n = static_cast<double>(n_models);
  const double s = sigma_e_sq + sigma_eta_sq;
  const double g2 = gamma * gamma;
  out.terms[0] = 800.0 / 9.0 * std::log(3.0 * n * n / delta);
  out.terms[1] = 800.0 * s / (9.0 * g2 * sigma_u_sq);
  out.terms[2] = 3200.0 * s / (9.0 * sigma_u_sq * g2) * std::log(16000.0 * std::pow(n, 4) / (delta * delta));
  out.tau_f = static_cast<std::size_t>(std::ceil(*std::max_element(out.terms.begin(), out.terms.end())));
  out.tau_f = std::max<std::size_t>(out.tau_f, 1);
  out.mu = s / g2;
  return out;
}

OlsFit ols_fit(std::span<const Vector> ys, std::span<const Vector> us, std::size_t horizon,
               std::size_t t_start, std::size_t t_end) {
  if (horizon == 0) throw ValidationError("ols_fit: horizon must be at least 1");
  if (t_start < horizon) throw ValidationError("ols_fit: window starts before h inputs exist");
  if (t_end < t_start || t_end >= ys.size() || t_end > us.size()) {
    throw ValidationError("ols_fit: window outside the data");
  }
  const Eigen::Index dy = ys[t_start].size();
  const Eigen::Index du = us[0].size();
  const Eigen::Index dz = du * static_cast<Eigen::Index>(horizon);
  const std::size_t tau = t_end - t_start + 1;
  if (tau < static_cast<std::size_t>(dz)) {
    throw ValidationError("ols_fit: window of " + std::to_string(tau) +
                          " samples is shorter than h*d_u = " + std::to_string(dz));
  }

  OlsFit fit;
  fit.tau = tau;
  fit.Lambda = Matrix::Zero(dz, dz);
  fit.cross = Matrix::Zero(dy, dz);
  for (std::size_t t = t_start; t <= t_end; ++t) {
    const Vector z = regressor(us, t, horizon);
    fit.Lambda.selfadjointView<Eigen::Lower>().rankUpdate(z);
    fit.cross.noalias() += ys[t] * z.transpose();
  }
  fit.Lambda = fit.Lambda.selfadjointView<Eigen::Lower>();

  Eigen::SelfAdjointEigenSolver<Matrix> es(fit.Lambda, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || !(lo > 0.0) || hi / lo > 1e12) {
    throw NumericalError("ols_fit: Gram matrix is singular or ill-conditioned (inputs not exciting)");
  }
  // G = cross * Lambda^{-1}  <=>  Lambda G' = cross'
  fit.G_hat = fit.Lambda.ldlt().solve(fit.cross.transpose()).transpose();
  return fit;
}

std::size_t identify_model(const Matrix& g_hat, std::span<const MarkovParameter> models,
                           std::span<const CriticalDirection> directions) {
  if (models.empty()) throw ValidationError("identify_model: no candidate models");
  std::size_t champion = 0;
  for (std::size_t j = 1; j < models.size(); ++j) {
    const CriticalDirection& d = find_direction(directions, champion, j);
    const double champion_gap = std::abs(d.u.dot((models[champion].G - g_hat) * d.v));
    const double challenger_gap = std::abs(d.u.dot((models[j].G - g_hat) * d.v));
    if (challenger_gap <= champion_gap) champion = j;
  }
  return champion;
}

std::size_t identify_from_trajectory(const Trajectory& traj,
                                     std::span<const MarkovParameter> models,
                                     std::span<const CriticalDirection> directions,
                                     std::size_t horizon, std::size_t tau_f,
                                     std::size_t window_start) {
  if (models.size() == 1) return 0;
  if (tau_f == 0) throw ValidationError("identify_from_trajectory: empty identification window");
  if (window_start < horizon) {
    throw ValidationError("identify_from_trajectory: window starts before h inputs exist");
  }
  if (traj.size() < window_start + tau_f) {
    throw ValidationError("identify_from_trajectory: trajectory has " + std::to_string(traj.size()) +
                          " samples, needs " + std::to_string(window_start + tau_f));
  }
  const OlsFit fit = ols_fit(traj.ys, traj.us, horizon, window_start, window_start + tau_f - 1);
  return identify_model(fit.G_hat, models, directions);
}

}  // namespace switchid
