#include "switchid/supervisor.hpp"

#include "switchid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace switchid {

std::size_t Schedule::step_bound() const {
  const std::size_t sweep = std::accumulate(tau.begin(), tau.end(), std::size_t{0});
  const std::size_t wait = waits.empty() ? 0 : *std::max_element(waits.begin(), waits.end());
  return sweep + wait + tau_f;
}

Schedule dwell_schedule(const FamilyAnalysis& analysis, double delta, std::size_t n_models,
                        ScheduleOptions options) {
  if (n_models == 0 || n_models != analysis.n) {
    throw ValidationError("dwell_schedule: model count does not match the analysis");
  }
  if (!(delta > 0.0 && delta < std::exp(-1.0))) {
    throw ValidationError("dwell_schedule: delta must lie in (0, 1/e)");
  }
  if (!(options.wait_multiplier >= 0.0)) throw ValidationError("wait multiplier must be >= 0");
  const double dp = delta / (4.0 * static_cast<double>(n_models));
  if (std::abs(dp - analysis.delta_prime) > 1e-12 * dp) {
    throw ValidationError("dwell_schedule: analysis was built with delta' != delta / (4N)");
  }

  const FamilyConstants& k = analysis.constants;
  const NoiseSpec& noise = analysis.noise;
  const double n = static_cast<double>(analysis.state_dim);
  const double log_inv = std::log(1.0 / dp);
  const double log_two = std::log(2.0 / dp);
  const double eps_c = analysis.eps_c;
  const double growth = k.c_r * log_two * n * n * std::pow(k.m_a, 4.0 * n);

  Schedule s;
  s.delta = delta;
  s.delta_prime = dp;
  s.guard_rate = 2.0 * k.c_s;  // 10 max(...) log(1/d') == 2 c_s

  const double m1 = analysis.any_stable()
                        ? initial_transient_bound(analysis.state_dim, k.m_t, dp)
                        : 0.0;
  double tau1 = 1600.0 / 9.0 * log_inv;
  if (analysis.eps_a) {
    const double scale = 6400.0 * eps_c / (9.0 * noise.sigma_w * noise.sigma_w * dp);
    tau1 = std::max(tau1, std::log(scale * (m1 + growth + k.c_s * log_inv)) /
                              std::log1p(*analysis.eps_a));
  }
  const auto state_dim = std::max<std::size_t>(analysis.state_dim, 1);
  s.tau.push_back(std::max(static_cast<std::size_t>(std::ceil(tau1)), state_dim));
  s.M.push_back(m1);

  double step = 0.0;
  if (k.m_a > 1.0 + 1e-12) {
    step = 2.0 / std::log(k.m_a) * n + std::log(k.c_p);
  } else {
    step = 2.0 * n + std::log(k.c_p);
    s.warnings.push_back("m_a = 1: dwell increment uses 2 d_x + log(c_p)");
  }
  s.increment = static_cast<std::size_t>(std::ceil(step));

  const double transfer = k.m_p / (eps_c * eps_c) * std::pow(k.m_a, 2.0 * n);
  for (std::size_t j = 1; j < n_models; ++j) {
    const double xi_prev = GuardThreshold{s.M[j - 1], dp, s.guard_rate}.xi(s.tau[j - 1]);
    s.M.push_back(transfer * xi_prev + growth);
    s.tau.push_back(s.tau[j - 1] + s.increment);
  }

  std::size_t cumulative = 0;
  for (std::size_t j = 0; j < n_models; ++j) {
    s.waits.push_back(static_cast<std::size_t>(
        std::ceil(options.wait_multiplier * static_cast<double>(cumulative))));
    cumulative += s.tau[j];
  }

  // Identification at confidence 1 - delta/2 on whichever column certifies;
  // sigma_e^2 is the worst case over that column's stable entries.
  s.tau_f_per_column.assign(n_models, 0);
  s.column_sigma_e_sq.assign(n_models, std::numeric_limits<double>::quiet_NaN());
  if (n_models >= 2) {
    const std::size_t dz = analysis.grid.front().system.input_dim() * analysis.horizon;
    std::size_t fallback = 0;
    std::vector<bool> has_stable(n_models, false);
    for (std::size_t j = 0; j < n_models; ++j) {
      double worst = -1.0;
      for (std::size_t i = 0; i < n_models; ++i) {
        const GridEntry& e = analysis.at(i, j);
        if (!e.stable) continue;
        worst = std::max(worst, sigma_e_sq(e.system, analysis.horizon, noise));
      }
      if (worst < 0.0) continue;
      has_stable[j] = true;
      s.column_sigma_e_sq[j] = worst;
      const IdentBudget b =
          sample_complexity(worst, noise.sigma_eta * noise.sigma_eta,
                            noise.sigma_u * noise.sigma_u, analysis.column_gamma[j], n_models,
                            delta / 2.0);
      s.tau_f_per_column[j] = std::max(b.tau_f, dz);
      fallback = std::max(fallback, s.tau_f_per_column[j]);
    }
    // A column with no stable entry is certified only by a guard failure;
    // give it the longest window anyway.
    for (std::size_t j = 0; j < n_models; ++j) {
      if (!has_stable[j]) s.tau_f_per_column[j] = std::max(fallback, dz);
    }
    s.tau_f = *std::max_element(s.tau_f_per_column.begin(), s.tau_f_per_column.end());
  }
  return s;
}

const char* to_string(PhaseOutcome outcome) {
  switch (outcome) {
    case PhaseOutcome::RejectedUnstable:
      return "rejected-unstable";
    case PhaseOutcome::RejectedUncertified:
      return "rejected-uncertified";
    case PhaseOutcome::Certified:
      return "certified";
  }
  return "unknown";
}

Verdict run(Session& session, const SwitchedFamily& family, const FamilyAnalysis& analysis,
            const Schedule& schedule) {
  const std::size_t n = family.size();
  if (analysis.n != n || schedule.tau.size() != n || schedule.M.size() != n ||
      schedule.waits.size() != n || schedule.tau_f_per_column.size() != n) {
    throw ValidationError("run: schedule and analysis do not match the family");
  }
  const std::size_t h = analysis.horizon;

  Verdict verdict;
  // Last h exploratory inputs, most recent at the back.
  std::deque<Vector> history;
  const auto remember = [&](const Vector& u) {
    history.push_back(u);
    if (history.size() > h) history.pop_front();
  };

  for (std::size_t j = 0; j < n; ++j) {
    const Controller& ctrl = family.controllers[j];
    EnergyMonitor monitor(schedule.threshold(j));
    PhaseRecord phase{j, 0, PhaseOutcome::Certified, schedule.M[j], schedule.tau[j], 0.0};
    while (phase.steps < schedule.tau[j]) {
      Vector u = session.draw_exploratory();
      const Vector y = session.step(ctrl, u);
      remember(u);
      ++phase.steps;
      const GuardVerdict g = monitor.feed(y);
      if (g == GuardVerdict::ExceededTwoXi) {
        phase.outcome = PhaseOutcome::RejectedUnstable;
        break;
      }
      if (g == GuardVerdict::ExceededXi) {
        phase.outcome = PhaseOutcome::RejectedUncertified;
        break;
      }
    }
    phase.energy = monitor.accumulated();
    verdict.phases.push_back(phase);
    verdict.total_steps += phase.steps;
    if (phase.outcome != PhaseOutcome::Certified) continue;

    verdict.certified_column = j;
    for (std::size_t t = 0; t < schedule.waits[j]; ++t) {
      Vector u = session.draw_exploratory();
      session.step(ctrl, u);
      remember(u);
    }
    verdict.wait_steps = schedule.waits[j];

    const std::size_t tau_f = schedule.tau_f_per_column[j];
    Trajectory traj;
    traj.us.assign(history.begin(), history.end());
    traj.ys.assign(traj.us.size(), Vector::Zero(static_cast<Eigen::Index>(session.plant().output_dim())));
    const std::size_t window_start = traj.us.size();
    for (std::size_t t = 0; t < tau_f; ++t) {
      Vector u = session.draw_exploratory();
      traj.ys.push_back(session.step(ctrl, u));
      traj.us.push_back(std::move(u));
    }
    verdict.ident_steps = tau_f;
    verdict.total_steps += verdict.wait_steps + verdict.ident_steps;

    const std::vector<MarkovParameter> models = analysis.column_markov(j);
    verdict.identified_index = identify_from_trajectory(
        traj, models, analysis.column_directions[j], h, tau_f, window_start);
    return verdict;
  }
  return verdict;
}

}  // namespace switchid
