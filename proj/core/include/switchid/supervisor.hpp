#pragma once

#include "switchid/guard.hpp"
#include "switchid/ident.hpp"
#include "switchid/simulate.hpp"
#include "switchid/system.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace switchid {

struct ScheduleOptions {
  // W_j = ceil(wait_multiplier * (tau_1 + ... + tau_{j-1})).
  double wait_multiplier = 1.0;
};

// Dwell times and transient bounds for the controller sweep.
struct Schedule {
  std::vector<std::size_t> tau;    // tau_1..tau_N
  std::vector<double> M;           // M_1..M_N
  std::vector<std::size_t> waits;  // W_1..W_N
  // Identification length per certified column; tau_f is the maximum.
  std::vector<std::size_t> tau_f_per_column;
  std::vector<double> column_sigma_e_sq;
  std::size_t tau_f = 0;
  std::size_t increment = 0;
  double delta = 0.0;
  double delta_prime = 0.0;
  // Guard slope 10 max_S(...) log(1/delta') shared by every phase.
  double guard_rate = 0.0;
  std::vector<std::string> warnings;

  GuardThreshold threshold(std::size_t phase) const {
    return GuardThreshold{M[phase], delta_prime, guard_rate};
  }
  // sum_j tau_j + max_j W_j + tau_f
  std::size_t step_bound() const;
};

/// Builds tau_j, M_j, W_j and tau_f from the family constants.
///
/// tau_1 = max{1600/9 log(1/d'), log(6400 eps_c/(9 sw^2 d') (M_1 + c_r log(2/d') n^2 m_a^{4n}
///         + c_s log(1/d'))) / log(1 + eps_a)}, M_1 = 5 m_t log(1/d'), and for j >= 2
/// tau_j = tau_{j-1} + ceil(2 n / log(m_a) + log(c_p)),
/// M_j = m_p / eps_c^2 m_a^{2n} xi(M_{j-1}, tau_{j-1}, d') + c_r log(2/d') n^2 m_a^{4n}.
/// Requires analysis.delta_prime == delta / (4N).
Schedule dwell_schedule(const FamilyAnalysis& analysis, double delta, std::size_t n_models,
                        ScheduleOptions options = {});

enum class PhaseOutcome { RejectedUnstable, RejectedUncertified, Certified };

const char* to_string(PhaseOutcome outcome);

struct PhaseRecord {
  std::size_t controller = 0;
  std::size_t steps = 0;
  PhaseOutcome outcome = PhaseOutcome::RejectedUnstable;
  double M = 0.0;
  std::size_t tau = 0;
  double energy = 0.0;
};

struct Verdict {
  std::optional<std::size_t> identified_index;
  std::optional<std::size_t> certified_column;
  std::size_t total_steps = 0;
  std::size_t wait_steps = 0;
  std::size_t ident_steps = 0;
  std::vector<PhaseRecord> phases;
};

/// Sweeps the controllers in index order, rejecting each one whose output
/// energy leaves the stable envelope, then identifies the plant on the first
/// certified closed loop.
Verdict run(Session& session, const SwitchedFamily& family, const FamilyAnalysis& analysis,
            const Schedule& schedule);

}  // namespace switchid
