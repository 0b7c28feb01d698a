#pragma once

#include "switchid/linalg.hpp"
#include "switchid/markov.hpp"
#include "switchid/state_space.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace switchid {

// N candidate plants, one controller per plant. Indices are 0-based in the
// library; the config file and trial records use 1-based indices.
struct SwitchedFamily {
  std::vector<StateSpace> plants;
  std::vector<Controller> controllers;
  NoiseSpec noise;
  std::size_t true_index = 0;

  std::size_t size() const { return plants.size(); }
  void validate() const;
};

// Closed loops of plant i under controller j, stored row-major.
struct ClosedLoopGrid {
  std::size_t n = 0;
  std::vector<StateSpace> entries;

  const StateSpace& at(std::size_t plant, std::size_t controller) const {
    return entries[plant * n + controller];
  }
};

StateSpace assemble_closed_loop(const StateSpace& plant, const Controller& ctrl);

ClosedLoopGrid build_grid(const SwitchedFamily& family);

/// Closed loops of the grid with spectral radius below one.
std::vector<StateSpace> stable_entries(const ClosedLoopGrid& grid);

enum class GammaScope { AllColumns, StableColumns };

struct FamilyConstants {
  double m_a = 1.0;      // max {1, ||A||}
  double m_s = 1.0;      // max {1, ||B||, ||C||}
  double m_p = 0.0;      // max ||P|| over stable entries
  double m_t = 0.0;      // max tr(P) over stable entries
  double sigma_m = 0.0;  // max noise scale
  double c_e = 1.0;      // max {1, 1 / log(1 + eps_a)}
  double c_r = 0.0;      // m_p (22 / eps_c^2 + 1) sigma_m^2 c_e
  double c_p = 2.0;      // 2 max {1, m_p / eps_c^2}
  double c_s = 0.0;      // max 5 (sw^2 tr P + su^2 tr B'PB + se^2 d_x) log(1/delta')
};

struct GridEntry {
  StateSpace system;
  double rho = 0.0;
  bool stable = false;
  ObservabilityMargin observability;
  MarkovParameter markov;
  // Lyapunov solution of A'PA - P + C'C = 0; empty for unstable entries.
  Matrix lyapunov;
};

struct FamilyAnalysis {
  std::size_t n = 0;
  std::size_t horizon = 0;
  double delta_prime = 0.0;
  std::vector<GridEntry> grid;  // row-major (plant, controller)
  std::optional<double> eps_a;
  double eps_c = 0.0;
  double gamma = 0.0;
  std::vector<double> column_gamma;
  std::vector<std::vector<CriticalDirection>> column_directions;
  FamilyConstants constants;
  // Largest closed-loop state dimension across the grid.
  std::size_t state_dim = 0;
  NoiseSpec noise;

  const GridEntry& at(std::size_t plant, std::size_t controller) const {
    return grid[plant * n + controller];
  }
  std::vector<StateSpace> stable_systems() const;
  std::vector<MarkovParameter> column_markov(std::size_t controller) const;
  bool any_stable() const;
};

/// Validates the family against the separation, instability-margin and
/// observability requirements and evaluates the switching-schedule constants.
///
/// Throws AssumptionError naming the offending grid entry or column when
/// eps_c = 0, gamma = 0, or an unstable entry sits within 1e-9 of the unit
/// circle. With a single model gamma is +infinity.
FamilyAnalysis analyze_family(const SwitchedFamily& family, std::size_t horizon,
                              double delta_prime,
                              GammaScope scope = GammaScope::AllColumns);

}  // namespace switchid
