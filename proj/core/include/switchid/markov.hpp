#pragma once

#include "switchid/linalg.hpp"
#include "switchid/state_space.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace switchid {

// G = [CB, CAB, ..., CA^{h-1}B], d_y x (h d_u).
struct MarkovParameter {
  Matrix G;
  std::size_t horizon = 0;
};

// Witness (u, v) of the operator-norm gap between models i < j (0-based).
struct CriticalDirection {
  std::size_t i = 0;
  std::size_t j = 0;
  Vector u;
  Vector v;
  double gap = 0.0;
};

struct PairwiseSeparation {
  double gamma = 0.0;
  std::vector<CriticalDirection> directions;
};

MarkovParameter markov_parameter(const StateSpace& sys, std::size_t horizon);

/// Stacked past inputs [u_{t-1}; u_{t-2}; ...; u_{t-h}] for 0-based sample
/// index t. Requires t >= h.
Vector regressor(std::span<const Vector> us, std::size_t t, std::size_t horizon);

/// Top singular pair of every difference G_i - G_j, i < j, and gamma = half the
/// smallest gap. Throws AssumptionError if two parameters coincide.
PairwiseSeparation pairwise_directions(std::span<const MarkovParameter> gs);

/// Looks up the direction for the unordered pair {a, b}; throws if absent.
const CriticalDirection& find_direction(std::span<const CriticalDirection> directions,
                                        std::size_t a, std::size_t b);

inline constexpr std::size_t kMaxHorizon = 200;

/// Smallest h >= 1 with max_k ||C_k A_k^h|| <= bias_fraction over the given
/// stable systems. Throws NumericalError past kMaxHorizon.
std::size_t choose_horizon(std::span<const StateSpace> stable_systems, double bias_fraction);

}  // namespace switchid
