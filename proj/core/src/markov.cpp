#include "switchid/markov.hpp"

#include "switchid/errors.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace switchid {

MarkovParameter markov_parameter(const StateSpace& sys, std::size_t horizon) {
  if (horizon == 0) throw ValidationError("markov_parameter: horizon must be at least 1");
  sys.validate();
  const Eigen::Index dy = sys.C.rows();
  const Eigen::Index du = sys.B.cols();
  MarkovParameter out;
  out.horizon = horizon;
  out.G.resize(dy, du * static_cast<Eigen::Index>(horizon));
  Matrix block = sys.C;
  for (std::size_t k = 0; k < horizon; ++k) {
    out.G.middleCols(static_cast<Eigen::Index>(k) * du, du) = block * sys.B;
    block = block * sys.A;
  }
  return out;
}

Vector regressor(std::span<const Vector> us, std::size_t t, std::size_t horizon) {
  if (horizon == 0) throw ValidationError("regressor: horizon must be at least 1");
  if (t < horizon) {
    throw ValidationError("regressor: sample " + std::to_string(t) + " has fewer than " +
                          std::to_string(horizon) + " past inputs");
  }
  if (t > us.size()) throw ValidationError("regressor: sample index past end of inputs");
  const Eigen::Index du = us[t - 1].size();
  Vector z(du * static_cast<Eigen::Index>(horizon));
  for (std::size_t k = 0; k < horizon; ++k) {
    z.segment(static_cast<Eigen::Index>(k) * du, du) = us[t - 1 - k];
  }
  return z;
}

PairwiseSeparation pairwise_directions(std::span<const MarkovParameter> gs) {
  if (gs.size() < 2) throw ValidationError("pairwise_directions needs at least two models");
  PairwiseSeparation out;
  out.gamma = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gs.size(); ++i) {
    for (std::size_t j = i + 1; j < gs.size(); ++j) {
      if (gs[i].G.rows() != gs[j].G.rows() || gs[i].G.cols() != gs[j].G.cols()) {
        throw ValidationError("pairwise_directions: Markov parameters differ in shape");
      }
      const SingularTriple t = top_singular_triple(gs[i].G - gs[j].G);
      if (t.value <= 1e-12) {
        throw AssumptionError("models " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                              " have identical Markov parameters; the family is not separable");
      }
      out.directions.push_back(CriticalDirection{i, j, t.left, t.right, t.value});
      out.gamma = std::min(out.gamma, t.value / 2.0);
    }
  }
  return out;
}

const CriticalDirection& find_direction(std::span<const CriticalDirection> directions,
                                        std::size_t a, std::size_t b) {
  const std::size_t lo = std::min(a, b);
  const std::size_t hi = std::max(a, b);
  for (const auto& d : directions) {
    if (d.i == lo && d.j == hi) return d;
  }
  throw ValidationError("no critical direction for models " + std::to_string(lo + 1) + " and " +
                        std::to_string(hi + 1));
}

std::size_t choose_horizon(std::span<const StateSpace> stable_systems, double bias_fraction) {
  if (!(bias_fraction > 0.0 && bias_fraction < 1.0)) {
    throw ValidationError("bias_fraction must lie in (0, 1)");
  }
  if (stable_systems.empty()) throw ValidationError("choose_horizon: no stable systems");
  std::vector<Matrix> blocks;
  for (const auto& s : stable_systems) {
    if (!(spectral_radius(s.A) < 1.0)) throw UnstableError("choose_horizon: unstable system");
    blocks.push_back(s.C * s.A);
  }
  for (std::size_t h = 1; h <= kMaxHorizon; ++h) {
    double worst = 0.0;
    for (const auto& b : blocks) worst = std::max(worst, operator_norm(b));
    if (worst <= bias_fraction) return h;
    for (std::size_t k = 0; k < blocks.size(); ++k) blocks[k] = blocks[k] * stable_systems[k].A;
  }
  throw NumericalError("choose_horizon: ||C A^h|| stays above " + std::to_string(bias_fraction) +
                       " up to h = " + std::to_string(kMaxHorizon));
}

}  // namespace switchid
