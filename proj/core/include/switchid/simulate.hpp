#pragma once

#include "switchid/linalg.hpp"
#include "switchid/rng.hpp"
#include "switchid/state_space.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace switchid {

enum class InitMode { StandardNormal, Zero };

// Ground-truth plant driven by a controller plus an additive exploratory
// input. Each step emits y_t = C x_t + eta_t and then advances
// x_{t+1} = A x_t + B (controller(y_t) + u_t) + w_t.
//
// Single owner; not safe for concurrent mutation.
class Session {
 public:
  Session(StateSpace plant, NoiseSpec noise, std::uint64_t seed, InitMode init);

  Vector step(const Controller& ctrl, const Vector& exploratory_u);

  // Fresh N(0, sigma_u^2 I) draw from the exploration stream.
  Vector draw_exploratory();

  // Number of completed steps.
  std::size_t steps() const { return steps_; }
  const Vector& state() const { return x_; }
  const Vector& controller_state() const { return xk_; }
  const StateSpace& plant() const { return plant_; }
  const NoiseSpec& noise() const { return noise_; }

 private:
  StateSpace plant_;
  NoiseSpec noise_;
  GaussianStream process_;
  GaussianStream measurement_;
  GaussianStream exploration_;
  Vector x_;
  Vector xk_;
  std::size_t steps_ = 0;
};

Session open_session(const StateSpace& plant, const NoiseSpec& noise, std::uint64_t seed,
                     InitMode init);

struct Trajectory {
  std::vector<Vector> ys;
  std::vector<Vector> us;           // exploratory inputs only
  std::vector<std::size_t> ps;      // active controller index
  std::vector<Vector> xs;           // plant states before each step (optional)

  std::size_t size() const { return ys.size(); }
};

Trajectory rollout(const StateSpace& plant, const Controller& ctrl, const NoiseSpec& noise,
                   std::size_t steps, std::uint64_t seed, InitMode init,
                   bool record_states = false, std::size_t controller_index = 0);

}  // namespace switchid
