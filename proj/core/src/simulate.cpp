#include "switchid/simulate.hpp"

#include "switchid/errors.hpp"

#include <string>

namespace switchid {

Session::Session(StateSpace plant, NoiseSpec noise, std::uint64_t seed, InitMode init)
    : plant_(std::move(plant)),
      noise_(noise),
      process_(seed, NoiseStream::Process),
      measurement_(seed, NoiseStream::Measurement),
      exploration_(seed, NoiseStream::Exploration) {
  plant_.validate();
  if (noise_.sigma_w < 0.0 || noise_.sigma_u < 0.0 || noise_.sigma_eta < 0.0) {
    throw ValidationError("noise scales must be non-negative");
  }
  const Eigen::Index n = plant_.A.rows();
  if (init == InitMode::StandardNormal) {
    GaussianStream initial(seed, NoiseStream::InitialState);
    x_ = initial.next_vector(n, 1.0);
  } else {
    x_ = Vector::Zero(n);
  }
}

Vector Session::step(const Controller& ctrl, const Vector& exploratory_u) {
  const auto dy = static_cast<Eigen::Index>(plant_.output_dim());
  const auto du = static_cast<Eigen::Index>(plant_.input_dim());
  if (static_cast<Eigen::Index>(ctrl.measurement_dim()) != dy ||
      static_cast<Eigen::Index>(ctrl.control_dim()) != du) {
    throw ValidationError("controller does not match plant dimensions at step " +
                          std::to_string(steps_ + 1));
  }
  if (exploratory_u.size() != du) throw ValidationError("exploratory input has wrong dimension");

  const Vector y = plant_.C * x_ + measurement_.next_vector(dy, noise_.sigma_eta);

  Vector u = exploratory_u;
  if (ctrl.kind == Controller::Kind::Static) {
    u += ctrl.K * y;
  } else {
    // The bank shares one internal state; it restarts at zero when the
    // incoming controller has a different state dimension.
    if (xk_.size() != ctrl.AK.rows()) xk_ = Vector::Zero(ctrl.AK.rows());
    u += ctrl.CK * xk_ + ctrl.DK * y;
    xk_ = ctrl.AK * xk_ + ctrl.BK * y;
  }

  x_ = plant_.A * x_ + plant_.B * u + process_.next_vector(x_.size(), noise_.sigma_w);
  ++steps_;
  return y;
}

Vector Session::draw_exploratory() {
  return exploration_.next_vector(static_cast<Eigen::Index>(plant_.input_dim()), noise_.sigma_u);
}

Session open_session(const StateSpace& plant, const NoiseSpec& noise, std::uint64_t seed,
                     InitMode init) {
  return Session(plant, noise, seed, init);
}

Trajectory rollout(const StateSpace& plant, const Controller& ctrl, const NoiseSpec& noise,
                   std::size_t steps, std::uint64_t seed, InitMode init, bool record_states,
                   std::size_t controller_index) {
  if (steps == 0) throw ValidationError("rollout needs at least one step");
  Session session(plant, noise, seed, init);
  Trajectory traj;
  traj.ys.reserve(steps);
  traj.us.reserve(steps);
  traj.ps.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    if (record_states) traj.xs.push_back(session.state());
    Vector u = session.draw_exploratory();
    traj.ys.push_back(session.step(ctrl, u));
    traj.us.push_back(std::move(u));
    traj.ps.push_back(controller_index);
  }
  return traj;
}

}  // namespace switchid
