#include "switchid/system.hpp"

#include "switchid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace switchid {

namespace {

std::string entry_name(std::size_t plant, std::size_t controller) {
  return "(plant " + std::to_string(plant + 1) + ", controller " + std::to_string(controller + 1) +
         ")";
}

void require_positive_scale(double sigma, const char* name) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ValidationError(std::string(name) + " must be a positive finite scale");
  }
}

}  // namespace

void StateSpace::validate() const {
  require_square(A, "A");
  require_finite(A, "A");
  require_finite(B, "B");
  require_finite(C, "C");
  if (B.rows() != A.rows()) throw ValidationError("B must have as many rows as A");
  if (C.cols() != A.cols()) throw ValidationError("C must have as many columns as A");
  if (A.rows() == 0 || B.cols() == 0 || C.rows() == 0) {
    throw ValidationError("state, input and output dimensions must be positive");
  }
}

Controller Controller::make_static(Matrix gain) {
  Controller c;
  c.kind = Kind::Static;
  c.K = std::move(gain);
  return c;
}

Controller Controller::make_dynamic(Matrix ak, Matrix bk, Matrix ck, Matrix dk) {
  Controller c;
  c.kind = Kind::Dynamic;
  c.AK = std::move(ak);
  c.BK = std::move(bk);
  c.CK = std::move(ck);
  c.DK = std::move(dk);
  return c;
}

std::size_t Controller::state_dim() const {
  return kind == Kind::Static ? 0 : static_cast<std::size_t>(AK.rows());
}

std::size_t Controller::measurement_dim() const {
  return static_cast<std::size_t>(kind == Kind::Static ? K.cols() : DK.cols());
}

std::size_t Controller::control_dim() const {
  return static_cast<std::size_t>(kind == Kind::Static ? K.rows() : DK.rows());
}

void Controller::validate() const {
  if (kind == Kind::Static) {
    require_finite(K, "K");
    return;
  }
  require_square(AK, "AK");
  for (const auto* m : {&AK, &BK, &CK, &DK}) require_finite(*m, "dynamic controller matrix");
  if (BK.rows() != AK.rows() || CK.cols() != AK.cols() || CK.rows() != DK.rows() ||
      BK.cols() != DK.cols()) {
    throw ValidationError("dynamic controller (AK, BK, CK, DK) is not conformant");
  }
}

NoiseSpec NoiseSpec::checked(double sigma_w, double sigma_u, double sigma_eta) {
  NoiseSpec n{sigma_w, sigma_u, sigma_eta};
  n.validate();
  return n;
}

void NoiseSpec::validate() const {
  require_positive_scale(sigma_w, "sigma_w");
  require_positive_scale(sigma_u, "sigma_u");
  require_positive_scale(sigma_eta, "sigma_eta");
}

void SwitchedFamily::validate() const {
  if (plants.empty()) throw ValidationError("family needs at least one plant");
  if (controllers.size() != plants.size()) {
    throw ValidationError("family has " + std::to_string(plants.size()) + " plants but " +
                          std::to_string(controllers.size()) + " controllers");
  }
  for (std::size_t i = 0; i < plants.size(); ++i) {
    try {
      plants[i].validate();
    } catch (const ValidationError& e) {
      throw ValidationError("plant " + std::to_string(i + 1) + ": " + e.what());
    }
    const auto& p0 = plants.front();
    const auto& p = plants[i];
    if (p.state_dim() != p0.state_dim() || p.input_dim() != p0.input_dim() ||
        p.output_dim() != p0.output_dim()) {
      throw ValidationError("plant " + std::to_string(i + 1) +
                            " dimensions differ from plant 1");
    }
  }
  for (std::size_t j = 0; j < controllers.size(); ++j) {
    try {
      controllers[j].validate();
    } catch (const ValidationError& e) {
      throw ValidationError("controller " + std::to_string(j + 1) + ": " + e.what());
    }
  }
  noise.validate();
  if (true_index >= plants.size()) throw ValidationError("true_index out of range");
}

StateSpace assemble_closed_loop(const StateSpace& plant, const Controller& ctrl) {
  plant.validate();
  ctrl.validate();
  if (ctrl.measurement_dim() != plant.output_dim() || ctrl.control_dim() != plant.input_dim()) {
    throw ValidationError("controller dimensions (" + std::to_string(ctrl.control_dim()) + "x" +
                          std::to_string(ctrl.measurement_dim()) +
                          ") do not match plant (d_u=" + std::to_string(plant.input_dim()) +
                          ", d_y=" + std::to_string(plant.output_dim()) + ")");
  }
  if (ctrl.kind == Controller::Kind::Static) {
    return StateSpace{plant.A + plant.B * ctrl.K * plant.C, plant.B, plant.C};
  }

  const Eigen::Index n = plant.A.rows();
  const Eigen::Index nk = ctrl.AK.rows();
  StateSpace out;
  out.A = Matrix::Zero(n + nk, n + nk);
  out.A.topLeftCorner(n, n) = plant.A + plant.B * ctrl.DK * plant.C;
  out.A.topRightCorner(n, nk) = plant.B * ctrl.CK;
  out.A.bottomLeftCorner(nk, n) = ctrl.BK * plant.C;
  out.A.bottomRightCorner(nk, nk) = ctrl.AK;
  out.B = Matrix::Zero(n + nk, plant.B.cols());
  out.B.topRows(n) = plant.B;
  out.C = Matrix::Zero(plant.C.rows(), n + nk);
  out.C.leftCols(n) = plant.C;
  return out;
}

ClosedLoopGrid build_grid(const SwitchedFamily& family) {
  ClosedLoopGrid grid;
  grid.n = family.size();
  grid.entries.reserve(grid.n * grid.n);
  for (std::size_t i = 0; i < grid.n; ++i) {
    for (std::size_t j = 0; j < grid.n; ++j) {
      try {
        grid.entries.push_back(assemble_closed_loop(family.plants[i], family.controllers[j]));
      } catch (const ValidationError& e) {
        throw ValidationError(entry_name(i, j) + ": " + e.what());
      }
    }
  }
  return grid;
}

std::vector<StateSpace> stable_entries(const ClosedLoopGrid& grid) {
  std::vector<StateSpace> out;
  for (const auto& e : grid.entries) {
    if (spectral_radius(e.A) < 1.0) out.push_back(e);
  }
  return out;
}

std::vector<StateSpace> FamilyAnalysis::stable_systems() const {
  std::vector<StateSpace> out;
  for (const auto& e : grid) {
    if (e.stable) out.push_back(e.system);
  }
  return out;
}

std::vector<MarkovParameter> FamilyAnalysis::column_markov(std::size_t controller) const {
  std::vector<MarkovParameter> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(at(i, controller).markov);
  return out;
}

bool FamilyAnalysis::any_stable() const {
  return std::any_of(grid.begin(), grid.end(), [](const GridEntry& e) { return e.stable; });
}

FamilyAnalysis analyze_family(const SwitchedFamily& family, std::size_t horizon,
                              double delta_prime, GammaScope scope) {
  family.validate();
  if (horizon == 0) throw ValidationError("horizon must be at least 1");
  if (!(delta_prime > 0.0 && delta_prime < std::exp(-1.0))) {
    throw ValidationError("delta' must lie in (0, 1/e)");
  }

  const ClosedLoopGrid closed = build_grid(family);
  FamilyAnalysis out;
  out.n = family.size();
  out.horizon = horizon;
  out.delta_prime = delta_prime;
  out.noise = family.noise;
  out.grid.reserve(closed.entries.size());

  for (std::size_t i = 0; i < out.n; ++i) {
    for (std::size_t j = 0; j < out.n; ++j) {
      GridEntry e;
      e.system = closed.at(i, j);
      e.rho = spectral_radius(e.system.A);
      e.stable = e.rho < 1.0;
      e.observability = observability_margin(e.system.C, e.system.A);
      e.markov = markov_parameter(e.system, horizon);
      if (e.stable) {
        e.lyapunov = solve_discrete_lyapunov(e.system.A, e.system.C.transpose() * e.system.C);
      } else if (e.rho < 1.0 + 1e-9) {
        throw AssumptionError(entry_name(i, j) + " is marginally unstable (rho = " +
                              std::to_string(e.rho) + "); no instability margin eps_a exists");
      }
      out.state_dim = std::max(out.state_dim, e.system.state_dim());
      out.grid.push_back(std::move(e));
    }
  }

  out.eps_c = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.n; ++i) {
    for (std::size_t j = 0; j < out.n; ++j) {
      const auto& e = out.at(i, j);
      if (e.observability.eigen <= 1e-10) {
        throw AssumptionError(entry_name(i, j) +
                              " is not strictly observable: some eigenvector q has C q = 0");
      }
      out.eps_c = std::min(out.eps_c, e.observability.eigen);
      if (!e.stable) {
        const double margin = e.rho - 1.0;
        out.eps_a = out.eps_a ? std::min(*out.eps_a, margin) : margin;
      }
    }
  }

  out.gamma = std::numeric_limits<double>::infinity();
  out.column_gamma.assign(out.n, std::numeric_limits<double>::infinity());
  out.column_directions.resize(out.n);
  for (std::size_t j = 0; j < out.n; ++j) {
    for (std::size_t a = 0; a < out.n; ++a) {
      for (std::size_t b = a + 1; b < out.n; ++b) {
        const SingularTriple t = top_singular_triple(out.at(a, j).markov.G - out.at(b, j).markov.G);
        out.column_directions[j].push_back(CriticalDirection{a, b, t.left, t.right, t.value});
        const bool counted = scope == GammaScope::AllColumns ||
                             (out.at(a, j).stable && out.at(b, j).stable);
        if (!counted) continue;
        if (t.value <= 1e-12) {
          throw AssumptionError("controller " + std::to_string(j + 1) + ": plants " +
                                std::to_string(a + 1) + " and " + std::to_string(b + 1) +
                                " have identical Markov parameters at horizon " +
                                std::to_string(horizon) + " (gamma = 0)");
        }
        out.column_gamma[j] = std::min(out.column_gamma[j], t.value / 2.0);
      }
    }
    out.gamma = std::min(out.gamma, out.column_gamma[j]);
  }

  FamilyConstants& k = out.constants;
  const NoiseSpec& s = family.noise;
  const double log_inv = std::log(1.0 / delta_prime);
  for (const auto& e : out.grid) {
    k.m_a = std::max(k.m_a, operator_norm(e.system.A));
    k.m_s = std::max({k.m_s, operator_norm(e.system.B), operator_norm(e.system.C)});
    if (!e.stable) continue;
    const Matrix& p = e.lyapunov;
    k.m_p = std::max(k.m_p, operator_norm(p));
    k.m_t = std::max(k.m_t, p.trace());
    const double rate = s.sigma_w * s.sigma_w * p.trace() +
                        s.sigma_u * s.sigma_u * (e.system.B.transpose() * p * e.system.B).trace() +
                        s.sigma_eta * s.sigma_eta * static_cast<double>(e.system.state_dim());
    k.c_s = std::max(k.c_s, 5.0 * rate * log_inv);
  }
  k.sigma_m = std::max({s.sigma_w, s.sigma_u, s.sigma_eta});
  k.c_e = out.eps_a ? std::max(1.0, 1.0 / std::log1p(*out.eps_a)) : 1.0;
  const double inv_eps_c2 = 1.0 / (out.eps_c * out.eps_c);
  k.c_r = k.m_p * (22.0 * inv_eps_c2 + 1.0) * k.sigma_m * k.sigma_m * k.c_e;
  k.c_p = 2.0 * std::max(1.0, k.m_p * inv_eps_c2);
  return out;
}

}  // namespace switchid
