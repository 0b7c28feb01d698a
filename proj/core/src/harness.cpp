#include "switchid/harness.hpp"

#include "switchid/errors.hpp"
#include "switchid/guard.hpp"
#include "switchid/ident.hpp"
#include "switchid/markov.hpp"
#include "switchid/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace switchid {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// JSON <-> matrices

Matrix matrix_from_json(const json& j, const std::string& name) {
  if (j.is_number()) {
    Matrix m(1, 1);
    m(0, 0) = j.get<double>();
    return m;
  }
  if (!j.is_array() || j.empty()) {
    throw ValidationError(name + ": expected a number or a non-empty array of rows");
  }
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].empty()) {
      throw ValidationError(name + ": row " + std::to_string(r + 1) + " is not a non-empty array");
    }
    if (r == 0) cols = j[r].size();
    if (j[r].size() != cols) throw ValidationError(name + ": rows have different lengths");
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ValidationError(name + ": non-numeric entry");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  require_finite(m, name);
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

void require_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!keys.contains(item.key())) {
      throw ValidationError(where + ": unknown key \"" + item.key() + "\"");
    }
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + "." + key + " has the wrong type");
  }
}

std::size_t one_based(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 1) {
    throw ValidationError(where + " must be an integer index >= 1");
  }
  return static_cast<std::size_t>(j.get<long long>() - 1);
}

std::size_t positive_count(const json& j, const std::string& where, bool allow_zero = false) {
  if (!j.is_number_integer() || j.get<long long>() < (allow_zero ? 0 : 1)) {
    throw ValidationError(where + (allow_zero ? " must be a non-negative integer"
                                              : " must be a positive integer"));
  }
  return static_cast<std::size_t>(j.get<long long>());
}

Mode mode_from_string(const std::string& s) {
  if (s == "identify") return Mode::Identify;
  if (s == "guard") return Mode::Guard;
  if (s == "supervise") return Mode::Supervise;
  if (s == "montecarlo") return Mode::MonteCarlo;
  throw ValidationError("mode must be identify, guard, supervise or montecarlo");
}

StateSpace plant_from_json(const json& j, std::size_t index) {
  const std::string where = "plant " + std::to_string(index + 1);
  require_keys(j, where, {"A", "B", "C"});
  for (const char* key : {"A", "B", "C"}) {
    if (!j.contains(key)) throw ValidationError(where + ": missing " + key);
  }
  return StateSpace{matrix_from_json(j["A"], where + ".A"), matrix_from_json(j["B"], where + ".B"),
                    matrix_from_json(j["C"], where + ".C")};
}

Controller controller_from_json(const json& j, std::size_t index) {
  const std::string where = "controller " + std::to_string(index + 1);
  require_keys(j, where, {"type", "K", "AK", "BK", "CK", "DK"});
  const std::string type = get_or<std::string>(j, "type", j.contains("K") ? "static" : "dynamic", where);
  if (type == "static") {
    if (!j.contains("K")) throw ValidationError(where + ": static controller needs K");
    return Controller::make_static(matrix_from_json(j["K"], where + ".K"));
  }
  if (type != "dynamic") throw ValidationError(where + ": type must be static or dynamic");
  for (const char* key : {"AK", "BK", "CK", "DK"}) {
    if (!j.contains(key)) throw ValidationError(where + ": dynamic controller needs " + key);
  }
  return Controller::make_dynamic(
      matrix_from_json(j["AK"], where + ".AK"), matrix_from_json(j["BK"], where + ".BK"),
      matrix_from_json(j["CK"], where + ".CK"), matrix_from_json(j["DK"], where + ".DK"));
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

json phase_to_json(const PhaseRecord& p) {
  return json{{"controller", p.controller + 1},
              {"steps", p.steps},
              {"outcome", to_string(p.outcome)},
              {"M", p.M},
              {"tau", p.tau},
              {"energy", p.energy}};
}

json schedule_to_json(const Schedule& s) {
  json tf = json::array();
  for (auto t : s.tau_f_per_column) tf.push_back(t);
  return json{{"tau", s.tau},
              {"M", s.M},
              {"waits", s.waits},
              {"tau_f", s.tau_f},
              {"tau_f_per_column", tf},
              {"increment", s.increment},
              {"delta", s.delta},
              {"delta_prime", s.delta_prime},
              {"guard_rate", s.guard_rate},
              {"step_bound", s.step_bound()},
              {"warnings", s.warnings}};
}

std::size_t nearest_rank(const std::vector<std::size_t>& sorted, double q) {
  if (sorted.empty()) return 0;
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

std::size_t identify_column(const Experiment& e) {
  return e.config.identify.column.value_or(e.config.family.true_index);
}

// Runs fn(k) for k in [0, count) on up to `threads` workers. The first
// exception by index is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        fn(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::Identify:
      return "identify";
    case Mode::Guard:
      return "guard";
    case Mode::Supervise:
      return "supervise";
    case Mode::MonteCarlo:
      return "montecarlo";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  family.validate();
  build_grid(family);
  if (trials < 1) throw ValidationError("trials must be at least 1");
  if (!(delta > 0.0 && delta < std::exp(-1.0))) throw ValidationError("delta must lie in (0, 1/e)");
  if (threads < 1) throw ValidationError("threads must be at least 1");
  if (horizon.explicit_h && *horizon.explicit_h == 0) throw ValidationError("horizon.h must be >= 1");
  if (!(horizon.bias_fraction > 0.0 && horizon.bias_fraction < 1.0)) {
    throw ValidationError("horizon.bias_fraction must lie in (0, 1)");
  }
  if (!(wait_multiplier >= 0.0)) throw ValidationError("wait_multiplier must be >= 0");
  const std::size_t n = family.size();
  if (identify.column && *identify.column >= n) throw ValidationError("identify.column out of range");
  if (guard.column >= n) throw ValidationError("guard.column out of range");
  if (!(guard.M >= 0.0)) throw ValidationError("guard.M must be >= 0");
  if (simulate.controller && *simulate.controller >= n) {
    throw ValidationError("simulate.controller out of range");
  }
  if (!(scaling.success > 0.0 && scaling.success <= 1.0)) {
    throw ValidationError("scaling.success must lie in (0, 1]");
  }
  for (double g : scaling.gammas) {
    if (!(g > 0.0)) throw ValidationError("scaling.gammas must be positive");
  }
}

ExperimentConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  require_keys(root, "config",
               {"family", "horizon", "gamma_scope", "delta", "trials", "base_seed", "mode",
                "output", "init", "wait_multiplier", "threads", "record_timing", "identify",
                "guard", "scaling", "simulate"});
  if (!root.contains("family")) throw ValidationError("config: missing family");

  ExperimentConfig cfg;
  const json& fam = root["family"];
  require_keys(fam, "family", {"plants", "controllers", "noise", "true_index"});
  if (!fam.contains("plants") || !fam["plants"].is_array() || fam["plants"].empty()) {
    throw ValidationError("family.plants must be a non-empty array");
  }
  if (!fam.contains("controllers") || !fam["controllers"].is_array()) {
    throw ValidationError("family.controllers must be an array");
  }
  for (std::size_t i = 0; i < fam["plants"].size(); ++i) {
    cfg.family.plants.push_back(plant_from_json(fam["plants"][i], i));
  }
  for (std::size_t j = 0; j < fam["controllers"].size(); ++j) {
    cfg.family.controllers.push_back(controller_from_json(fam["controllers"][j], j));
  }
  if (fam.contains("noise")) {
    const json& nz = fam["noise"];
    require_keys(nz, "family.noise", {"sigma_w", "sigma_u", "sigma_eta"});
    cfg.family.noise.sigma_w = get_or<double>(nz, "sigma_w", 1.0, "family.noise");
    cfg.family.noise.sigma_u = get_or<double>(nz, "sigma_u", 1.0, "family.noise");
    cfg.family.noise.sigma_eta = get_or<double>(nz, "sigma_eta", 1.0, "family.noise");
  }
  cfg.family.true_index = fam.contains("true_index") ? one_based(fam["true_index"], "family.true_index") : 0;

  if (root.contains("horizon")) {
    const json& h = root["horizon"];
    require_keys(h, "horizon", {"h", "bias_fraction"});
    if (h.contains("h")) cfg.horizon.explicit_h = positive_count(h["h"], "horizon.h");
    cfg.horizon.bias_fraction = get_or<double>(h, "bias_fraction", 0.1, "horizon");
  }
  const std::string scope = get_or<std::string>(root, "gamma_scope", "all-columns", "config");
  if (scope == "all-columns") {
    cfg.gamma_scope = GammaScope::AllColumns;
  } else if (scope == "stable-columns") {
    cfg.gamma_scope = GammaScope::StableColumns;
  } else {
    throw ValidationError("gamma_scope must be all-columns or stable-columns");
  }
  cfg.delta = get_or<double>(root, "delta", 0.1, "config");
  if (root.contains("trials")) cfg.trials = positive_count(root["trials"], "trials", true);
  if (root.contains("base_seed")) {
    if (!root["base_seed"].is_number_unsigned()) throw ValidationError("base_seed must be a u64");
    cfg.base_seed = root["base_seed"].get<std::uint64_t>();
  }
  cfg.mode = mode_from_string(get_or<std::string>(root, "mode", "supervise", "config"));
  cfg.output = get_or<std::string>(root, "output", "results", "config");
  const std::string init = get_or<std::string>(root, "init", "standard-normal", "config");
  if (init == "standard-normal") {
    cfg.init = InitMode::StandardNormal;
  } else if (init == "zero") {
    cfg.init = InitMode::Zero;
  } else {
    throw ValidationError("init must be standard-normal or zero");
  }
  cfg.wait_multiplier = get_or<double>(root, "wait_multiplier", 1.0, "config");
  if (root.contains("threads")) cfg.threads = positive_count(root["threads"], "threads");
  cfg.record_timing = get_or<bool>(root, "record_timing", false, "config");

  if (root.contains("identify")) {
    const json& j = root["identify"];
    require_keys(j, "identify", {"column", "window"});
    if (j.contains("column")) cfg.identify.column = one_based(j["column"], "identify.column");
    if (j.contains("window")) cfg.identify.window = positive_count(j["window"], "identify.window");
  }
  if (root.contains("guard")) {
    const json& j = root["guard"];
    require_keys(j, "guard", {"column", "M", "tau"});
    if (j.contains("column")) cfg.guard.column = one_based(j["column"], "guard.column");
    cfg.guard.M = get_or<double>(j, "M", 0.0, "guard");
    if (j.contains("tau")) cfg.guard.tau = positive_count(j["tau"], "guard.tau");
  }
  if (root.contains("scaling")) {
    const json& j = root["scaling"];
    require_keys(j, "scaling", {"gammas", "trials", "success", "tau_cap"});
    cfg.scaling.gammas = get_or<std::vector<double>>(j, "gammas", {}, "scaling");
    if (j.contains("trials")) cfg.scaling.trials = positive_count(j["trials"], "scaling.trials");
    cfg.scaling.success = get_or<double>(j, "success", 0.95, "scaling");
    if (j.contains("tau_cap")) cfg.scaling.tau_cap = positive_count(j["tau_cap"], "scaling.tau_cap");
  }
  if (root.contains("simulate")) {
    const json& j = root["simulate"];
    require_keys(j, "simulate", {"steps", "controller"});
    if (j.contains("steps")) cfg.simulate.steps = positive_count(j["steps"], "simulate.steps");
    if (j.contains("controller")) {
      cfg.simulate.controller = one_based(j["controller"], "simulate.controller");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  ExperimentConfig cfg = parse_config(buffer.str());
  prepare_experiment(cfg);
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json plants = json::array();
  for (const auto& p : cfg.family.plants) {
    plants.push_back({{"A", matrix_to_json(p.A)}, {"B", matrix_to_json(p.B)}, {"C", matrix_to_json(p.C)}});
  }
  json controllers = json::array();
  for (const auto& c : cfg.family.controllers) {
    if (c.kind == Controller::Kind::Static) {
      controllers.push_back({{"type", "static"}, {"K", matrix_to_json(c.K)}});
    } else {
      controllers.push_back({{"type", "dynamic"},
                             {"AK", matrix_to_json(c.AK)},
                             {"BK", matrix_to_json(c.BK)},
                             {"CK", matrix_to_json(c.CK)},
                             {"DK", matrix_to_json(c.DK)}});
    }
  }
  json root;
  root["family"] = {{"plants", plants},
                    {"controllers", controllers},
                    {"noise",
                     {{"sigma_w", cfg.family.noise.sigma_w},
                      {"sigma_u", cfg.family.noise.sigma_u},
                      {"sigma_eta", cfg.family.noise.sigma_eta}}},
                    {"true_index", cfg.family.true_index + 1}};
  json horizon = {{"bias_fraction", cfg.horizon.bias_fraction}};
  if (cfg.horizon.explicit_h) horizon["h"] = *cfg.horizon.explicit_h;
  root["horizon"] = horizon;
  root["gamma_scope"] = cfg.gamma_scope == GammaScope::AllColumns ? "all-columns" : "stable-columns";
  root["delta"] = cfg.delta;
  root["trials"] = cfg.trials;
  root["base_seed"] = cfg.base_seed;
  root["mode"] = to_string(cfg.mode);
  root["output"] = cfg.output;
  root["init"] = cfg.init == InitMode::StandardNormal ? "standard-normal" : "zero";
  root["wait_multiplier"] = cfg.wait_multiplier;
  root["threads"] = cfg.threads;
  root["record_timing"] = cfg.record_timing;
  json ident = json::object();
  if (cfg.identify.column) ident["column"] = *cfg.identify.column + 1;
  if (cfg.identify.window) ident["window"] = *cfg.identify.window;
  root["identify"] = ident;
  json guard = {{"column", cfg.guard.column + 1}, {"M", cfg.guard.M}};
  if (cfg.guard.tau) guard["tau"] = *cfg.guard.tau;
  root["guard"] = guard;
  root["scaling"] = {{"gammas", cfg.scaling.gammas},
                     {"trials", cfg.scaling.trials},
                     {"success", cfg.scaling.success},
                     {"tau_cap", cfg.scaling.tau_cap}};
  json sim = {{"steps", cfg.simulate.steps}};
  if (cfg.simulate.controller) sim["controller"] = *cfg.simulate.controller + 1;
  root["simulate"] = sim;
  return root.dump(2);
}

Experiment prepare_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::size_t n = config.family.size();
  std::size_t h = 0;
  if (config.horizon.explicit_h) {
    h = *config.horizon.explicit_h;
  } else {
    const std::vector<StateSpace> stable = stable_entries(build_grid(config.family));
    if (stable.empty()) {
      throw ValidationError("no closed loop is stable; set horizon.h explicitly");
    }
    h = choose_horizon(stable, config.horizon.bias_fraction);
  }
  const double delta_prime = config.delta / (4.0 * static_cast<double>(n));
  Experiment e{config, analyze_family(config.family, h, delta_prime, config.gamma_scope), {}};
  e.schedule = dwell_schedule(e.analysis, config.delta, n, ScheduleOptions{config.wait_multiplier});
  return e;
}

std::string analysis_to_json(const Experiment& e) {
  const FamilyAnalysis& a = e.analysis;
  json grid = json::array();
  for (std::size_t i = 0; i < a.n; ++i) {
    for (std::size_t j = 0; j < a.n; ++j) {
      const GridEntry& g = a.at(i, j);
      json entry = {{"plant", i + 1},
                    {"controller", j + 1},
                    {"rho", g.rho},
                    {"stable", g.stable},
                    {"eps_c", g.observability.eigen},
                    {"observability_sigma_min", g.observability.stacked},
                    {"markov", matrix_to_json(g.markov.G)}};
      if (g.stable) entry["trace_P"] = g.lyapunov.trace();
      grid.push_back(std::move(entry));
    }
  }
  json directions = json::array();
  for (std::size_t j = 0; j < a.n; ++j) {
    for (const auto& d : a.column_directions[j]) {
      directions.push_back({{"controller", j + 1},
                            {"i", d.i + 1},
                            {"j", d.j + 1},
                            {"gap", d.gap},
                            {"u", vector_to_json(d.u)},
                            {"v", vector_to_json(d.v)}});
    }
  }
  const auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json column_gamma = json::array();
  for (double g : a.column_gamma) column_gamma.push_back(finite_or_null(g));
  const FamilyConstants& k = a.constants;
  json root = {{"n", a.n},
               {"horizon", a.horizon},
               {"state_dim", a.state_dim},
               {"delta_prime", a.delta_prime},
               {"eps_a", a.eps_a ? json(*a.eps_a) : json(nullptr)},
               {"eps_c", a.eps_c},
               {"gamma", finite_or_null(a.gamma)},
               {"column_gamma", column_gamma},
               {"constants",
                {{"m_a", k.m_a},
                 {"m_s", k.m_s},
                 {"m_p", k.m_p},
                 {"m_t", k.m_t},
                 {"sigma_m", k.sigma_m},
                 {"c_e", k.c_e},
                 {"c_r", k.c_r},
                 {"c_p", k.c_p},
                 {"c_s", k.c_s}}},
               {"grid", grid},
               {"critical_directions", directions},
               {"schedule", schedule_to_json(e.schedule)}};
  return root.dump(2);
}

// ---------------------------------------------------------------------------
// Trials

TrialRecord run_trial(const Experiment& e, std::size_t trial) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig& cfg = e.config;
  const SwitchedFamily& fam = cfg.family;
  const std::size_t truth = fam.true_index;

  TrialRecord rec;
  rec.trial = trial;
  rec.seed = derive_seed(cfg.base_seed, trial);
  rec.mode = cfg.mode;

  switch (cfg.mode) {
    case Mode::Supervise:
    case Mode::MonteCarlo: {
      Session session(fam.plants[truth], fam.noise, rec.seed, cfg.init);
      const Verdict v = run(session, fam, e.analysis, e.schedule);
      if (v.total_steps > e.schedule.step_bound()) {
        throw NumericalError("trial " + std::to_string(trial) + " used " +
                             std::to_string(v.total_steps) + " steps, above the schedule bound " +
                             std::to_string(e.schedule.step_bound()));
      }
      rec.identified = v.identified_index;
      rec.certified_column = v.certified_column;
      rec.total_steps = v.total_steps;
      rec.wait_steps = v.wait_steps;
      rec.ident_steps = v.ident_steps;
      rec.phases = v.phases;
      rec.correct = v.identified_index && *v.identified_index == truth;
      break;
    }
    case Mode::Identify: {
      const std::size_t column = identify_column(e);
      const std::size_t h = e.analysis.horizon;
      const std::size_t window = cfg.identify.window.value_or(e.schedule.tau_f_per_column[column]);
      const std::vector<MarkovParameter> models = e.analysis.column_markov(column);
      if (fam.size() == 1) {
        rec.identified = 0;
      } else {
        const Trajectory traj = rollout(fam.plants[truth], fam.controllers[column], fam.noise,
                                        h + window, rec.seed, cfg.init, false, column);
        rec.identified = identify_from_trajectory(traj, models, e.analysis.column_directions[column],
                                                  h, window, h);
        rec.total_steps = h + window;
      }
      rec.correct = *rec.identified == truth;
      break;
    }
    case Mode::Guard: {
      const std::size_t column = cfg.guard.column;
      const GridEntry& entry = e.analysis.at(truth, column);
      const std::vector<StateSpace> stable = e.analysis.stable_systems();
      const GuardThreshold threshold = make_guard_threshold(cfg.guard.M, cfg.delta, stable, fam.noise);
      std::size_t tau = 200;
      if (cfg.guard.tau) {
        tau = *cfg.guard.tau;
      } else if (!entry.stable) {
        tau = unstable_detection_time(cfg.guard.M, cfg.delta, *e.analysis.eps_a, e.analysis.eps_c,
                                      fam.noise, stable);
      }
      Session session(fam.plants[truth], fam.noise, rec.seed, cfg.init);
      EnergyMonitor monitor(threshold);
      const Controller& ctrl = fam.controllers[column];
      GuardVerdict worst = GuardVerdict::UnderThreshold;
      for (std::size_t t = 0; t < tau; ++t) {
        const Vector u = session.draw_exploratory();
        const GuardVerdict g = monitor.feed(session.step(ctrl, u));
        if (g != GuardVerdict::UnderThreshold && !rec.first_exceed_step) rec.first_exceed_step = t + 1;
        if (static_cast<int>(g) > static_cast<int>(worst)) worst = g;
        if (g == GuardVerdict::ExceededTwoXi) break;
      }
      rec.guard_verdict = worst;
      rec.energy = monitor.accumulated();
      rec.total_steps = monitor.steps();
      rec.correct = entry.stable ? worst == GuardVerdict::UnderThreshold
                                 : worst == GuardVerdict::ExceededTwoXi;
      break;
    }
  }
  rec.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::string record_to_json(const TrialRecord& r, bool with_timing) {
  json j = {{"trial", r.trial}, {"seed", r.seed}, {"mode", to_string(r.mode)}};
  j["identified"] = r.identified ? json(*r.identified + 1) : json(nullptr);
  j["correct"] = r.correct;
  j["total_steps"] = r.total_steps;
  if (r.mode == Mode::Supervise || r.mode == Mode::MonteCarlo) {
    j["certified_column"] = r.certified_column ? json(*r.certified_column + 1) : json(nullptr);
    j["wait_steps"] = r.wait_steps;
    j["ident_steps"] = r.ident_steps;
    json phases = json::array();
    for (const auto& p : r.phases) phases.push_back(phase_to_json(p));
    j["phases"] = phases;
  }
  if (r.mode == Mode::Guard) {
    j["verdict"] = to_string(r.guard_verdict);
    j["first_exceed_step"] = r.first_exceed_step ? json(*r.first_exceed_step) : json(nullptr);
    j["energy"] = r.energy;
  }
  if (with_timing) j["wall_ms"] = r.wall_ms;
  return j.dump();
}

Summary summarize(const Experiment& e, const std::vector<TrialRecord>& records) {
  Summary s;
  s.trials = records.size();
  s.rejected_unstable.assign(e.config.family.size(), 0);
  s.rejected_uncertified.assign(e.config.family.size(), 0);
  std::vector<std::size_t> steps;
  double total = 0.0;
  for (const auto& r : records) {
    if (r.correct) ++s.correct;
    steps.push_back(r.total_steps);
    total += static_cast<double>(r.total_steps);
    for (const auto& p : r.phases) {
      if (p.outcome == PhaseOutcome::RejectedUnstable) ++s.rejected_unstable[p.controller];
      if (p.outcome == PhaseOutcome::RejectedUncertified) ++s.rejected_uncertified[p.controller];
    }
  }
  if (s.trials > 0) {
    s.success_rate = static_cast<double>(s.correct) / static_cast<double>(s.trials);
    s.mean_steps = total / static_cast<double>(s.trials);
  }
  std::sort(steps.begin(), steps.end());
  s.p50_steps = nearest_rank(steps, 0.50);
  s.p90_steps = nearest_rank(steps, 0.90);
  s.p95_steps = nearest_rank(steps, 0.95);
  s.max_steps = steps.empty() ? 0 : steps.back();
  return s;
}

std::string summary_to_json(const Experiment& e, const Summary& s) {
  json j = {{"mode", to_string(e.config.mode)},
            {"trials", s.trials},
            {"correct", s.correct},
            {"success_rate", s.success_rate},
            {"mean_steps", s.mean_steps},
            {"p50_steps", s.p50_steps},
            {"p90_steps", s.p90_steps},
            {"p95_steps", s.p95_steps},
            {"max_steps", s.max_steps},
            {"rejected_unstable", s.rejected_unstable},
            {"rejected_uncertified", s.rejected_uncertified},
            {"horizon", e.analysis.horizon},
            {"gamma", std::isfinite(e.analysis.gamma) ? json(e.analysis.gamma) : json(nullptr)},
            {"schedule", schedule_to_json(e.schedule)}};
  return j.dump(2);
}

MonteCarloResult run_montecarlo(const Experiment& e, std::size_t threads,
                                const std::optional<std::filesystem::path>& out_dir) {
  const std::size_t n = e.config.trials;
  std::vector<std::optional<TrialRecord>> slots(n);
  std::ofstream jsonl;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    jsonl.open(*out_dir / "trials.jsonl", std::ios::out | std::ios::trunc);
    if (!jsonl) throw Error("cannot open " + (*out_dir / "trials.jsonl").string());
  }

  std::mutex mutex;
  std::size_t next_to_write = 0;
  bool io_failed = false;
  parallel_for(n, threads, [&](std::size_t k) {
    TrialRecord rec = run_trial(e, k);
    std::lock_guard lock(mutex);
    slots[k] = std::move(rec);
    if (!out_dir) return;
    while (next_to_write < n && slots[next_to_write]) {
      jsonl << record_to_json(*slots[next_to_write], e.config.record_timing) << '\n';
      jsonl.flush();
      if (!jsonl) io_failed = true;
      ++next_to_write;
    }
  });
  if (io_failed) throw Error("write failure on trials.jsonl; completed records were kept");

  MonteCarloResult result;
  result.records.reserve(n);
  for (auto& s : slots) result.records.push_back(std::move(*s));
  result.summary = summarize(e, result.records);

  if (out_dir) {
    std::ofstream csv(*out_dir / "total_steps.csv", std::ios::out | std::ios::trunc);
    csv << "trial,seed,identified,correct,total_steps\n";
    for (const auto& r : result.records) {
      csv << r.trial << ',' << r.seed << ',' << (r.identified ? std::to_string(*r.identified + 1) : "")
          << ',' << (r.correct ? 1 : 0) << ',' << r.total_steps << '\n';
    }
    std::ofstream summary(*out_dir / "summary.json", std::ios::out | std::ios::trunc);
    summary << summary_to_json(e, result.summary) << '\n';
    if (!csv || !summary) throw Error("write failure in " + out_dir->string());
  }
  return result;
}

Trajectory simulate_experiment(const Experiment& e, std::uint64_t seed) {
  const SwitchedFamily& fam = e.config.family;
  const std::size_t column = e.config.simulate.controller.value_or(fam.true_index);
  return rollout(fam.plants[fam.true_index], fam.controllers[column], fam.noise,
                 e.config.simulate.steps, seed, e.config.init, true, column);
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::out | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string());
  const Eigen::Index dy = traj.ys.empty() ? 0 : traj.ys.front().size();
  const Eigen::Index du = traj.us.empty() ? 0 : traj.us.front().size();
  const Eigen::Index dx = traj.xs.empty() ? 0 : traj.xs.front().size();
  out << "t,p";
  for (Eigen::Index k = 0; k < dy; ++k) out << ",y" << k + 1;
  for (Eigen::Index k = 0; k < du; ++k) out << ",u" << k + 1;
  for (Eigen::Index k = 0; k < dx; ++k) out << ",x" << k + 1;
  out << '\n';
  for (std::size_t t = 0; t < traj.size(); ++t) {
    out << t + 1 << ',' << traj.ps[t] + 1;
    for (Eigen::Index k = 0; k < dy; ++k) out << ',' << format_double(traj.ys[t](k));
    for (Eigen::Index k = 0; k < du; ++k) out << ',' << format_double(traj.us[t](k));
    if (!traj.xs.empty()) {
      for (Eigen::Index k = 0; k < dx; ++k) out << ',' << format_double(traj.xs[t](k));
    }
    out << '\n';
  }
  if (!out) throw Error("write failure on " + path.string());
}

// ---------------------------------------------------------------------------
// Scaling study

namespace {

SwitchedFamily scaled_family(const SwitchedFamily& base, double scale) {
  SwitchedFamily f = base;
  const Matrix& ref = base.plants[base.true_index].B;
  for (auto& p : f.plants) p.B = ref + scale * (p.B - ref);
  return f;
}

double column_separation(const SwitchedFamily& fam, std::size_t column, std::size_t horizon) {
  std::vector<MarkovParameter> gs;
  for (const auto& p : fam.plants) {
    gs.push_back(markov_parameter(assemble_closed_loop(p, fam.controllers[column]), horizon));
  }
  double gamma = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < gs.size(); ++a) {
    for (std::size_t b = a + 1; b < gs.size(); ++b) {
      gamma = std::min(gamma, operator_norm(gs[a].G - gs[b].G) / 2.0);
    }
  }
  return gamma;
}

}  // namespace

ScalingStudy emit_scaling_study(const Experiment& e, const std::vector<double>& gammas,
                                std::size_t threads) {
  if (gammas.size() < 3) throw ValidationError("scaling study needs at least three gamma values");
  const ExperimentConfig& cfg = e.config;
  const SwitchedFamily& base = cfg.family;
  if (base.size() < 2) throw ValidationError("scaling study needs at least two models");
  const std::size_t column = identify_column(e);
  const std::size_t truth = base.true_index;
  const std::size_t h = e.analysis.horizon;
  const std::size_t dz = base.plants.front().input_dim() * h;

  ScalingStudy study;
  for (double target : gammas) {
    if (!(target > 0.0)) throw ValidationError("gamma values must be positive");
    double lo = 0.0;
    double hi = 1.0;
    while (column_separation(scaled_family(base, hi), column, h) < target) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e9) throw NumericalError("cannot reach gamma " + format_double(target));
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (column_separation(scaled_family(base, mid), column, h) < target ? lo : hi) = mid;
    }
    const double scale = hi;
    const SwitchedFamily fam = scaled_family(base, scale);
    const FamilyAnalysis analysis =
        analyze_family(fam, h, cfg.delta / (4.0 * static_cast<double>(fam.size())), cfg.gamma_scope);
    const GridEntry& truth_entry = analysis.at(truth, column);
    if (!truth_entry.stable) throw ValidationError("scaling study: the true closed loop is unstable");

    double worst_sigma_e = 0.0;
    for (std::size_t i = 0; i < fam.size(); ++i) {
      const GridEntry& g = analysis.at(i, column);
      if (g.stable) worst_sigma_e = std::max(worst_sigma_e, sigma_e_sq(g.system, h, fam.noise));
    }
    const double gamma = analysis.column_gamma[column];
    const IdentBudget budget =
        sample_complexity(worst_sigma_e, fam.noise.sigma_eta * fam.noise.sigma_eta,
                          fam.noise.sigma_u * fam.noise.sigma_u, gamma, fam.size(), cfg.delta);

    const std::vector<MarkovParameter> models = analysis.column_markov(column);
    const auto& directions = analysis.column_directions[column];
    const auto success = [&](std::size_t window) {
      std::vector<char> ok(cfg.scaling.trials, 0);
      parallel_for(cfg.scaling.trials, threads, [&](std::size_t k) {
        const Trajectory traj = rollout(fam.plants[truth], fam.controllers[column], fam.noise,
                                        h + window, derive_seed(cfg.base_seed, k), cfg.init);
        try {
          ok[k] = identify_from_trajectory(traj, models, directions, h, window, h) == truth;
        } catch (const NumericalError&) {
          ok[k] = 0;
        }
      });
      const auto hits = static_cast<double>(std::count(ok.begin(), ok.end(), 1));
      return hits / static_cast<double>(cfg.scaling.trials) >= cfg.scaling.success;
    };

    // Doubling for a passing window, then bisection between fail and pass.
    std::size_t fail = 0;
    std::size_t pass = dz;
    while (!success(pass)) {
      fail = pass;
      pass *= 2;
      if (pass > cfg.scaling.tau_cap) {
        throw NumericalError("scaling study: success level not reached below tau_cap for gamma " +
                             format_double(target));
      }
    }
    while (pass - fail > 1 && pass > dz) {
      const std::size_t mid = std::max(dz, fail + (pass - fail) / 2);
      if (mid == pass) break;
      (success(mid) ? pass : fail) = mid;
    }
    study.rows.push_back(ScalingRow{gamma, scale, budget.tau_f, pass});
  }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const auto m = static_cast<double>(study.rows.size());
  for (const auto& r : study.rows) {
    const double x = std::log(1.0 / r.gamma);
    const double y = std::log(static_cast<double>(r.tau_empirical));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = m * sxx - sx * sx;
  study.slope = denom > 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
  return study;
}

void write_scaling_csv(const ScalingStudy& study, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::out | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string());
  out << "gamma,tau_f_formula,tau_empirical_95pct\n";
  for (const auto& r : study.rows) {
    out << format_double(r.gamma) << ',' << r.tau_f_formula << ',' << r.tau_empirical << '\n';
  }
  if (!out) throw Error("write failure on " + path.string());
}

}  // namespace switchid
