// switchid: analyze a switched family, simulate it, and run the
// identification / guard / supervisor experiments from a JSON config.

#include "switchid/errors.hpp"
#include "switchid/harness.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace switchid;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<double> delta;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Base seed");
  cmd->add_option("--trials", f.trials, "Number of trials");
  cmd->add_option("--delta", f.delta, "Failure probability");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--threads", f.threads, "Worker threads");
}

Experiment load(const CommonFlags& f, std::optional<Mode> mode) {
  if (f.config.empty()) throw ValidationError("--config is required");
  ExperimentConfig cfg = load_config(f.config);
  if (f.seed) cfg.base_seed = *f.seed;
  if (f.trials) cfg.trials = *f.trials;
  if (f.delta) cfg.delta = *f.delta;
  if (f.out) cfg.output = *f.out;
  if (f.threads) cfg.threads = *f.threads;
  if (mode) cfg.mode = *mode;
  return prepare_experiment(cfg);
}

void print_summary(const Summary& s) {
  std::cout << "trials " << s.trials << "  correct " << s.correct << "  success_rate "
            << s.success_rate << "\n"
            << "steps mean " << s.mean_steps << "  p50 " << s.p50_steps << "  p95 " << s.p95_steps
            << "  max " << s.max_steps << "\n";
}

int run_trials(const CommonFlags& f, std::optional<Mode> mode) {
  const Experiment e = load(f, mode);
  const fs::path out = e.config.output;
  const MonteCarloResult r = run_montecarlo(e, e.config.threads, out);
  print_summary(r.summary);
  std::cout << "wrote " << (out / "trials.jsonl").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-family identification and supervisory switching experiments"};
  app.require_subcommand(1);

  CommonFlags analyze_flags, sim_flags, ident_flags, guard_flags, sup_flags, mc_flags, scale_flags;
  std::string analyze_positional;
  std::size_t sim_steps = 0;

  auto* analyze = app.add_subcommand("analyze", "Print the family analysis and dwell schedule");
  analyze->add_option("config_path", analyze_positional, "Experiment config (JSON)");
  add_common(analyze, analyze_flags);

  auto* simulate = app.add_subcommand("simulate", "Write one closed-loop rollout as CSV");
  add_common(simulate, sim_flags);
  simulate->add_option("--steps", sim_steps, "Rollout length (overrides simulate.steps)");

  auto* identify = app.add_subcommand("identify", "Identification trials on a fixed controller");
  add_common(identify, ident_flags);
  auto* guard = app.add_subcommand("guard", "Energy-guard trials on one closed loop");
  add_common(guard, guard_flags);
  auto* supervise = app.add_subcommand("supervise", "Supervisor trials");
  add_common(supervise, sup_flags);
  auto* montecarlo = app.add_subcommand("montecarlo", "Trials in the mode set by the config");
  add_common(montecarlo, mc_flags);
  auto* scaling = app.add_subcommand("scaling", "Empirical window length against gamma");
  add_common(scaling, scale_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*analyze) {
      if (analyze_flags.config.empty()) analyze_flags.config = analyze_positional;
      std::cout << analysis_to_json(load(analyze_flags, std::nullopt)) << "\n";
    } else if (*simulate) {
      Experiment e = load(sim_flags, std::nullopt);
      if (sim_steps > 0) e.config.simulate.steps = sim_steps;
      const fs::path path = fs::path(e.config.output) / "trajectory.csv";
      write_trajectory_csv(simulate_experiment(e, e.config.base_seed), path);
      std::cout << "wrote " << path.string() << "\n";
    } else if (*identify) {
      return run_trials(ident_flags, Mode::Identify);
    } else if (*guard) {
      return run_trials(guard_flags, Mode::Guard);
    } else if (*supervise) {
      return run_trials(sup_flags, Mode::Supervise);
    } else if (*montecarlo) {
      return run_trials(mc_flags, std::nullopt);
    } else if (*scaling) {
      const Experiment e = load(scale_flags, std::nullopt);
      const ScalingStudy s = emit_scaling_study(e, e.config.scaling.gammas, e.config.threads);
      const fs::path path = fs::path(e.config.output) / "scaling.csv";
      write_scaling_csv(s, path);
      for (const auto& r : s.rows) {
        std::cout << "gamma " << r.gamma << "  tau_f " << r.tau_f_formula << "  empirical "
                  << r.tau_empirical << "\n";
      }
      std::cout << "log-log slope " << s.slope << "\nwrote " << path.string() << "\n";
    }
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const AssumptionError& e) {
    std::cerr << "assumption violated: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
