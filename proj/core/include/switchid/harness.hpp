#pragma once

#include "switchid/simulate.hpp"
#include "switchid/supervisor.hpp"
#include "switchid/system.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace switchid {

enum class Mode { Identify, Guard, Supervise, MonteCarlo };

const char* to_string(Mode mode);

struct HorizonPolicy {
  std::optional<std::size_t> explicit_h;
  double bias_fraction = 0.1;
};

struct IdentifySettings {
  std::optional<std::size_t> column;  // defaults to the true index
  std::optional<std::size_t> window;  // defaults to the schedule's tau_f for the column
};

struct GuardSettings {
  std::size_t column = 0;
  double M = 0.0;
  // Defaults to unstable_detection_time for unstable entries, 200 otherwise.
  std::optional<std::size_t> tau;
};

struct ScalingSettings {
  std::vector<double> gammas;
  std::size_t trials = 200;
  double success = 0.95;
  std::size_t tau_cap = 1U << 18U;
};

struct SimulateSettings {
  std::size_t steps = 200;
  std::optional<std::size_t> controller;  // defaults to the true index
};

// Indices are 0-based here; the JSON file uses 1-based indices.
struct ExperimentConfig {
  SwitchedFamily family;
  HorizonPolicy horizon;
  GammaScope gamma_scope = GammaScope::AllColumns;
  double delta = 0.1;
  std::size_t trials = 1;
  std::uint64_t base_seed = 0;
  Mode mode = Mode::Supervise;
  std::string output = "results";
  InitMode init = InitMode::StandardNormal;
  double wait_multiplier = 1.0;
  std::size_t threads = 1;
  bool record_timing = false;
  IdentifySettings identify;
  GuardSettings guard;
  ScalingSettings scaling;
  SimulateSettings simulate;

  void validate() const;
};

ExperimentConfig parse_config(std::string_view json_text);

/// Reads, parses and validates a config file, including the family
/// assumptions (throws AssumptionError naming the offending entry).
ExperimentConfig load_config(const std::filesystem::path& path);

std::string config_to_json(const ExperimentConfig& config);

// Derived, immutable state shared by every trial.
struct Experiment {
  ExperimentConfig config;
  FamilyAnalysis analysis;
  Schedule schedule;
};

Experiment prepare_experiment(const ExperimentConfig& config);

std::string analysis_to_json(const Experiment& experiment);

struct TrialRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  Mode mode = Mode::Supervise;
  std::optional<std::size_t> identified;
  bool correct = false;
  std::size_t total_steps = 0;
  // supervise
  std::optional<std::size_t> certified_column;
  std::size_t wait_steps = 0;
  std::size_t ident_steps = 0;
  std::vector<PhaseRecord> phases;
  // guard
  std::optional<std::size_t> first_exceed_step;
  GuardVerdict guard_verdict = GuardVerdict::UnderThreshold;
  double energy = 0.0;
  double wall_ms = 0.0;
};

struct Summary {
  std::size_t trials = 0;
  std::size_t correct = 0;
  double success_rate = 0.0;
  double mean_steps = 0.0;
  std::size_t p50_steps = 0;
  std::size_t p90_steps = 0;
  std::size_t p95_steps = 0;
  std::size_t max_steps = 0;
  std::vector<std::size_t> rejected_unstable;     // per controller
  std::vector<std::size_t> rejected_uncertified;  // per controller
};

struct MonteCarloResult {
  Summary summary;
  std::vector<TrialRecord> records;
};

/// One trial with the seed derived from (base_seed, trial).
TrialRecord run_trial(const Experiment& experiment, std::size_t trial);

std::string record_to_json(const TrialRecord& record, bool with_timing);

Summary summarize(const Experiment& experiment, const std::vector<TrialRecord>& records);

std::string summary_to_json(const Experiment& experiment, const Summary& summary);

/// Runs config.trials trials on `threads` workers. When `out_dir` is given,
/// writes trials.jsonl (in trial order, flushed as the completed prefix
/// grows), total_steps.csv and summary.json. Output bytes depend only on
/// (config, base_seed).
MonteCarloResult run_montecarlo(const Experiment& experiment, std::size_t threads,
                                const std::optional<std::filesystem::path>& out_dir);

/// Writes a single rollout of the true plant under one controller as CSV.
Trajectory simulate_experiment(const Experiment& experiment, std::uint64_t seed);
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

struct ScalingRow {
  double gamma = 0.0;
  double scale = 0.0;
  std::size_t tau_f_formula = 0;
  std::size_t tau_empirical = 0;
};

struct ScalingStudy {
  std::vector<ScalingRow> rows;
  // Least-squares slope of log(tau_empirical) against log(1/gamma).
  double slope = 0.0;
};

/// For each target gamma, rescales the plants' input matrices around the
/// true plant until the identification column has that separation, then
/// bisects the shortest window reaching the configured success level.
ScalingStudy emit_scaling_study(const Experiment& experiment, const std::vector<double>& gammas,
                                std::size_t threads = 1);

void write_scaling_csv(const ScalingStudy& study, const std::filesystem::path& path);

}  // namespace switchid
