#include "switchid/errors.hpp"
#include "switchid/harness.hpp"

#include <json.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace switchid;
namespace fs = std::filesystem;

namespace {

const char* kScalarConfig = R"({
  "family": {
    "plants": [{"A": 0.5, "B": 1.0, "C": 1.0}, {"A": [[0.5]], "B": [[2.0]], "C": [[1.0]]}],
    "controllers": [{"type": "static", "K": 0.0}, {"K": [[0.0]]}],
    "noise": {"sigma_w": 1.0, "sigma_u": 1.0, "sigma_eta": 1.0},
    "true_index": 2
  },
  "delta": 0.1,
  "trials": 10,
  "base_seed": 42,
  "mode": "identify"
})";

std::string with(const std::string& patch) {
  nlohmann::json j = nlohmann::json::parse(kScalarConfig);
  j.merge_patch(nlohmann::json::parse(patch));
  return j.dump();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("switchid_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, ParsesScalarFamily) {
  const ExperimentConfig c = parse_config(kScalarConfig);
  EXPECT_EQ(c.family.size(), 2U);
  EXPECT_EQ(c.family.true_index, 1U);
  EXPECT_DOUBLE_EQ(c.family.plants[1].B(0, 0), 2.0);
  EXPECT_EQ(c.mode, Mode::Identify);
  EXPECT_EQ(c.trials, 10U);
  EXPECT_EQ(c.base_seed, 42U);
}

TEST(Config, EchoRoundTrips) {
  const ExperimentConfig c = parse_config(kScalarConfig);
  const std::string echo = config_to_json(c);
  const ExperimentConfig again = parse_config(echo);
  EXPECT_EQ(config_to_json(again), echo);
  EXPECT_TRUE(again.family.plants[1].B.isApprox(c.family.plants[1].B));
}

TEST(Config, ZeroTrialsRejected) {
  EXPECT_THROW(parse_config(with(R"({"trials": 0})")), ValidationError);
}

TEST(Config, BadValuesRejected) {
  EXPECT_THROW(parse_config(with(R"({"delta": 0.5})")), ValidationError);
  EXPECT_THROW(parse_config(with(R"({"mode": "fly"})")), ValidationError);
  EXPECT_THROW(parse_config(with(R"({"surprise": 1})")), ValidationError);
  EXPECT_THROW(parse_config("{ not json"), ValidationError);
  EXPECT_THROW(parse_config(with(R"({"family": {"true_index": 3}})")), ValidationError);
}

TEST(Config, DimensionMismatchNamesIndices) {
  try {
    parse_config(with(R"({"family": {"controllers": [{"K": 0.0}, {"K": [[0.0, 1.0]]}]}})"));
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("controller 2"), std::string::npos) << msg;
  }
}

TEST(Config, RaggedMatrixRejected) {
  EXPECT_THROW(parse_config(with(R"({"family": {"plants": [{"A": [[0.5, 0], [0]], "B": 1, "C": 1},
                                                            {"A": 0.5, "B": 1, "C": 1}]}})")),
               ValidationError);
}

TEST(Config, AssumptionViolationSurfacesOnLoad) {
  const fs::path dir = scratch("assumption");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << with(R"({"family": {"plants": [{"A": 0.5, "B": 1, "C": 1},
                                                                  {"A": 0.5, "B": 1, "C": 1}]}})");
  EXPECT_THROW(load_config(dir / "c.json"), AssumptionError);
  EXPECT_THROW(load_config(dir / "missing.json"), ValidationError);
}

TEST(Config, BundledExamplesLoad) {
  for (const char* name : {"desk_supervise.json", "scalar_identify.json", "guard_unstable.json"}) {
    EXPECT_NO_THROW(load_config(fs::path(SWITCHID_CONFIG_DIR) / name)) << name;
  }
}

TEST(Experiment, HorizonFromBiasFraction) {
  const Experiment e = prepare_experiment(parse_config(kScalarConfig));
  EXPECT_EQ(e.analysis.horizon, 4U);  // 0.5^4 <= 0.1 < 0.5^3
  EXPECT_NEAR(e.analysis.delta_prime, 0.1 / 8.0, 1e-15);
  const auto j = nlohmann::json::parse(analysis_to_json(e));
  EXPECT_EQ(j["grid"].size(), 4U);
  EXPECT_EQ(j["schedule"]["tau"].size(), 2U);
}

TEST(MonteCarlo, DeterministicAcrossRunsAndThreads) {
  const Experiment e = prepare_experiment(parse_config(with(R"({"trials": 12})")));
  const fs::path a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
  run_montecarlo(e, 1, a);
  run_montecarlo(e, 1, b);
  run_montecarlo(e, 4, c);
  for (const char* f : {"trials.jsonl", "total_steps.csv", "summary.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(c / f)) << f;
  }
  EXPECT_FALSE(slurp(a / "trials.jsonl").empty());
}

TEST(MonteCarlo, RecordsInTrialOrderWithDerivedSeeds) {
  const Experiment e = prepare_experiment(parse_config(with(R"({"trials": 6})")));
  const fs::path dir = scratch("order");
  const MonteCarloResult r = run_montecarlo(e, 3, dir);
  std::ifstream in(dir / "trials.jsonl");
  std::string line;
  std::size_t k = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["trial"].get<std::size_t>(), k);
    EXPECT_EQ(j["seed"].get<std::uint64_t>(), derive_seed(42, k));
    EXPECT_FALSE(j.contains("wall_ms"));
    ++k;
  }
  EXPECT_EQ(k, 6U);
  EXPECT_EQ(r.records.size(), 6U);
}

TEST(MonteCarlo, IdentifyNearNoiselessIsPerfect) {
  const Experiment e = prepare_experiment(parse_config(with(
      R"({"trials": 20, "family": {"noise": {"sigma_w": 1e-6, "sigma_u": 1.0, "sigma_eta": 1e-6}},
          "identify": {"window": 50}})")));
  const MonteCarloResult r = run_montecarlo(e, 1, std::nullopt);
  EXPECT_DOUBLE_EQ(r.summary.success_rate, 1.0);
}

TEST(MonteCarlo, SummaryArithmetic) {
  const Experiment e = prepare_experiment(parse_config(with(R"({"trials": 9, "identify": {"window": 8}})")));
  const MonteCarloResult r = run_montecarlo(e, 2, std::nullopt);
  std::size_t correct = 0;
  for (const auto& rec : r.records) correct += rec.correct ? 1 : 0;
  EXPECT_EQ(r.summary.correct, correct);
  EXPECT_DOUBLE_EQ(r.summary.success_rate * 9.0, static_cast<double>(correct));
  EXPECT_LE(r.summary.p50_steps, r.summary.p95_steps);
  EXPECT_LE(r.summary.p95_steps, r.summary.max_steps);
}

TEST(MonteCarlo, SupervisePhasesRespectSchedule) {
  const Experiment e = prepare_experiment(parse_config(with(R"({"trials": 4, "mode": "supervise"})")));
  const MonteCarloResult r = run_montecarlo(e, 1, std::nullopt);
  for (const auto& rec : r.records) {
    EXPECT_LE(rec.total_steps, e.schedule.step_bound());
    for (const auto& ph : rec.phases) EXPECT_LE(ph.steps, e.schedule.tau[ph.controller]);
  }
}

TEST(MonteCarlo, GuardModeStableLoop) {
  const Experiment e = prepare_experiment(parse_config(with(
      R"({"trials": 20, "mode": "guard", "init": "zero", "delta": 0.05,
          "guard": {"column": 1, "M": 0.0, "tau": 200}})")));
  const MonteCarloResult r = run_montecarlo(e, 1, std::nullopt);
  EXPECT_DOUBLE_EQ(r.summary.success_rate, 1.0);
  for (const auto& rec : r.records) EXPECT_EQ(rec.total_steps, 200U);
}

TEST(Simulate, TrajectoryCsv) {
  Experiment e = prepare_experiment(parse_config(kScalarConfig));
  e.config.simulate.steps = 25;
  const fs::path p = scratch("sim") / "t.csv";
  write_trajectory_csv(simulate_experiment(e, 3), p);
  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,p,y1,u1,x1");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 25U);
}

TEST(Scaling, NeedsThreeGammas) {
  const Experiment e = prepare_experiment(parse_config(kScalarConfig));
  EXPECT_THROW(emit_scaling_study(e, {0.2}), ValidationError);
  EXPECT_THROW(emit_scaling_study(e, {0.2, 0.1}), ValidationError);
}

TEST(Scaling, FormulaColumnQuadruplesAndWindowGrows) {
  const Experiment e = prepare_experiment(parse_config(with(
      R"({"scaling": {"trials": 40, "success": 0.9}})")));
  const ScalingStudy s = emit_scaling_study(e, {0.4, 0.2, 0.1});
  ASSERT_EQ(s.rows.size(), 3U);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(s.rows[k].gamma, 0.4 / std::pow(2.0, k), 1e-9);
  for (std::size_t k = 1; k < 3; ++k) {
    const double ratio = static_cast<double>(s.rows[k].tau_f_formula) /
                         static_cast<double>(s.rows[k - 1].tau_f_formula);
    EXPECT_NEAR(ratio, 4.0, 0.1);
    EXPECT_GT(s.rows[k].tau_empirical, s.rows[k - 1].tau_empirical);
  }
  const fs::path p = scratch("scaling") / "s.csv";
  write_scaling_csv(s, p);
  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "gamma,tau_f_formula,tau_empirical_95pct");
}
