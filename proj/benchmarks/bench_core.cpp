#include "switchid/harness.hpp"
#include "switchid/ident.hpp"
#include "switchid/linalg.hpp"
#include "switchid/supervisor.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace switchid;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

StateSpace random_stable(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  const auto draw = [&](Eigen::Index r, Eigen::Index c) {
    return Matrix(Matrix::NullaryExpr(r, c, [&](Eigen::Index, Eigen::Index) { return g(rng); }));
  };
  Matrix a = draw(n, n);
  a *= 0.9 / spectral_radius(a);
  return StateSpace{a, draw(n, 1), draw(1, n)};
}

SwitchedFamily desk_family() {
  SwitchedFamily f;
  for (double a : {1.5, 3.0, 4.5}) f.plants.push_back(StateSpace{scalar(a), scalar(1), scalar(1)});
  for (double k : {-1.2, -2.7, -4.2}) f.controllers.push_back(Controller::make_static(scalar(k)));
  f.noise = NoiseSpec{1.0, 1.0, 1.0};
  f.true_index = 2;
  return f;
}

}  // namespace

static void BM_Lyapunov(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const StateSpace s = random_stable(rng, state.range(0));
  const Matrix q = s.C.transpose() * s.C;
  for (auto _ : state) benchmark::DoNotOptimize(solve_discrete_lyapunov(s.A, q));
}
BENCHMARK(BM_Lyapunov)->Arg(2)->Arg(6)->Arg(12);

static void BM_Hinf(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const StateSpace s = random_stable(rng, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(hinf_norm(s.C, s.A, s.B));
}
BENCHMARK(BM_Hinf)->Arg(2)->Arg(6)->Unit(benchmark::kMillisecond);

static void BM_OlsFit(benchmark::State& state) {
  const StateSpace p{scalar(0.5), scalar(1), scalar(1)};
  const auto h = static_cast<std::size_t>(state.range(0));
  const std::size_t tau = 5000;
  const Trajectory traj = rollout(p, Controller::make_static(scalar(0)), NoiseSpec{1, 1, 1},
                                  h + tau, 3, InitMode::StandardNormal);
  for (auto _ : state) benchmark::DoNotOptimize(ols_fit(traj.ys, traj.us, h, h, h + tau - 1));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(tau));
}
BENCHMARK(BM_OlsFit)->Arg(4)->Arg(16)->Unit(benchmark::kMicrosecond);

static void BM_SupervisorRun(benchmark::State& state) {
  const SwitchedFamily f = desk_family();
  const FamilyAnalysis a = analyze_family(f, 2, 0.1 / 12.0);
  const Schedule s = dwell_schedule(a, 0.1, 3);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Session session(f.plants[2], f.noise, derive_seed(7, seed++), InitMode::StandardNormal);
    benchmark::DoNotOptimize(run(session, f, a, s));
  }
}
BENCHMARK(BM_SupervisorRun)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
