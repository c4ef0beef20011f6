#include <benchmark/benchmark.h>

#include <omp.h>

#include "qpt/tomodata.hpp"
#include "qpt/walkers.hpp"

using namespace qpt;

namespace {

const Dataset& qubit_dataset() {
  static const Dataset ds = [] {
    CMatrix sigma(2, 2);
    sigma << 0.6, 0.1, 0.1, 0.4;
    Rng rng(1);
    return simulate(depolarizing(0.9, 2), standard_settings(SettingsKind::PauliQubit, Scheme::AncillaAssisted, 1, sigma),
                    5000, rng);
  }();
  return ds;
}

WalkerConfig bench_config() {
  WalkerConfig cfg;
  cfg.jump = JumpKind::EiH;
  cfg.step_size = 0.005;
  cfg.n_therm_sweeps = 10;
  cfg.sweep_size = 50;
  cfg.n_samples = 64;
  cfg.tune = false;
  cfg.start = StartPoint::Estimate;
  return cfg;
}

void BM_ChainsParallel(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const FigureSpec fom{FigureKind::DiamondDistance, std::nullopt};
  for (auto _ : state) benchmark::DoNotOptimize(run_chains(qubit_dataset(), fom, bench_config(), n));
  state.counters["threads"] = omp_get_max_threads();
}

void BM_ChainsSerial(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const FigureSpec fom{FigureKind::DiamondDistance, std::nullopt};
  for (auto _ : state) benchmark::DoNotOptimize(run_chains_serial(qubit_dataset(), fom, bench_config(), n));
}

void BM_ProposalEiH(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(2);
  CMatrix v = haar_unitary(d * d * d, rng).leftCols(d);
  for (auto _ : state) v = propose_eiH(v, 0.001, rng);
  benchmark::DoNotOptimize(v);
}

void BM_ProposalElementary(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(3);
  CMatrix v = haar_unitary(d * d * d, rng).leftCols(d);
  for (auto _ : state) v = propose_elementary_rotation(v, 0.001, 4, rng);
  benchmark::DoNotOptimize(v);
}

}  // namespace

BENCHMARK(BM_ChainsParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ChainsSerial)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ProposalEiH)->Arg(2)->Arg(3);
BENCHMARK(BM_ProposalElementary)->Arg(2)->Arg(3);

BENCHMARK_MAIN();
