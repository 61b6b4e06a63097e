#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "cfgtune/archive.hpp"
#include "cfgtune/cost_models.hpp"
#include "cfgtune/oracle.hpp"
#include "cfgtune/pruner.hpp"
#include "cfgtune/rng.hpp"
#include "cfgtune/surrogate.hpp"
#include "cfgtune/tuner.hpp"

namespace {

using namespace cfgtune;

ConfigurationSpace full_space() {
  std::ifstream in(CFGTUNE_SPACES_DIR "/transformer.json");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_space(os.str());
}

void BM_ModelSize(benchmark::State& state) {
  ModelShape shape{50265, 12, 768, 3072, 512};
  for (auto _ : state) {
    benchmark::DoNotOptimize(shape);
    benchmark::DoNotOptimize(model_size(shape).total_bytes());
  }
}
BENCHMARK(BM_ModelSize);

void BM_Prune(benchmark::State& state) {
  const auto space = full_space();
  const SizeConstraint budget(3.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(prune(space, budget, static_cast<std::size_t>(state.range(0))));
  }
}
BENCHMARK(BM_Prune)->Arg(1)->Arg(13)->Arg(50);

void BM_ArchiveUpdate(benchmark::State& state) {
  Rng rng(1);
  std::vector<Individual> cands(static_cast<std::size_t>(state.range(0)));
  for (auto& c : cands) c.objectives = {rng.uniform01(), rng.uniform01(), rng.uniform01()};
  for (auto _ : state) {
    ParetoArchive archive;
    archive.update(cands);
    benchmark::DoNotOptimize(archive.size());
  }
}
BENCHMARK(BM_ArchiveUpdate)->Arg(1000)->Arg(10000);

void BM_Hypervolume(benchmark::State& state) {
  Rng rng(2);
  std::vector<ObjectiveVector> front;
  while (front.size() < static_cast<std::size_t>(state.range(0))) {
    const double a = rng.uniform01();
    const double b = rng.uniform01() * (1.0 - a);
    front.push_back({a, b, 1.0 - a - b});
  }
  for (auto _ : state) benchmark::DoNotOptimize(hypervolume(front, {1.1, 1.1, 1.1}));
}
BENCHMARK(BM_Hypervolume)->Arg(50)->Arg(200);

void BM_Fit(benchmark::State& state) {
  Rng rng(3);
  TrainingSet data;
  for (int r = 0; r < state.range(0); ++r) {
    std::vector<double> x(kNumDimensions);
    for (auto& v : x) v = rng.uniform01();
    data.add(x, rng.uniform01());
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit(data).alpha());
}
BENCHMARK(BM_Fit)->Arg(20)->Arg(200);

void BM_Tune(benchmark::State& state) {
  const auto space = prune(full_space(), SizeConstraint(3.0), 50);
  const SyntheticOracle oracle(space);
  const auto build = build_indicator(space, oracle, 20, 4);
  const SurrogateIndicator indicator(build.model, space);
  TunerParams params;
  params.generations = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(tune(space, indicator, params).archive.size());
}
BENCHMARK(BM_Tune)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
