#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "nsoinn/engine.hpp"

using namespace nsoinn;

namespace {

std::vector<LabeledSample> samples(std::size_t per_class, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t c = 0; c < kClassLabelCount; ++c) {
      LabeledSample s;
      s.x.assign(dim, 0.0);
      s.x[c] = 1.0;
      for (auto& v : s.x) v = std::clamp(v + noise(rng), 0.0, 1.0);
      s.y = kAllClassLabels[c];
      out.push_back(std::move(s));
    }
  }
  return out;
}

void BM_EngineTrainInitial(benchmark::State& state) {
  const auto data = samples(static_cast<std::size_t>(state.range(0)), 40, 1);
  for (auto _ : state) {
    DetectionEngine e(EngineConfig{}, 40);
    e.train_initial(data);
    benchmark::DoNotOptimize(e.fitted());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.size()));
}
BENCHMARK(BM_EngineTrainInitial)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_EnginePredict(benchmark::State& state) {
  DetectionEngine e(EngineConfig{}, 40);
  e.train_initial(samples(300, 40, 1));
  const auto queries = samples(100, 40, 2);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(e.predict(queries[i].x));
    i = (i + 1) % queries.size();
  }
}
BENCHMARK(BM_EnginePredict);

}  // namespace

BENCHMARK_MAIN();
