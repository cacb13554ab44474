#include <benchmark/benchmark.h>

#include <random>

#include "nsoinn/svm.hpp"

using namespace nsoinn;

namespace {

void BM_SmoTrain(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.6);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i % 2 ? 1 : -1;
    std::vector<double> p(20);
    for (auto& v : p) v = label * 0.5 + noise(rng);
    x.push_back(std::move(p));
    y.push_back(label);
  }
  SvmParams params;
  params.kernel = Kernel::rbf(1.0 / 20.0);
  for (auto _ : state) benchmark::DoNotOptimize(smo_train(x, y, params));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SmoTrain)->RangeMultiplier(2)->Range(64, 1024)->Unit(benchmark::kMillisecond);

}  // namespace
