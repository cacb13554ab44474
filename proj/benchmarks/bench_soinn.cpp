#include <benchmark/benchmark.h>

#include <random>

#include "nsoinn/soinn.hpp"

using namespace nsoinn;

namespace {

std::vector<std::vector<double>> stream(std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> out(n, std::vector<double>(dim));
  for (auto& x : out) {
    for (auto& v : x) v = u(rng);
  }
  return out;
}

// Inputs per second for a fresh network fed a uniform stream.
void BM_SoinnProcess(benchmark::State& state) {
  const auto win_cap = static_cast<std::uint32_t>(state.range(0));
  const auto xs = stream(2000, 123);
  for (auto _ : state) {
    SoinnParams p;
    p.win_cap = win_cap;
    SoinnNetwork net(123, p);
    for (const auto& x : xs) net.process_input(x);
    benchmark::DoNotOptimize(net.node_count());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(xs.size()));
}
BENCHMARK(BM_SoinnProcess)->Arg(0)->Arg(2)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
