#include <benchmark/benchmark.h>

#include <array>
#include <vector>

#include "windex/net.hpp"
#include "windex/rng.hpp"

namespace {

windex::WhittleNetwork make_net() {
  windex::Rng rng(42);
  return windex::WhittleNetwork::init(rng);
}

void BM_ForwardSingle(benchmark::State& state) {
  const windex::WhittleNetwork net = make_net();
  const std::array<double, windex::kNetInputs> in = {1.2e4, 9.0, 3.0, 0.4, 0.1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.forward(in));
  }
}
BENCHMARK(BM_ForwardSingle);

void BM_ForwardBatch(benchmark::State& state) {
  const windex::WhittleNetwork net = make_net();
  windex::Rng rng(7);
  std::vector<std::array<double, windex::kNetInputs>> batch(state.range(0));
  for (auto& in : batch) {
    in = {rng.uniform(0.0, 2e5), static_cast<double>(rng.uniform_int(1, 15)),
          static_cast<double>(rng.uniform_int(0, 50)), rng.uniform(), rng.uniform()};
  }
  for (auto _ : state) {
    double acc = 0.0;
    for (const auto& in : batch) acc += net.forward(in);
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBatch)->Arg(6)->Arg(20)->Arg(64);

void BM_ForwardGrad(benchmark::State& state) {
  windex::WhittleNetwork net = make_net();
  const std::array<double, windex::kNetInputs> in = {1.2e4, 9.0, 3.0, 0.4, 0.1};
  std::vector<double> grad(windex::kNetParams, 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.forward_grad(in, grad));
  }
}
BENCHMARK(BM_ForwardGrad);

}  // namespace

BENCHMARK_MAIN();
