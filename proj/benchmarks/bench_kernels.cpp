#include <benchmark/benchmark.h>

#include "lus/kernels.hpp"
#include "lus/tensor.hpp"

using namespace lus;

namespace {

void BM_Conv3x3(benchmark::State& state) {
  const int ch = static_cast<int>(state.range(0));
  const int hw = static_cast<int>(state.range(1));
  Tensor x = random_tensor(1, ch, hw, hw, 1);
  Conv2dParams p{random_tensor(ch, ch, 3, 3, 2), std::vector<float>(ch, 0.1f), 1, 1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv2d(x, p));
  }
  state.SetItemsProcessed(state.iterations() * 2LL * hw * hw * ch * ch * 9);
}
BENCHMARK(BM_Conv3x3)->Args({64, 56})->Args({128, 28})->Args({256, 14})->Unit(benchmark::kMillisecond);

void BM_Conv1x1(benchmark::State& state) {
  Tensor x = random_tensor(1, 64, 224, 224, 3);
  Conv2dParams p{random_tensor(1, 64, 1, 1, 4), {0.0f}, 1, 0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv2d(x, p));
  }
}
BENCHMARK(BM_Conv1x1)->Unit(benchmark::kMillisecond);

void BM_MaxPool(benchmark::State& state) {
  Tensor x = random_tensor(1, 64, 224, 224, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(maxpool2x2(x));
  }
}
BENCHMARK(BM_MaxPool)->Unit(benchmark::kMillisecond);

void BM_TransposedConv(benchmark::State& state) {
  const int ch = static_cast<int>(state.range(0));
  Tensor x = random_tensor(1, ch * 2, 28, 28, 6);
  Conv2dParams p{random_tensor(ch, ch * 2, 2, 2, 7), std::vector<float>(ch, 0.0f), 2, 0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(transposed_conv2x2(x, p));
  }
}
BENCHMARK(BM_TransposedConv)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Dense(benchmark::State& state) {
  DenseParams p;
  p.out = 64;
  p.in = 25088;
  p.weights = random_tensor(1, 1, 64, 25088, 8).data;
  p.bias.assign(64, 0.0f);
  std::vector<float> x = random_tensor(1, 1, 1, 25088, 9).data;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dense(x, p));
  }
}
BENCHMARK(BM_Dense)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
