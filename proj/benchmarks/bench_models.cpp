#include <benchmark/benchmark.h>

#include "lus/graph.hpp"
#include "lus/unet.hpp"
#include "lus/vgg16.hpp"

using namespace lus;

namespace {

// Full VGG-16 at 224x224; one iteration is a whole forward pass.
void BM_Vgg16Forward(benchmark::State& state) {
  const ModelGraph g = build_vgg16();
  const WeightArchive w = he_uniform_init(g, 1);
  const BoundModel bound(g, w);
  const Tensor x = random_tensor(1, 3, 224, 224, 2, 0.0f, 1.0f);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bound.run(x));
  }
}
BENCHMARK(BM_Vgg16Forward)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_UnetForward(benchmark::State& state) {
  UnetConfig cfg;
  cfg.base_channels = static_cast<int>(state.range(0));
  const ModelGraph g = build_unet(cfg);
  const WeightArchive w = he_uniform_init(g, 3);
  const BoundModel bound(g, w);
  const Tensor x = random_tensor(1, 1, 224, 224, 4, 0.0f, 1.0f);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bound.run(x));
  }
}
BENCHMARK(BM_UnetForward)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_Vgg16BackboneFeatures(benchmark::State& state) {
  const ModelGraph g = build_vgg16();
  const WeightArchive w = he_uniform_init(g, 5);
  const BoundModel bound(g, w);
  const Tensor x = random_tensor(1, 3, 224, 224, 6, 0.0f, 1.0f);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bound.run_backbone(x));
  }
}
BENCHMARK(BM_Vgg16BackboneFeatures)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
