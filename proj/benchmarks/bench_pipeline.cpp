#include <benchmark/benchmark.h>

#include "ramdepth/pipeline.hpp"
#include "ramdepth/synthdata.hpp"
#include "ramdepth/training.hpp"

using namespace ramdepth;

namespace {

const Scene& scene() {
  static const Scene s = generate_scene(SceneSpec{});
  return s;
}

// One refinement step per source view and cycle, toy model at 96x64.
void BM_Inference(benchmark::State& state) {
  const RamDepthModel model(ModelConfig::toy());
  const std::vector<View> sources(scene().views.begin() + 1, scene().views.end());
  const int cycles = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_inference(model, scene().views[0], sources, cycles));
  state.SetItemsProcessed(state.iterations() * cycles * static_cast<std::int64_t>(sources.size()));
}
BENCHMARK(BM_Inference)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  RamDepthModel model(ModelConfig::toy());
  const int cycles = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(train_loss_and_grad(model, scene(), cycles, 0.8));
}
BENCHMARK(BM_TrainStep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_GenerateScene(benchmark::State& state) {
  SceneSpec spec;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_scene(spec));
    ++spec.seed;
  }
}
BENCHMARK(BM_GenerateScene)->Unit(benchmark::kMillisecond);

}  // namespace
