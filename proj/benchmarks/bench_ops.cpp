#include <benchmark/benchmark.h>

#include <random>

#include "ramdepth/matcher.hpp"
#include "ramdepth/ops.hpp"

using namespace ramdepth;

namespace {

Tensor noise(Shape shape, std::uint64_t seed, double lo = -1, double hi = 1) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<real> data(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : data) v = static_cast<real>(u(rng));
  return Tensor::from_data(std::move(shape), std::move(data));
}

// args: channels in/out, spatial size, kernel
void BM_Conv2d(benchmark::State& state) {
  const auto c = state.range(0), s = state.range(1), k = state.range(2);
  const Tensor x = noise({1, c, s, s}, 1), w = noise({c, c, k, k}, 2), b = noise({c}, 3);
  const int pad = static_cast<int>(k / 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, b, {1, 1}, {pad, pad}));
  state.SetItemsProcessed(state.iterations() * c * c * k * k * s * s);
}
BENCHMARK(BM_Conv2d)->Args({32, 48, 3})->Args({64, 12, 3})->Args({64, 12, 1})->Unit(benchmark::kMicrosecond);

void BM_Conv2dBackward(benchmark::State& state) {
  const auto c = state.range(0), s = state.range(1);
  const Tensor x = noise({1, c, s, s}, 1), b = noise({c}, 3);
  Tensor w = noise({c, c, 3, 3}, 2);
  w.set_requires_grad(true);
  for (auto _ : state) {
    Tape tape;
    TapeScope scope(tape);
    backward(sum_all(conv2d(x, w, b, {1, 1}, {1, 1})), tape);
  }
}
BENCHMARK(BM_Conv2dBackward)->Args({32, 24})->Unit(benchmark::kMicrosecond);

void BM_GridSample(benchmark::State& state) {
  const auto c = state.range(0), s = state.range(1);
  const Tensor feat = noise({1, c, s, s}, 4), coords = noise({1, 2, 81 * s, s}, 5, -1, double(s));
  for (auto _ : state) benchmark::DoNotOptimize(grid_sample_bilinear(feat, coords));
  state.SetItemsProcessed(state.iterations() * 81 * s * s);
}
BENCHMARK(BM_GridSample)->Args({64, 8})->Args({64, 12})->Unit(benchmark::kMicrosecond);

void BM_SampleCorrelation(benchmark::State& state) {
  const std::int64_t f = 64, h = 8, w = 12, z = 81;
  const Tensor ref = noise({1, f, h, w}, 6), src = noise({1, f, h, w}, 7), depth = noise({1, 1, h, w}, 8, 2, 9);
  const Tensor off = noise({1, 2 * z, h, w}, 9, -4, 4);
  Camera a, b;
  a.intrinsics = b.intrinsics = {80, 80, 47.5, 31.5};
  b.pose.translation = Eigen::Vector3d(-1, 0, 0);
  for (auto _ : state) benchmark::DoNotOptimize(sample_correlation(ref, src, depth, a, b, 8, {off}));
}
BENCHMARK(BM_SampleCorrelation)->Unit(benchmark::kMicrosecond);

}  // namespace
