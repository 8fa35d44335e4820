#include <benchmark/benchmark.h>

#include "dlane/datagen.hpp"
#include "dlane/metrics.hpp"

namespace {

void BM_Rasterize(benchmark::State& state) {
  const auto frame = dlane::generate_frame(dlane::bump_scene());
  for (auto _ : state)
    benchmark::DoNotOptimize(dlane::rasterize_lane(frame.lanes2d.front(), frame.image, 30.0));
}
BENCHMARK(BM_Rasterize);

void BM_F1Suite(benchmark::State& state) {
  dlane::SceneSpec spec = dlane::bump_scene();
  spec.lateral_offsets = {-5.25, -1.75, 1.75, 5.25};
  const auto frame = dlane::generate_frame(spec);
  const dlane::EvalConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(dlane::f1_suite(frame.lanes2d, frame.lanes2d, frame.image, cfg));
}
BENCHMARK(BM_F1Suite);

}  // namespace
