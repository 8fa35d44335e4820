#include <benchmark/benchmark.h>

#include "dlane/datagen.hpp"
#include "dlane/fitting.hpp"

namespace {

void BM_Fit3D(benchmark::State& state) {
  const auto frame = dlane::generate_frame(dlane::bump_scene());
  dlane::FitConfig cfg;
  cfg.max_iters = static_cast<int>(state.range(0));
  const dlane::LossConfig loss;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        dlane::fit_3d(frame.lanes2d[0], frame.lanes3d[0], frame.intrinsics, frame.image, cfg, loss));
}
BENCHMARK(BM_Fit3D)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Fit2D(benchmark::State& state) {
  const auto frame = dlane::generate_frame(dlane::bump_scene());
  dlane::FitConfig cfg;
  cfg.max_iters = static_cast<int>(state.range(0));
  const dlane::LossConfig loss;
  const auto init = dlane::init_from_ground_plane(frame.lanes2d[0], frame.intrinsics, cfg);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        dlane::fit_2d_projective(frame.lanes2d[0], frame.intrinsics, frame.image, init, cfg, loss));
}
BENCHMARK(BM_Fit2D)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
