#include <benchmark/benchmark.h>

#include "dlane/datagen.hpp"
#include "dlane/fitting.hpp"
#include "dlane/losses.hpp"

namespace {

void BM_TotalLoss(benchmark::State& state) {
  const auto frame = dlane::generate_frame(dlane::bump_scene());
  std::vector<dlane::DecoupledLane3D> preds;
  for (const auto& pts : frame.lanes3d) {
    dlane::DecoupledLane3D lane;
    lane.curve = dlane::fit_bev_least_squares(pts, 3).to_bev_curve();
    lane.profile = dlane::fit_heights_direct(pts, dlane::kDefaultKeypoints, pts.front().z, pts.back().z);
    lane.score = 0.9;
    preds.push_back(lane);
  }
  const dlane::LossConfig cfg;
  const bool with_3d = state.range(0) != 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(dlane::total_loss(preds, frame.lanes2d, with_3d ? &frame.lanes3d : nullptr,
                                               frame.intrinsics, frame.image, cfg, {}));
}
BENCHMARK(BM_TotalLoss)->Arg(0)->Arg(1)->ArgName("with_3d");

}  // namespace
