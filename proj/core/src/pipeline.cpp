#include "dlane/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <thread>

#include "dlane/errors.hpp"
#include "dlane/random.hpp"

namespace dlane {
namespace {

Lane2D baseline_polyline(const Lane2D& gt2d, int order, int samples) {
  const auto fit = fit_perspective_baseline(gt2d, order);
  const double v0 = gt2d.points.front().v;
  const double v1 = gt2d.points.back().v;
  Lane2D out;
  out.points.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(samples - 1);
    const double v = i == samples - 1 ? v1 : v0 + s * (v1 - v0);
    out.points.push_back({fit(v), v});
  }
  return out;
}

// The ground-plane start can fail to reach the label when the label is mostly
// off-image; retry from jittered starts drawn from the seed.
FitReport fit_2d_lane(const Lane2D& gt2d, const CameraIntrinsics& k, const ImageSpec& image, const FitOptions& o,
                      std::uint64_t lane_seed) {
  auto init = init_from_ground_plane(gt2d, k, o.fit);
  constexpr int kAttempts = 4;
  for (int attempt = 0;; ++attempt) {
    try {
      return fit_2d_projective(gt2d, k, image, init, o.fit, o.loss);
    } catch (const NoOverlap&) {
      if (attempt + 1 >= kAttempts) throw;
    }
    Rng rng(mix_seed(lane_seed, static_cast<std::uint64_t>(attempt)));
    init.curve.d += uniform(rng, -0.5, 0.5);
    const double span = init.profile.z_max - init.profile.z_min;
    init.profile.z_min = std::max(o.fit.z_floor, init.profile.z_min * uniform(rng, 0.8, 1.0));
    init.profile.z_max = init.profile.z_min + span * uniform(rng, 1.0, 1.2);
  }
}

}  // namespace

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::vector<std::exception_ptr> errors(n);
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

FramePrediction fit_frame(const FrameRecord& frame, const FitOptions& o) {
  FramePrediction pred;
  pred.frame = frame.id;
  if (o.mode == FitMode::PerspectiveBaseline) {
    for (const auto& gt : frame.lanes2d) {
      pred.lanes2d.push_back(baseline_polyline(gt, curve_order(o.fit.curve), o.baseline_samples));
      pred.scores2d.push_back(1.0);
    }
    return pred;
  }
  if (o.fit.curve == CurveMode::Quartic)
    throw InvalidArgument("order 4 is only available for least squares and the perspective baseline");

  for (std::size_t i = 0; i < frame.lanes2d.size(); ++i) {
    const auto& gt2d = frame.lanes2d[i];
    if (o.mode == FitMode::ThreeD) {
      if (i >= frame.lanes3d.size()) throw InvalidArgument("3d mode needs 3D labels for every lane");
      pred.lanes3d.push_back(fit_3d(gt2d, frame.lanes3d[i], frame.intrinsics, frame.image, o.fit, o.loss).lane);
    } else {
      const auto seed = mix_seed(mix_seed(o.fit.seed, frame.seed), i);
      pred.lanes3d.push_back(fit_2d_lane(gt2d, frame.intrinsics, frame.image, o, seed).lane);
    }
  }
  return pred;
}

std::vector<FramePrediction> fit_dataset(const std::vector<FrameRecord>& frames, const FitOptions& options) {
  std::vector<FramePrediction> out(frames.size());
  parallel_for(frames.size(), options.threads, [&](std::size_t i) { out[i] = fit_frame(frames[i], options); });
  return out;
}

std::vector<Lane2D> prediction_lanes_2d(const FramePrediction& pred, const CameraIntrinsics& k) {
  if (!pred.lanes2d.empty()) return pred.lanes2d;
  std::vector<Lane2D> out;
  out.reserve(pred.lanes3d.size());
  for (const auto& lane : pred.lanes3d) out.push_back(project_lane(k, lane, kDefaultKeypoints));
  return out;
}

FramePrediction project_prediction(const FramePrediction& pred, const CameraIntrinsics& k) {
  FramePrediction out;
  out.frame = pred.frame;
  out.lanes2d = prediction_lanes_2d(pred, k);
  if (!pred.lanes2d.empty()) {
    out.scores2d = pred.scores2d;
  } else {
    for (const auto& lane : pred.lanes3d) out.scores2d.push_back(lane.score);
  }
  return out;
}

EvalReport evaluate(const std::vector<FrameRecord>& frames, const std::vector<FramePrediction>& preds,
                    const EvalConfig& cfg, unsigned threads) {
  cfg.validate();
  std::map<std::int64_t, const FramePrediction*> by_id;
  for (const auto& p : preds) by_id[p.frame] = &p;

  struct FrameResult {
    std::vector<ThresholdCounts> counts;
    TuSimpleResult tusimple;
    double cd_sum = 0.0;
    std::size_t cd_pairs = 0;
    bool cd_applicable = false;
  };
  std::vector<FrameResult> results(frames.size());

  parallel_for(frames.size(), threads, [&](std::size_t i) {
    const auto& frame = frames[i];
    static const FramePrediction kEmpty;
    const auto it = by_id.find(frame.id);
    const FramePrediction& pred = it == by_id.end() ? kEmpty : *it->second;
    auto& r = results[i];

    const auto lanes = prediction_lanes_2d(pred, frame.intrinsics);
    r.counts = f1_suite(lanes, frame.lanes2d, frame.image, cfg).per_threshold;
    r.tusimple = tusimple_accuracy(lanes, frame.lanes2d, tusimple_row_anchors(frame.image, cfg.tusimple_row_step), cfg);

    if (pred.lanes3d.empty() || frame.lanes3d.empty()) return;
    r.cd_applicable = true;
    // Pair 3D lanes through the image-space matching cost, as in training.
    std::vector<std::optional<ResampledLane2D>> ps, gs;
    auto resample = [&frame](const Lane2D& lane) -> std::optional<ResampledLane2D> {
      try {
        return resample_lane(lane, frame.image);
      } catch (const DegenerateLane&) {
        return std::nullopt;
      }
    };
    for (const auto& lane : pred.lanes3d) ps.push_back(resample(project_lane(frame.intrinsics, lane, kDefaultKeypoints)));
    for (const auto& lane : frame.lanes2d) gs.push_back(resample(lane));
    Matrix costs(ps.size(), gs.size());
    for (std::size_t p = 0; p < ps.size(); ++p)
      for (std::size_t g = 0; g < gs.size(); ++g)
        costs(p, g) = ps[p] && gs[g] ? matching_cost(*ps[p], *gs[g]) : kUnmatchable;
    const auto matches = hungarian_assign(costs, cfg.match_threshold);
    if (const auto cd = cd_error(pred.lanes3d, frame.lanes3d, matches)) {
      r.cd_pairs = matches.pairs.size();
      r.cd_sum = *cd * static_cast<double>(r.cd_pairs);
    }
  });

  EvalReport report;
  report.frames = frames.size();
  for (double t : cfg.iou_thresholds) report.counts.push_back({t, 0, 0, 0});
  double cd_sum = 0.0;
  bool cd_applicable = false;
  for (const auto& r : results) {
    for (std::size_t t = 0; t < report.counts.size(); ++t) {
      report.counts[t].tp += r.counts[t].tp;
      report.counts[t].fp += r.counts[t].fp;
      report.counts[t].fn += r.counts[t].fn;
    }
    report.tusimple += r.tusimple;
    cd_sum += r.cd_sum;
    report.cd_pairs += r.cd_pairs;
    cd_applicable = cd_applicable || r.cd_applicable;
  }
  if (cd_applicable && report.cd_pairs > 0) report.cd_error = cd_sum / static_cast<double>(report.cd_pairs);
  return report;
}

AnchorSet derive_anchors(const std::vector<FrameRecord>& frames, int k, std::uint64_t seed, int restarts, int rows) {
  std::vector<LaneDescriptor> descriptors;
  for (const auto& frame : frames)
    for (const auto& lane : frame.lanes2d) {
      try {
        descriptors.push_back(build_descriptor(lane, frame.image, rows));
      } catch (const DegenerateLane&) {
      }
    }
  return cluster_anchors(descriptors, k, seed, restarts);
}

}  // namespace dlane
