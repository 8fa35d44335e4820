#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dlane/anchors.hpp"
#include "dlane/datagen.hpp"
#include "dlane/fitting.hpp"
#include "dlane/metrics.hpp"
#include "dlane/prediction.hpp"

namespace dlane {

enum class FitMode { TwoD, ThreeD, PerspectiveBaseline };

struct FitOptions {
  FitMode mode = FitMode::ThreeD;
  FitConfig fit;
  LossConfig loss;
  /// Points emitted per perspective-baseline polyline.
  int baseline_samples = kDefaultKeypoints;
  /// 0 picks the hardware concurrency.
  unsigned threads = 0;
};

/// Runs body(i) for i in [0, n) on a small thread pool. When several calls
/// throw, the exception of the lowest index is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

/// Fits every labelled lane of a frame. 2D and 3D modes emit decoupled lanes;
/// the perspective baseline emits image polylines only. Throws
/// InvalidArgument for a quartic curve outside the baseline.
FramePrediction fit_frame(const FrameRecord& frame, const FitOptions& options);

/// Results are in frame order regardless of scheduling.
std::vector<FramePrediction> fit_dataset(const std::vector<FrameRecord>& frames, const FitOptions& options);

/// The prediction's image polylines: its raw 2D lanes when present,
/// otherwise its 3D lanes projected at kDefaultKeypoints samples.
std::vector<Lane2D> prediction_lanes_2d(const FramePrediction& pred, const CameraIntrinsics& k);

/// Replaces 3D lanes by their projections (scores carried over).
FramePrediction project_prediction(const FramePrediction& pred, const CameraIntrinsics& k);

/// Frames without a prediction count as empty predictions.
EvalReport evaluate(const std::vector<FrameRecord>& frames, const std::vector<FramePrediction>& preds,
                    const EvalConfig& cfg, unsigned threads = 0);

/// Descriptors of every labelled lane that covers enough rows, clustered.
AnchorSet derive_anchors(const std::vector<FrameRecord>& frames, int k, std::uint64_t seed, int restarts = 10,
                         int rows = kDefaultDescriptorRows);

}  // namespace dlane
