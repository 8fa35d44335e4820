#pragma once

#include <cstdint>
#include <vector>

#include "dlane/camera.hpp"
#include "dlane/geometry.hpp"

namespace dlane {

/// Predictions for one frame: decoupled 3D lanes and/or raw image polylines.
struct FramePrediction {
  std::int64_t frame = 0;
  std::vector<DecoupledLane3D> lanes3d;
  std::vector<Lane2D> lanes2d;
  std::vector<double> scores2d;  ///< parallel to lanes2d

  friend bool operator==(const FramePrediction&, const FramePrediction&) = default;
};

}  // namespace dlane
