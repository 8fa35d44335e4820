#pragma once

#include <string>

#include "dlane/datagen.hpp"
#include "dlane/prediction.hpp"

namespace dlane {

enum class View { Perspective, Bev, Profile };

/// Static SVG of a frame's labels (class "gt") and, when given, a prediction
/// (class "pred"). Perspective draws image polylines over the image
/// rectangle, bev draws x against z, profile draws y against z. Coordinates
/// are printed with three decimals, so equal inputs give equal bytes.
std::string render_svg(const FrameRecord& frame, const FramePrediction* pred, View view);

}  // namespace dlane
