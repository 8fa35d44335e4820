#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dlane/assignment.hpp"
#include "dlane/camera.hpp"
#include "dlane/geometry.hpp"

namespace dlane {

struct EvalConfig {
  double lane_width = 30.0;
  std::vector<double> iou_thresholds = default_thresholds();
  double tusimple_pixel_tol = 20.0;
  double tusimple_match_fraction = 0.85;
  /// Spacing of TuSimple row anchors, starting at row 0.
  double tusimple_row_step = 10.0;
  /// Lanes are rasterised on an image scaled by this factor.
  double raster_scale = 1.0;
  /// 2D IoU threshold for pairing lanes before the chamfer error.
  double match_threshold = kDefaultMatchThreshold;

  /// 0.50, 0.55, ..., 0.95
  static std::vector<double> default_thresholds();
  void validate() const;
};

/// Binary image, row-major.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0) {}

  std::uint8_t operator()(int x, int y) const {
    return data[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }
  std::size_t count() const noexcept;
};

/// Pixels whose centre lies within (width - 1) / 2 of the polyline.
Mask rasterize_lane(const Lane2D& lane, const ImageSpec& image, double width);

/// |a & b| / |a | b|; 1 when both are empty.
double mask_iou(const Mask& a, const Mask& b);

struct ThresholdCounts {
  double threshold = 0.0;
  long tp = 0;
  long fp = 0;
  long fn = 0;

  double precision() const noexcept;
  double recall() const noexcept;
  double f1() const noexcept;
};

struct F1Result {
  std::vector<ThresholdCounts> per_threshold;
  double mf1() const noexcept;
};

/// Prediction x ground-truth mask IoUs.
Matrix iou_matrix(const std::vector<Lane2D>& preds, const std::vector<Lane2D>& gts, const ImageSpec& image,
                  const EvalConfig& cfg);

/// Counts from a precomputed IoU matrix: one optimal assignment on 1 - IoU,
/// then a pair is a true positive at t when its IoU >= t.
std::vector<ThresholdCounts> counts_from_ious(const Matrix& ious, const std::vector<double>& thresholds);

F1Result f1_suite(const std::vector<Lane2D>& preds, const std::vector<Lane2D>& gts, const ImageSpec& image,
                  const EvalConfig& cfg);

struct TuSimpleResult {
  long correct_points = 0;
  long gt_points = 0;
  long predictions = 0;
  long ground_truths = 0;
  long matched = 0;

  double accuracy() const noexcept;
  double fp_rate() const noexcept;
  double fn_rate() const noexcept;
  TuSimpleResult& operator+=(const TuSimpleResult& o);
};

TuSimpleResult tusimple_accuracy(const std::vector<Lane2D>& preds, const std::vector<Lane2D>& gts,
                                 const std::vector<double>& row_anchors, const EvalConfig& cfg);

/// Rows 0, step, 2 step, ... < height.
std::vector<double> tusimple_row_anchors(const ImageSpec& image, double step);

/// Symmetric chamfer distance between two 3D polylines: the mean of the two
/// directional means of point-to-polyline distances.
double chamfer_distance(const std::vector<Point3D>& a, const std::vector<Point3D>& b);

inline constexpr int kChamferSamples = 72;

/// Mean chamfer distance over matched pairs; nullopt without matches.
std::optional<double> cd_error(const std::vector<DecoupledLane3D>& preds,
                               const std::vector<std::vector<Point3D>>& gts, const MatchResult& matches);

}  // namespace dlane

namespace dlane {

/// Aggregate of every metric over a set of frames.
struct EvalReport {
  std::size_t frames = 0;
  std::vector<ThresholdCounts> counts;  ///< summed over frames, per threshold
  TuSimpleResult tusimple;
  std::optional<double> cd_error;       ///< only when 3D predictions and labels exist
  std::size_t cd_pairs = 0;

  double mf1() const noexcept;
  /// Counts at threshold 0.5, or the first threshold when 0.5 is absent.
  const ThresholdCounts& at_default() const;
};

}  // namespace dlane
