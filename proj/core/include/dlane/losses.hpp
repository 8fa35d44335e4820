#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "dlane/assignment.hpp"
#include "dlane/camera.hpp"
#include "dlane/geometry.hpp"

namespace dlane {

/// Lane IoU settings: `e` is the lane radius (meters in BEV, pixels in the
/// image) and `sample_count` the number of samples along the lane.
struct IoUConfig {
  double e = 0.5;
  int sample_count = kDefaultKeypoints;

  void validate() const;
};

struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;

  void validate() const;
};

struct LossConfig {
  IoUConfig bev{0.5, kDefaultKeypoints};
  IoUConfig perspective{15.0, kDefaultKeypoints};
  double row_step = 1.0;
  double match_threshold = kDefaultMatchThreshold;
};

/// Gradient with respect to every free parameter of one DecoupledLane3D.
struct LaneGradient {
  std::array<double, 4> curve{};  // a, b, c, d
  std::vector<double> heights;
  double z_min = 0.0;
  double z_max = 0.0;
  double score = 0.0;

  static LaneGradient zeros(std::size_t keypoints);

  LaneGradient& operator+=(const LaneGradient& other);
  LaneGradient& operator*=(double s);
  /// (a, b, c, d, heights..., z_min, z_max, score)
  std::vector<double> flatten() const;
  double norm() const;
};

/// A scalar loss and its gradient.
struct LossTerm {
  double value = 0.0;
  LaneGradient grad;
};

/// Mean per-sample lane IoU, (2e - |dx|) / (2e + |dx|). Lies in (-1, 1].
double lane_iou(std::span<const double> xs_pred, std::span<const double> xs_gt, double e);

/// Ground-truth 3D lane prepared for the BEV/height/endpoint losses.
struct LaneTarget3D {
  std::vector<double> z_grid;  ///< uniform over the label's depth range
  std::vector<double> xs;      ///< label x at each grid depth
  std::vector<double> heights; ///< label height at each keypoint
  double z_min = 0.0;
  double z_max = 0.0;
};

/// `points` must be ordered by strictly increasing z.
LaneTarget3D make_target_3d(const std::vector<Point3D>& points, int keypoints, int sample_count);

/// 1 - lane IoU between the predicted curve and `gt_xs`, both evaluated on
/// `z_grid`. Only the curve coefficients receive gradient.
LossTerm bev_iou_loss(const DecoupledLane3D& pred, std::span<const double> z_grid,
                      std::span<const double> gt_xs, double e);

/// Mean absolute keypoint height error.
LossTerm height_loss(const HeightProfile& pred, std::span<const double> gt_heights);

/// |z_min - gt_z_min| + |z_max - gt_z_max|.
LossTerm endpoint_z_loss(const HeightProfile& pred, double gt_z_min, double gt_z_max);

struct PerspectiveLoss {
  bool overlap = false;
  std::size_t common_rows = 0;
  double l_per = 0.0;
  double l_v = 0.0;
  LaneGradient grad_per;
  LaneGradient grad_v;
};

/// Image-space lane IoU loss over shared rows and start/end row loss.
/// Without shared rows `overlap` is false, l_per is +inf and gradients are 0.
PerspectiveLoss perspective_losses(const DecoupledLane3D& pred, const CameraIntrinsics& k,
                                   const ResampledLane2D& gt, const IoUConfig& cfg);

inline constexpr double kScoreEpsilon = 1e-7;

struct ClassificationLoss {
  double value = 0.0;
  std::vector<double> grad;
};

/// Mean binary cross-entropy with scores clamped to [eps, 1 - eps].
ClassificationLoss classification_loss(std::span<const double> scores, std::span<const double> labels);

/// Population standard deviation of the keypoint heights.
LossTerm height_variance_reg(const HeightProfile& profile);

/// Loss terms for a single prediction/label pair. `target` is null in
/// 2D-only supervision; the 3D terms are then zero.
struct PairLoss {
  bool overlap = false;
  double l_bev = 0.0, l_h = 0.0, l_z = 0.0, l_per = 0.0, l_v = 0.0, l_reg = 0.0;
  LaneGradient grad_bev, grad_h, grad_z, grad_per, grad_v, grad_reg;

  /// alpha L3D + beta L2D with 3D labels, beta L2D + sigma_h otherwise.
  double objective(const LossWeights& w, bool has_3d) const;
  LaneGradient objective_gradient(const LossWeights& w, bool has_3d) const;
};

PairLoss pair_loss(const DecoupledLane3D& pred, const CameraIntrinsics& k, const ResampledLane2D& gt2d,
                   const LaneTarget3D* target, const LossConfig& cfg);

struct LossBreakdown {
  double l_cls = 0.0, l_bev = 0.0, l_h = 0.0, l_z = 0.0, l_per = 0.0, l_v = 0.0, l_reg = 0.0;
  double total = 0.0;
  bool has_3d = false;
  MatchResult matches;
  /// One gradient per prediction.
  std::vector<LaneGradient> gradients;
};

/// Full unified loss over a set of predictions. Predictions are matched to
/// 2D labels first; per-pair geometric terms are averaged over the matches.
/// `gt3d`, when given, must be parallel to `gt2d`.
LossBreakdown total_loss(const std::vector<DecoupledLane3D>& preds, const std::vector<Lane2D>& gt2d,
                         const std::vector<std::vector<Point3D>>* gt3d, const CameraIntrinsics& k,
                         const ImageSpec& image, const LossConfig& cfg, const LossWeights& weights);

}  // namespace dlane
