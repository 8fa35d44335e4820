#pragma once

#include <cstddef>
#include <vector>

namespace dlane {

/// Number of height keypoints used when none is specified.
inline constexpr int kDefaultKeypoints = 72;

/// Camera-frame point. Left-handed: x right, y down (ground below the camera
/// has y > 0), z forward. All values in meters.
struct Point3D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3D&, const Point3D&) = default;
};

/// Lateral position of a lane in bird's-eye view as a cubic in depth:
/// x(z) = a z^3 + b z^2 + c z + d.
struct BevCurve {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  bool is_finite() const noexcept;

  friend bool operator==(const BevCurve&, const BevCurve&) = default;
};

/// Ground heights at n keypoints spread uniformly over [z_min, z_max].
struct HeightProfile {
  std::vector<double> heights;
  double z_min = 0.0;
  double z_max = 1.0;

  std::size_t size() const noexcept { return heights.size(); }
  /// Depth of keypoint i.
  double keypoint_z(std::size_t i) const;
  /// Throws InvalidArgument unless n >= 2, z_min < z_max and all values are finite.
  void validate() const;

  friend bool operator==(const HeightProfile&, const HeightProfile&) = default;
};

/// A lane as a holistic BEV curve plus independently regressed ground heights.
struct DecoupledLane3D {
  BevCurve curve;
  HeightProfile profile;
  double score = 1.0;

  /// Throws InvalidArgument when the profile is invalid or z_min <= 0.
  void validate() const;

  friend bool operator==(const DecoupledLane3D&, const DecoupledLane3D&) = default;
};

double eval_bev_curve(const BevCurve& curve, double z) noexcept;
/// dx/dz of the curve.
double eval_bev_slope(const BevCurve& curve, double z) noexcept;

/// Piecewise-linear interpolation of the keypoint heights; clamps outside the
/// keypoint range.
double eval_height(const HeightProfile& profile, double z);

/// Interpolation weights of a normalised position s in [0, 1] along the
/// keypoints: height = (1 - w) * h[lo] + w * h[lo + 1].
struct KeypointWeights {
  std::size_t lo = 0;
  double w = 0.0;
};
KeypointWeights keypoint_weights(std::size_t keypoints, double s) noexcept;

/// Depths of `count` samples spread uniformly over [z_min, z_max]; the end
/// points are exact.
std::vector<double> uniform_depths(double z_min, double z_max, int count);

/// `count` points at uniform depth over the lane's range, near to far.
std::vector<Point3D> sample_lane_3d(const DecoupledLane3D& lane, int count);

/// Linear interpolation of a polyline ordered by strictly increasing z,
/// clamped to its first/last point outside the covered depth range.
Point3D interpolate_along_z(const std::vector<Point3D>& points, double z);

/// Flat profile with `n` keypoints all at `height`.
HeightProfile flat_profile(double height, double z_min, double z_max, int n = kDefaultKeypoints);

}  // namespace dlane
