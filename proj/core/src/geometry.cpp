#include "dlane/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "dlane/errors.hpp"

namespace dlane {

bool BevCurve::is_finite() const noexcept {
  return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(d);
}

double HeightProfile::keypoint_z(std::size_t i) const {
  const auto n = heights.size();
  if (n < 2) throw InvalidArgument("height profile needs at least two keypoints");
  if (i + 1 == n) return z_max;
  return z_min + static_cast<double>(i) * (z_max - z_min) / static_cast<double>(n - 1);
}

void HeightProfile::validate() const {
  if (heights.size() < 2) throw InvalidArgument("height profile needs at least two keypoints");
  if (!std::isfinite(z_min) || !std::isfinite(z_max) || !(z_min < z_max))
    throw InvalidArgument("height profile requires finite z_min < z_max");
  for (double h : heights)
    if (!std::isfinite(h)) throw InvalidArgument("height profile contains a non-finite height");
}

void DecoupledLane3D::validate() const {
  if (!curve.is_finite()) throw InvalidArgument("BEV curve has non-finite coefficients");
  profile.validate();
  if (!(profile.z_min > 0.0)) throw InvalidArgument("lane must start in front of the camera (z_min > 0)");
}

double eval_bev_curve(const BevCurve& curve, double z) noexcept {
  return ((curve.a * z + curve.b) * z + curve.c) * z + curve.d;
}

double eval_bev_slope(const BevCurve& curve, double z) noexcept {
  return (3.0 * curve.a * z + 2.0 * curve.b) * z + curve.c;
}

KeypointWeights keypoint_weights(std::size_t keypoints, double s) noexcept {
  const double last = static_cast<double>(keypoints - 1);
  const double t = std::clamp(s, 0.0, 1.0) * last;
  auto lo = static_cast<std::size_t>(std::floor(t));
  if (lo >= keypoints - 1) return {keypoints - 2, 1.0};
  return {lo, t - static_cast<double>(lo)};
}

double eval_height(const HeightProfile& profile, double z) {
  const auto& h = profile.heights;
  if (h.size() < 2) throw InvalidArgument("height profile needs at least two keypoints");
  if (z <= profile.z_min) return h.front();
  if (z >= profile.z_max) return h.back();
  const auto [lo, w] = keypoint_weights(h.size(), (z - profile.z_min) / (profile.z_max - profile.z_min));
  return (1.0 - w) * h[lo] + w * h[lo + 1];
}

std::vector<double> uniform_depths(double z_min, double z_max, int count) {
  if (count < 2) throw InvalidArgument("sample count must be at least 2");
  std::vector<double> zs(static_cast<std::size_t>(count));
  const double step = (z_max - z_min) / static_cast<double>(count - 1);
  for (int i = 0; i < count; ++i) zs[static_cast<std::size_t>(i)] = z_min + i * step;
  zs.back() = z_max;
  return zs;
}

std::vector<Point3D> sample_lane_3d(const DecoupledLane3D& lane, int count) {
  lane.profile.validate();
  const auto zs = uniform_depths(lane.profile.z_min, lane.profile.z_max, count);
  const auto& h = lane.profile.heights;
  std::vector<Point3D> out;
  out.reserve(zs.size());
  for (std::size_t i = 0; i < zs.size(); ++i) {
    // Heights follow the normalised sample position so that sample i never
    // depends on the z range through the interpolation weights.
    const double s = static_cast<double>(i) / static_cast<double>(zs.size() - 1);
    const auto [lo, w] = keypoint_weights(h.size(), s);
    out.push_back({eval_bev_curve(lane.curve, zs[i]), (1.0 - w) * h[lo] + w * h[lo + 1], zs[i]});
  }
  return out;
}

Point3D interpolate_along_z(const std::vector<Point3D>& points, double z) {
  if (points.empty()) throw DegenerateInput("cannot interpolate an empty polyline");
  if (z <= points.front().z) return points.front();
  if (z >= points.back().z) return points.back();
  const auto hi = std::upper_bound(points.begin(), points.end(), z,
                                   [](double value, const Point3D& p) { return value < p.z; });
  const auto lo = hi - 1;
  const double t = (z - lo->z) / (hi->z - lo->z);
  return {lo->x + t * (hi->x - lo->x), lo->y + t * (hi->y - lo->y), z};
}

HeightProfile flat_profile(double height, double z_min, double z_max, int n) {
  if (n < 2) throw InvalidArgument("height profile needs at least two keypoints");
  return {std::vector<double>(static_cast<std::size_t>(n), height), z_min, z_max};
}

}  // namespace dlane
