#include "dlane/camera.hpp"

#include <cmath>
#include <string>

#include "dlane/errors.hpp"

namespace dlane {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
    throw InvalidArgument("focal lengths must be positive and finite");
  if (!std::isfinite(ox) || !std::isfinite(oy)) throw InvalidArgument("principal point must be finite");
}

void ImageSpec::validate() const {
  if (width < 1 || height < 1) throw InvalidArgument("image dimensions must be positive");
}

Pixel project_point(const CameraIntrinsics& k, const Point3D& p) {
  if (!(p.z > 0.0))
    throw DomainError("cannot project a point with z = " + std::to_string(p.z) + " (must be > 0)");
  return {k.fx * p.x / p.z + k.ox, k.fy * p.y / p.z + k.oy};
}

Lane2D project_points(const CameraIntrinsics& k, const std::vector<Point3D>& points) {
  Lane2D out;
  out.points.reserve(points.size());
  for (const auto& p : points) out.points.push_back(project_point(k, p));
  return out;
}

Lane2D project_lane(const CameraIntrinsics& k, const DecoupledLane3D& lane, int count) {
  return project_points(k, sample_lane_3d(lane, count));
}

Point3D invert_to_ground(const CameraIntrinsics& k, double u, double v, double y) {
  if (!(v > k.oy)) throw DomainError("ray at or above the horizon never meets the ground");
  if (!(y > 0.0)) throw DomainError("ground height must be positive (below the camera)");
  const double z = k.fy * y / (v - k.oy);
  return {(u - k.ox) * z / k.fx, y, z};
}

}  // namespace dlane
