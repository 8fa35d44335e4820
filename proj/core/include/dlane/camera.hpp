#pragma once

#include <vector>

#include "dlane/geometry.hpp"

namespace dlane {

/// Pinhole intrinsics in pixels. The camera sits at the origin of the 3D frame.
struct CameraIntrinsics {
  double fx = 1000.0;
  double fy = 1000.0;
  double ox = 400.0;
  double oy = 160.0;

  void validate() const;

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Perspective-view polyline ordered near to far.
struct Lane2D {
  std::vector<Pixel> points;

  friend bool operator==(const Lane2D&, const Lane2D&) = default;
};

struct ImageSpec {
  int width = 800;
  int height = 320;

  void validate() const;

  friend bool operator==(const ImageSpec&, const ImageSpec&) = default;
};

/// u = fx x / z + ox, v = fy y / z + oy. Throws DomainError when z <= 0.
Pixel project_point(const CameraIntrinsics& k, const Point3D& p);

/// Samples the lane and projects every sample. Off-image points are kept.
Lane2D project_lane(const CameraIntrinsics& k, const DecoupledLane3D& lane, int count);

/// Projects an arbitrary 3D polyline point by point.
Lane2D project_points(const CameraIntrinsics& k, const std::vector<Point3D>& points);

/// The point at height y whose projection is (u, v). Throws DomainError when
/// v <= oy or y <= 0.
Point3D invert_to_ground(const CameraIntrinsics& k, double u, double v, double y);

}  // namespace dlane
