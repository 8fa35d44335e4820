#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dlane/camera.hpp"
#include "dlane/geometry.hpp"

namespace dlane {

enum class GroundKind { Flat, Slope, Sine, SmoothNoise };

/// Road surface under the lanes, as height below the camera along depth.
struct GroundModel {
  GroundKind kind = GroundKind::Flat;
  double amplitude = 0.0;   ///< meters (sine, smooth_noise)
  double wavelength = 20.0; ///< meters (sine); lower bound for smooth_noise
  double grade = 0.0;       ///< rise per meter (slope)
  std::uint64_t seed = 0;   ///< smooth_noise phases and wavelengths

  void validate() const;
};

/// Camera-frame y of the ground at depth z (positive below the camera).
double ground_height(const GroundModel& model, double camera_height, double z);

/// A road of parallel lanes, each a lateral offset of one centerline.
struct SceneSpec {
  std::string tag = "scene";
  std::vector<double> lateral_offsets{-1.75, 1.75};
  BevCurve centerline;
  GroundModel ground;
  double z_min = 3.0;
  double z_max = 80.0;
  double camera_height = 1.5;
  CameraIntrinsics intrinsics;
  ImageSpec image;
  std::uint64_t seed = 0;
  int samples = 200;

  std::size_t lane_count() const noexcept { return lateral_offsets.size(); }
  void validate() const;
};

/// One synthetic frame; every 2D lane is the projection of its 3D lane.
struct FrameRecord {
  std::int64_t id = 0;
  std::string tag;
  std::uint64_t seed = 0;
  CameraIntrinsics intrinsics;
  ImageSpec image;
  std::vector<std::vector<Point3D>> lanes3d;
  std::vector<Lane2D> lanes2d;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

FrameRecord generate_frame(const SceneSpec& spec);

/// Symmetric per-frame perturbation bounds; each value is drawn uniformly in
/// [-bound, bound]. `wavelength` is relative (0.1 = +-10 %).
struct Jitter {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  double amplitude = 0.0;
  double wavelength = 0.0;
  double grade = 0.0;
};

/// frames_per_spec frames per spec; frame i of a spec is drawn with seed
/// mix_seed(spec.seed, i). Frame ids are consecutive from 0.
std::vector<FrameRecord> generate_dataset(const std::vector<SceneSpec>& specs, int frames_per_spec,
                                          const Jitter& jitter);

/// Straight road over sinusoidal ground (0.3 m amplitude, 20 m wavelength)
/// with lanes at +-1.75 m.
SceneSpec bump_scene();

}  // namespace dlane
