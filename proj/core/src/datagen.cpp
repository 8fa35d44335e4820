#include "dlane/datagen.hpp"

#include <cmath>
#include <numbers>

#include "dlane/errors.hpp"
#include "dlane/random.hpp"

namespace dlane {

void GroundModel::validate() const {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw InvalidArgument("ground amplitude must be >= 0");
  if (!(wavelength > 0.0) || !std::isfinite(wavelength)) throw InvalidArgument("ground wavelength must be > 0");
  if (!std::isfinite(grade)) throw InvalidArgument("ground grade must be finite");
}

double ground_height(const GroundModel& model, double camera_height, double z) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  switch (model.kind) {
    case GroundKind::Flat:
      return camera_height;
    case GroundKind::Slope:
      return camera_height - model.grade * z;
    case GroundKind::Sine:
      return camera_height + model.amplitude * std::sin(two_pi * z / model.wavelength);
    case GroundKind::SmoothNoise: {
      // Four sinusoids with seeded phases; wavelengths never drop below 10 m.
      Rng rng(model.seed);
      const double base = std::max(10.0, model.wavelength);
      double y = camera_height;
      for (int i = 0; i < 4; ++i) {
        const double lambda = base * (1.0 + 3.0 * uniform01(rng));
        const double phase = two_pi * uniform01(rng);
        y += 0.25 * model.amplitude * std::sin(two_pi * z / lambda + phase);
      }
      return y;
    }
  }
  return camera_height;
}

void SceneSpec::validate() const {
  if (!(z_min > 0.0) || !(z_max > z_min)) throw InvalidArgument("scene needs 0 < z_min < z_max");
  if (!centerline.is_finite()) throw InvalidArgument("scene centerline must be finite");
  if (samples < 2) throw InvalidArgument("scene needs at least two samples per lane");
  if (!(camera_height > 0.0)) throw InvalidArgument("camera height must be positive");
  ground.validate();
  intrinsics.validate();
  image.validate();
}

FrameRecord generate_frame(const SceneSpec& spec) {
  spec.validate();
  FrameRecord frame;
  frame.tag = spec.tag;
  frame.seed = spec.seed;
  frame.intrinsics = spec.intrinsics;
  frame.image = spec.image;
  const auto zs = uniform_depths(spec.z_min, spec.z_max, spec.samples);
  for (double offset : spec.lateral_offsets) {
    std::vector<Point3D> lane;
    lane.reserve(zs.size());
    for (double z : zs)
      lane.push_back({eval_bev_curve(spec.centerline, z) + offset, ground_height(spec.ground, spec.camera_height, z), z});
    frame.lanes2d.push_back(project_points(spec.intrinsics, lane));
    frame.lanes3d.push_back(std::move(lane));
  }
  return frame;
}

std::vector<FrameRecord> generate_dataset(const std::vector<SceneSpec>& specs, int frames_per_spec,
                                          const Jitter& jitter) {
  if (frames_per_spec < 1) throw InvalidArgument("frames_per_spec must be at least 1");
  std::vector<FrameRecord> out;
  out.reserve(specs.size() * static_cast<std::size_t>(frames_per_spec));
  std::int64_t next_id = 0;
  for (const auto& base : specs) {
    for (int i = 0; i < frames_per_spec; ++i) {
      const std::uint64_t frame_seed = mix_seed(base.seed, static_cast<std::uint64_t>(i));
      Rng rng(frame_seed);
      auto draw = [&rng](double bound) { return bound * (2.0 * uniform01(rng) - 1.0); };
      SceneSpec spec = base;
      spec.centerline.a += draw(jitter.a);
      spec.centerline.b += draw(jitter.b);
      spec.centerline.c += draw(jitter.c);
      spec.centerline.d += draw(jitter.d);
      spec.ground.amplitude = std::max(0.0, spec.ground.amplitude + draw(jitter.amplitude));
      spec.ground.wavelength *= 1.0 + draw(jitter.wavelength);
      spec.ground.grade += draw(jitter.grade);
      auto frame = generate_frame(spec);
      frame.id = next_id++;
      frame.seed = frame_seed;
      out.push_back(std::move(frame));
    }
  }
  return out;
}

SceneSpec bump_scene() {
  SceneSpec spec;
  spec.tag = "bump";
  spec.ground.kind = GroundKind::Sine;
  spec.ground.amplitude = 0.3;
  spec.ground.wavelength = 20.0;
  return spec;
}

}  // namespace dlane
