#include <cmath>

#include "doctest.h"
#include "dlane/datagen.hpp"
#include "dlane/errors.hpp"
#include "dlane/fitting.hpp"
#include "dlane/io.hpp"

using namespace dlane;

TEST_CASE("ground models") {
  const double pi = 3.14159265358979323846;
  CHECK(ground_height({GroundKind::Flat, 0, 20, 0, 0}, 1.5, 37) == 1.5);
  CHECK(ground_height({GroundKind::Sine, 0, 20, 0, 0}, 1.5, 12) == 1.5);
  CHECK(ground_height({GroundKind::Sine, 0.3, 20, 0, 0}, 1.5, 5) == doctest::Approx(1.8));
  CHECK(ground_height({GroundKind::Slope, 0, 20, 0.02, 0}, 1.5, 10) == doctest::Approx(1.3));
  const GroundModel noise{GroundKind::SmoothNoise, 0.4, 20, 0, 42};
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i < 1000; ++i) {
    const double y = ground_height(noise, 1.5, i * 0.1);
    lo = std::min(lo, y);
    hi = std::max(hi, y);
    CHECK(y == ground_height(noise, 1.5, i * 0.1));
  }
  CHECK(hi - lo > 0.05);
  CHECK(hi <= 1.5 + 0.4 + 1e-12);
  CHECK(ground_height({GroundKind::SmoothNoise, 0.4, 20, 0, 43}, 1.5, 7) != ground_height(noise, 1.5, 7));
  CHECK_THROWS_AS(GroundModel({GroundKind::Sine, -1, 20, 0, 0}).validate(), InvalidArgument);
  CHECK_THROWS_AS(GroundModel({GroundKind::Sine, 1, 0, 0, 0}).validate(), InvalidArgument);
  (void)pi;
}

TEST_CASE("flat straight lane is a pixel column") {
  SceneSpec spec;
  spec.lateral_offsets = {0.0};
  const auto f = generate_frame(spec);
  REQUIRE(f.lanes2d.size() == 1);
  REQUIRE(f.lanes3d[0].size() == 200);
  for (const auto& p : f.lanes2d[0].points) CHECK(p.u == 400.0);
}

TEST_CASE("bumpy ground zigzags in the image only") {
  SceneSpec spec = bump_scene();
  spec.lateral_offsets = {0.0};
  const auto f = generate_frame(spec);
  bool up = false, down = false;
  for (std::size_t i = 1; i < f.lanes2d[0].points.size(); ++i) {
    const double dv = f.lanes2d[0].points[i].v - f.lanes2d[0].points[i - 1].v;
    up = up || dv > 0;
    down = down || dv < 0;
    CHECK(f.lanes3d[0][i].x == 0.0);
  }
  CHECK(up);
  CHECK(down);
}

TEST_CASE("lanes converge to the vanishing point") {
  SceneSpec spec;
  spec.z_max = 5000;
  const auto f = generate_frame(spec);
  const auto& l = f.lanes2d[0].points;
  const auto& r = f.lanes2d[1].points;
  CHECK(std::abs(r.back().u - l.back().u) < 1.0);
  CHECK(std::abs(l.back().u - 400) < 0.5);
  CHECK(std::abs(l.back().v - 160) < 0.5);
  for (std::size_t i = 1; i < l.size(); ++i) CHECK(r[i].u - l[i].u < r[i - 1].u - l[i - 1].u);
}

TEST_CASE("projection exactness and BEV recoverability") {
  SceneSpec spec;
  spec.centerline = {2e-5, -1e-3, 0.03, 0.2};
  spec.ground = {GroundKind::SmoothNoise, 0.3, 15, 0, 5};
  const auto f = generate_frame(spec);
  for (std::size_t i = 0; i < f.lanes3d.size(); ++i) {
    for (std::size_t j = 0; j < f.lanes3d[i].size(); ++j) {
      const auto px = project_point(f.intrinsics, f.lanes3d[i][j]);
      CHECK(std::abs(px.u - f.lanes2d[i].points[j].u) <= 1e-9);
      CHECK(std::abs(px.v - f.lanes2d[i].points[j].v) <= 1e-9);
    }
    const auto fit = fit_bev_least_squares(f.lanes3d[i], 3);
    CHECK(fit.max_abs_residual < 1e-9);
    const auto c = fit.to_bev_curve();
    CHECK(c.d == doctest::Approx(0.2 + spec.lateral_offsets[i]));
    CHECK(c.a == doctest::Approx(2e-5));
  }
}

TEST_CASE("dataset determinism and jitter") {
  const std::vector<SceneSpec> specs{bump_scene(), SceneSpec{}};
  const auto plain = generate_dataset(specs, 3, {});
  REQUIRE(plain.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(plain[static_cast<std::size_t>(i)].id == i);
  CHECK(plain[0].lanes3d == plain[1].lanes3d);
  CHECK(plain[0].lanes3d == generate_frame(bump_scene()).lanes3d);
  Jitter j;
  j.c = 0.01;
  j.d = 0.5;
  j.amplitude = 0.1;
  j.wavelength = 0.2;
  const auto a = generate_dataset(specs, 3, j);
  const auto b = generate_dataset(specs, 3, j);
  CHECK(a == b);
  CHECK(dataset_to_jsonl(a) == dataset_to_jsonl(b));
  CHECK(a[0].lanes3d != a[1].lanes3d);
  CHECK_THROWS_AS(generate_dataset(specs, 0, j), InvalidArgument);
}

TEST_CASE("bump frames defeat a straight image-space fit but not a straight BEV fit") {
  Jitter j;
  j.amplitude = 0.05;
  j.wavelength = 0.1;
  j.d = 0.3;
  const auto frames = generate_dataset({bump_scene()}, 100, j);
  for (const auto& f : frames)
    for (std::size_t i = 0; i < f.lanes2d.size(); ++i) {
      CHECK(fit_perspective_baseline(f.lanes2d[i], 1).max_abs_residual > 2.0);
      CHECK(fit_bev_least_squares(f.lanes3d[i], 1).max_abs_residual < 1e-9);
    }
}

TEST_CASE("scene validation") {
  SceneSpec s;
  s.z_min = 0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = {};
  s.samples = 1;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
}
