#include <cmath>

#include "doctest.h"
#include "dlane/camera.hpp"
#include "dlane/errors.hpp"
#include "dlane/random.hpp"

using namespace dlane;

TEST_CASE("pinhole projection") {
  const CameraIntrinsics k;
  CHECK(project_point(k, {0, 0, 10}) == Pixel{400, 160});
  CHECK(project_point(k, {1, 0, 10}) == Pixel{500, 160});
  CHECK_THROWS_AS(project_point(k, {0, 1, 0}), DomainError);
  CHECK_THROWS_AS(project_point(k, {0, 1, -3}), DomainError);
}

TEST_CASE("flat central lane converges to the principal point") {
  const CameraIntrinsics k;
  const DecoupledLane3D lane{{0, 0, 0, 0}, flat_profile(1.5, 5, 50), 1.0};
  const auto img = project_lane(k, lane, 72);
  REQUIRE(img.points.size() == 72);
  for (std::size_t i = 0; i < img.points.size(); ++i) {
    CHECK(img.points[i].u == 400.0);
    if (i > 0) CHECK(img.points[i].v < img.points[i - 1].v);
  }
}

TEST_CASE("parallel lanes narrow with depth") {
  const CameraIntrinsics k;
  const DecoupledLane3D left{{0, 0, 0, -1.75}, flat_profile(1.5, 5, 50), 1.0};
  const DecoupledLane3D right{{0, 0, 0, 1.75}, flat_profile(1.5, 5, 50), 1.0};
  const auto l = project_lane(k, left, 72), r = project_lane(k, right, 72);
  const auto zs = uniform_depths(5, 50, 72);
  CHECK(r.points[0].u - l.points[0].u == doctest::Approx(700.0));
  for (std::size_t i = 0; i < zs.size(); ++i) {
    CHECK(r.points[i].u - l.points[i].u == doctest::Approx(k.fx * 3.5 / zs[i]));
    if (i > 0) CHECK(r.points[i].u - l.points[i].u < r.points[i - 1].u - l.points[i - 1].u);
  }
}

TEST_CASE("bumpy heights zigzag in v while u stays put") {
  const CameraIntrinsics k;
  DecoupledLane3D lane{{0, 0, 0, 0}, {{}, 5, 50}, 1.0};
  const auto zs = uniform_depths(5, 50, 72);
  for (double z : zs) lane.profile.heights.push_back(1.5 + 0.3 * std::sin(z));
  const auto img = project_lane(k, lane, 72);
  bool rises = false, falls = false;
  for (std::size_t i = 1; i < img.points.size(); ++i) {
    CHECK(img.points[i].u == 400.0);
    CHECK(img.points[i].v == doctest::Approx(k.fy * (1.5 + 0.3 * std::sin(zs[i])) / zs[i] + k.oy));
    rises = rises || img.points[i].v > img.points[i - 1].v;
    falls = falls || img.points[i].v < img.points[i - 1].v;
  }
  CHECK(rises);
  CHECK(falls);
}

TEST_CASE("ground inversion") {
  const CameraIntrinsics k;
  const auto p = invert_to_ground(k, 400, 310, 1.5);
  CHECK(p.z == doctest::Approx(10));
  CHECK(p.x == 0.0);
  const auto q = invert_to_ground(k, 500, 310, 1.5);
  CHECK(q.z == doctest::Approx(10));
  CHECK(q.x == doctest::Approx(1));
  CHECK_THROWS_AS(invert_to_ground(k, 400, 160, 1.5), DomainError);
  CHECK_THROWS_AS(invert_to_ground(k, 400, 100, 1.5), DomainError);
  CHECK_THROWS_AS(invert_to_ground(k, 400, 300, 0.0), DomainError);
}

TEST_CASE("projection round trip and homogeneity") {
  Rng rng(5);
  const CameraIntrinsics k{uniform(rng, 500, 1500), uniform(rng, 500, 1500), uniform(rng, 0, 800),
                           uniform(rng, 0, 320)};
  for (int i = 0; i < 1000; ++i) {
    const Point3D p{uniform(rng, -20, 20), uniform(rng, 0.1, 3), uniform(rng, 0.5, 150)};
    const auto px = project_point(k, p);
    const auto back = invert_to_ground(k, px.u, px.v, p.y);
    CHECK(std::abs(back.x - p.x) <= 1e-9 * std::max(1.0, std::abs(p.x)));
    CHECK(std::abs(back.z - p.z) <= 1e-9 * p.z);
    const double s = uniform(rng, 0.1, 10);
    const auto scaled = project_point(k, {p.x * s, p.y * s, p.z * s});
    CHECK(scaled.u == doctest::Approx(px.u).epsilon(1e-12));
    CHECK(scaled.v == doctest::Approx(px.v).epsilon(1e-12));
  }
}

TEST_CASE("intrinsics and image validation") {
  CHECK_THROWS_AS(CameraIntrinsics({0, 1000, 400, 160}).validate(), InvalidArgument);
  CHECK_THROWS_AS(CameraIntrinsics({1000, 1000, NAN, 160}).validate(), InvalidArgument);
  CHECK_THROWS_AS(ImageSpec({0, 10}).validate(), InvalidArgument);
  CHECK_NOTHROW(ImageSpec{}.validate());
}
