#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "dlane/errors.hpp"
#include "dlane/geometry.hpp"
#include "dlane/random.hpp"

using namespace dlane;

TEST_CASE("bev curve evaluation") {
  CHECK(eval_bev_curve({0, 0, 0, 5}, 17.0) == 5.0);
  CHECK(eval_bev_curve({0, 0, 1, 0}, 2.0) == 2.0);
  CHECK(eval_bev_curve({1, 2, 3, 4}, 2.0) == 26.0);
  CHECK(eval_bev_slope({1, 2, 3, 4}, 2.0) == doctest::Approx(12 + 8 + 3));
}

TEST_CASE("bev curve matches a power-sum oracle") {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const BevCurve c{uniform(rng, -1e-4, 1e-4), uniform(rng, -1e-2, 1e-2), uniform(rng, -1, 1), uniform(rng, -5, 5)};
    const double z = uniform(rng, 0.1, 100.0);
    const long double ref = static_cast<long double>(c.a) * std::pow(static_cast<long double>(z), 3) +
                            static_cast<long double>(c.b) * std::pow(static_cast<long double>(z), 2) +
                            static_cast<long double>(c.c) * z + c.d;
    const double scale = std::abs(c.a) * z * z * z + std::abs(c.b) * z * z + std::abs(c.c) * z + std::abs(c.d);
    CHECK(std::abs(eval_bev_curve(c, z) - static_cast<double>(ref)) <= 1e-12 * scale);
  }
}

TEST_CASE("height interpolation and clamping") {
  const HeightProfile p{{1, 3}, 0, 10};
  CHECK(eval_height(p, 0) == 1.0);
  CHECK(eval_height(p, 5) == 2.0);
  CHECK(eval_height(p, -4) == 1.0);
  CHECK(eval_height(p, 10) == 3.0);
  CHECK(eval_height(p, 99) == 3.0);
}

TEST_CASE("height interpolation never overshoots") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    HeightProfile p;
    p.z_min = uniform(rng, 1, 10);
    p.z_max = p.z_min + uniform(rng, 1, 80);
    const int n = 2 + static_cast<int>(rng() % 80);
    for (int j = 0; j < n; ++j) p.heights.push_back(uniform(rng, -2, 2));
    const auto [lo, hi] = std::minmax_element(p.heights.begin(), p.heights.end());
    for (int j = 0; j < 50; ++j) {
      const double y = eval_height(p, uniform(rng, 0, 100));
      CHECK(y >= *lo);
      CHECK(y <= *hi);
    }
  }
}

TEST_CASE("keypoints are uniform in depth") {
  const HeightProfile p{std::vector<double>(5, 0.0), 10, 50};
  CHECK(p.keypoint_z(0) == 10.0);
  CHECK(p.keypoint_z(2) == 30.0);
  CHECK(p.keypoint_z(4) == 50.0);
}

TEST_CASE("sampling a lane") {
  DecoupledLane3D lane{{0, 0, 0, 0}, flat_profile(1.5, 5, 10, 4), 1.0};
  const auto two = sample_lane_3d(lane, 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == Point3D{0, 1.5, 5});
  CHECK(two[1] == Point3D{0, 1.5, 10});
  CHECK(sample_lane_3d(lane, 3)[1].z == 7.5);

  DecoupledLane3D diag{{0, 0, 1, 0}, flat_profile(0.0, 1, 3, 2), 1.0};
  const auto pts = sample_lane_3d(diag, 3);
  CHECK(pts[0].x == 1.0);
  CHECK(pts[1].x == 2.0);
  CHECK(pts[2].x == 3.0);
}

TEST_CASE("samples are strictly increasing with exact end points") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double z0 = uniform(rng, 0.1, 20), z1 = z0 + uniform(rng, 1e-3, 90);
    DecoupledLane3D lane{{0, 0, 0, 0}, flat_profile(1.5, z0, z1, 7), 1.0};
    const int count = 2 + static_cast<int>(rng() % 300);
    const auto pts = sample_lane_3d(lane, count);
    CHECK(pts.front().z == z0);
    CHECK(pts.back().z == z1);
    for (std::size_t j = 1; j < pts.size(); ++j) CHECK(pts[j].z > pts[j - 1].z);
  }
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(HeightProfile({{1.0}, 0, 1}).validate(), InvalidArgument);
  CHECK_THROWS_AS(HeightProfile({{1.0, 2.0}, 3, 3}).validate(), InvalidArgument);
  CHECK_THROWS_AS(HeightProfile({{1.0, NAN}, 0, 3}).validate(), InvalidArgument);
  DecoupledLane3D behind{{0, 0, 0, 0}, flat_profile(1.5, -1, 10, 3), 1.0};
  CHECK_THROWS_AS(behind.validate(), InvalidArgument);
  DecoupledLane3D inf{{INFINITY, 0, 0, 0}, flat_profile(1.5, 1, 10, 3), 1.0};
  CHECK_THROWS_AS(inf.validate(), InvalidArgument);
  CHECK_THROWS_AS(sample_lane_3d({{}, flat_profile(1.5, 1, 2, 2), 1.0}, 1), InvalidArgument);
}

TEST_CASE("interpolation along depth") {
  const std::vector<Point3D> pts{{0, 0, 1}, {2, 4, 3}, {2, 0, 5}};
  CHECK(interpolate_along_z(pts, 2).x == 1.0);
  CHECK(interpolate_along_z(pts, 2).y == 2.0);
  CHECK(interpolate_along_z(pts, 4).y == 2.0);
  CHECK(interpolate_along_z(pts, 0).x == 0.0);
  CHECK(interpolate_along_z(pts, 9).y == 0.0);
  CHECK_THROWS_AS(interpolate_along_z({}, 1.0), DegenerateInput);
}
