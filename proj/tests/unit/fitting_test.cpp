#include <cmath>
#include <numeric>

#include "doctest.h"
#include "dlane/datagen.hpp"
#include "dlane/errors.hpp"
#include "dlane/fitting.hpp"
#include "oracles.hpp"

using namespace dlane;

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Largest pixel distance between the fitted lane and the label, compared at
// the label's own depths.
double reprojection_residual(const DecoupledLane3D& lane, const std::vector<Point3D>& gt3d, const Lane2D& gt2d,
                             const CameraIntrinsics& k) {
  double worst = 0.0;
  for (std::size_t i = 0; i < gt3d.size(); ++i) {
    const double z = gt3d[i].z;
    const auto px = project_point(k, {eval_bev_curve(lane.curve, z), eval_height(lane.profile, z), z});
    worst = std::max(worst, std::hypot(px.u - gt2d.points[i].u, px.v - gt2d.points[i].v));
  }
  return worst;
}

}  // namespace

TEST_CASE("least squares reproduces exact data") {
  const std::vector<Point3D> pts{{3, 0, 1}, {5, 0, 2}, {7, 0, 3}, {9, 0, 4}};
  const auto fit = fit_bev_least_squares(pts, 3);
  const auto c = fit.to_bev_curve();
  CHECK(c.a == doctest::Approx(0).scale(1));
  CHECK(c.b == doctest::Approx(0).scale(1));
  CHECK(c.c == doctest::Approx(2));
  CHECK(c.d == doctest::Approx(1));
  CHECK(fit.rss == doctest::Approx(0).scale(1));
  const std::vector<Point3D> dup{{3, 0, 1}, {5, 0, 2}, {7, 0, 3}, {9, 0, 3}};
  CHECK_THROWS_AS(fit_bev_least_squares(dup, 3), RankDeficient);
  CHECK_THROWS_AS(fit_bev_least_squares(pts, 5), InvalidArgument);
}

TEST_CASE("least squares agrees with normal equations") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const BevCurve truth{uniform(rng, -0.05, 0.05), uniform(rng, -0.3, 0.3), uniform(rng, -1, 1), uniform(rng, -2, 2)};
    std::vector<Point3D> pts;
    std::vector<double> zs, xs;
    for (int i = 0; i < 30; ++i) {
      const double z = 1.0 + 3.0 * i / 29.0;
      pts.push_back({eval_bev_curve(truth, z) + oracle::normal(rng, 0.01), 0, z});
      zs.push_back(z);
      xs.push_back(pts.back().x);
    }
    const auto fit = fit_bev_least_squares(pts, 3);
    const auto ref = oracle::normal_equations_fit(zs, xs, 3);
    for (int p = 0; p < 4; ++p) CHECK(std::abs(fit.coefficients[p] - ref[p]) <= 1e-9);
  }
}

TEST_CASE("least squares on road-scale depths matches the oracle's fitted values") {
  Rng rng(77);
  for (int order = 1; order <= 4; ++order) {
    std::vector<double> zs, xs;
    for (int i = 0; i < 200; ++i) {
      const double z = 3 + 77.0 * i / 199.0;
      zs.push_back(z);
      xs.push_back(1e-5 * z * z * z - 1e-3 * z * z + 0.02 * z + 1 + oracle::normal(rng, 0.05));
    }
    const auto fit = fit_polynomial(zs, xs, order);
    const auto ref = oracle::normal_equations_fit(zs, xs, order);
    for (double z : zs) {
      double r = 0;
      for (int p = order; p >= 0; --p) r = r * z + ref[static_cast<std::size_t>(p)];
      CHECK(std::abs(fit(z) - r) <= 1e-9);
    }
  }
}

TEST_CASE("direct height fit") {
  std::vector<Point3D> flat, ramp, wave;
  for (int i = 0; i <= 100; ++i) {
    const double z = 10.0 * i / 100.0;
    flat.push_back({0, 1.2, z});
    ramp.push_back({0, 0.1 * z, z});
  }
  for (int i = 0; i <= 5000; ++i) {
    const double z = 20.0 * i / 5000.0;
    wave.push_back({0, std::sin(z), z});
  }
  for (double h : fit_heights_direct(flat, 9, 0, 10).heights) CHECK(h == 1.2);
  const auto r = fit_heights_direct(ramp, 2, 0, 10);
  CHECK(r.heights[0] == 0.0);
  CHECK(r.heights[1] == doctest::Approx(1.0));
  const auto w = fit_heights_direct(wave, 72, 0, 20);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(w.heights[i] - std::sin(w.keypoint_z(i))) < 1e-3);
  CHECK_THROWS_AS(fit_heights_direct({{0, 0, 1}}, 4, 0, 1), DegenerateInput);
}

TEST_CASE("perspective baseline") {
  SceneSpec spec;
  spec.lateral_offsets = {-1.75, 0.5};
  const auto frame = generate_frame(spec);
  for (const auto& lane : frame.lanes2d) CHECK(fit_perspective_baseline(lane, 1).max_abs_residual < 1e-9);
  const Lane2D three{{{0, 1}, {1, 2}, {2, 3}}};
  CHECK_THROWS_AS(fit_perspective_baseline(three, 3), RankDeficient);
}

TEST_CASE("2D fit from the exact answer stops immediately") {
  SceneSpec spec;
  spec.lateral_offsets = {1.0};
  spec.z_min = 12;
  spec.z_max = 60;
  const auto frame = generate_frame(spec);
  const DecoupledLane3D exact{{0, 0, 0, 1.0}, flat_profile(1.5, 12, 60), 1.0};
  FitConfig cfg;
  LossConfig loss;
  const auto r = fit_2d_projective(frame.lanes2d[0], frame.intrinsics, frame.image, exact, cfg, loss);
  CHECK(r.converged);
  CHECK(r.iterations == 0);
  CHECK(r.objective < 1e-9);
  CHECK(r.lane == exact);
}

TEST_CASE("2D fit recovers a flat lane from an offset start") {
  SceneSpec spec;
  spec.lateral_offsets = {1.75};
  spec.z_min = 12;
  spec.z_max = 60;
  const auto frame = generate_frame(spec);
  DecoupledLane3D init{{0, 0, 0, 1.75 + 0.5}, flat_profile(1.5, 12, 60), 1.0};
  FitConfig cfg;
  LossConfig loss;
  const auto r = fit_2d_projective(frame.lanes2d[0], frame.intrinsics, frame.image, init, cfg, loss);
  CHECK(r.final_loss.l_per < 1e-3);
  CHECK(r.final_loss.l_reg < 1e-3);
  CHECK(r.objective <= r.initial_objective);
}

TEST_CASE("2D fit on bumpy ground keeps the curve straight") {
  // Where the road hides itself behind a crest the label's first crossing
  // jumps between branches; those rows give no gradient, so the pixel check
  // skips rows within 10 of a jump.
  const auto frame = generate_frame(bump_scene());
  FitConfig cfg;
  LossConfig loss;
  for (std::size_t i = 0; i < frame.lanes2d.size(); ++i) {
    const auto init = init_from_ground_plane(frame.lanes2d[i], frame.intrinsics, cfg);
    const auto r = fit_2d_projective(frame.lanes2d[i], frame.intrinsics, frame.image, init, cfg, loss);
    CHECK(std::abs(r.lane.curve.a) < 1e-3);
    CHECK(std::abs(r.lane.curve.b) < 1e-3);
    CHECK(r.objective < r.initial_objective);
    const auto gt = resample_lane(frame.lanes2d[i], frame.image);
    const auto pred = resample_lane(project_lane(frame.intrinsics, r.lane, 72), frame.image);
    const auto rows = static_cast<long>(gt.rows());
    auto near_jump = [&](long row) {
      for (long a = std::max(0L, row - 11); a <= std::min(rows - 2, row + 10); ++a) {
        const auto ua = static_cast<std::size_t>(a);
        if (gt.present[ua] && gt.present[ua + 1] && std::abs(gt.u[ua + 1] - gt.u[ua]) > 3.0) return true;
      }
      return false;
    };
    double worst = 0.0;
    std::size_t used = 0, common = 0;
    for (long row = 0; row < rows; ++row) {
      const auto r_ = static_cast<std::size_t>(row);
      if (!gt.present[r_] || !pred.present[r_]) continue;
      ++common;
      if (near_jump(row)) continue;
      ++used;
      worst = std::max(worst, std::abs(gt.u[r_] - pred.u[r_]));
    }
    CHECK(used * 2 > common);
    CHECK(worst < 1.0);
  }
}

TEST_CASE("3D fit on noiseless labels stays at the least-squares start") {
  // Straight lanes on planar ground: every resampling of the labels is exact,
  // so least squares already sits at the optimum of the full objective.
  for (auto kind : {GroundKind::Flat, GroundKind::Slope}) {
    SceneSpec spec;
    spec.ground.kind = kind;
    spec.ground.grade = 0.02;
    spec.centerline = {0.0, 0.0, 0.03, 0.4};
    const auto frame = generate_frame(spec);
    FitConfig cfg;
    LossConfig loss;
    for (std::size_t i = 0; i < frame.lanes2d.size(); ++i) {
      const auto& pts = frame.lanes3d[i];
      const auto r = fit_3d(frame.lanes2d[i], pts, frame.intrinsics, frame.image, cfg, loss);
      const auto ls = fit_bev_least_squares(pts, 3).to_bev_curve();
      CHECK(std::abs(r.lane.curve.a - ls.a) < 1e-6);
      CHECK(std::abs(r.lane.curve.b - ls.b) < 1e-6);
      CHECK(std::abs(r.lane.curve.c - ls.c) < 1e-6);
      CHECK(std::abs(r.lane.curve.d - ls.d) < 1e-6);
      const auto direct = fit_heights_direct(pts, cfg.keypoints, pts.front().z, pts.back().z);
      for (std::size_t j = 0; j < direct.size(); ++j)
        CHECK(std::abs(r.lane.profile.heights[j] - direct.heights[j]) < 1e-6);
      CHECK(std::abs(r.lane.profile.z_min - direct.z_min) < 1e-6);
      CHECK(std::abs(r.lane.profile.z_max - direct.z_max) < 1e-6);
      CHECK(r.objective <= r.initial_objective);
    }
  }
}

TEST_CASE("3D fit on bumpy ground follows the road profile") {
  const auto frame = generate_frame(bump_scene());
  FitConfig cfg;
  LossConfig loss;
  for (std::size_t i = 0; i < frame.lanes2d.size(); ++i) {
    const auto& pts = frame.lanes3d[i];
    const auto r = fit_3d(frame.lanes2d[i], pts, frame.intrinsics, frame.image, cfg, loss);
    CHECK(r.objective <= r.initial_objective);
    CHECK(std::abs(r.lane.curve.a) < 1e-3);
    CHECK(std::abs(r.lane.curve.b) < 1e-3);
    // 72 keypoints cannot follow the crest exactly right in front of the
    // camera, where a centimeter of height is several pixels.
    CHECK(reprojection_residual(r.lane, pts, frame.lanes2d[i], frame.intrinsics) < 3.0);
    std::vector<double> truth;
    for (std::size_t j = 0; j < r.lane.profile.size(); ++j)
      truth.push_back(ground_height(bump_scene().ground, 1.5, r.lane.profile.keypoint_z(j)));
    CHECK(pearson(r.lane.profile.heights, truth) > 0.99);
  }
}

TEST_CASE("3D fit on noisy labels does not increase the 3D loss when only it is weighted") {
  Rng rng(8);
  FitConfig cfg;
  cfg.max_iters = 400;
  LossConfig loss;
  for (int trial = 0; trial < 4; ++trial) {
    SceneSpec spec = bump_scene();
    spec.seed = static_cast<std::uint64_t>(trial);
    spec.lateral_offsets = {uniform(rng, -2, 2)};
    auto frame = generate_frame(spec);
    auto noisy = frame.lanes3d[0];
    for (auto& p : noisy) {
      p.x += oracle::normal(rng, 0.05);
      p.y += oracle::normal(rng, 0.05);
    }
    // the image label comes from the same noisy points
    const auto label2d = project_points(frame.intrinsics, noisy);
    // joint weights trade 3D loss for image fit, so only the objective is monotone there
    const auto joint = fit_3d(label2d, noisy, frame.intrinsics, frame.image, cfg, loss);
    CHECK(joint.objective <= joint.initial_objective);
    FitConfig only3d = cfg;
    only3d.weights = {1.0, 0.0};
    const auto r = fit_3d(label2d, noisy, frame.intrinsics, frame.image, only3d, loss);
    const double l3d_final = r.final_loss.l_bev + r.final_loss.l_h + r.final_loss.l_z;
    const auto target = make_target_3d(noisy, cfg.keypoints, loss.bev.sample_count);
    DecoupledLane3D init{fit_bev_least_squares(noisy, 3).to_bev_curve(),
                         fit_heights_direct(noisy, cfg.keypoints, target.z_min, target.z_max), 1.0};
    const double l3d_init = bev_iou_loss(init, target.z_grid, target.xs, loss.bev.e).value +
                            height_loss(init.profile, target.heights).value +
                            endpoint_z_loss(init.profile, target.z_min, target.z_max).value;
    CHECK(r.objective <= r.initial_objective);
    CHECK(l3d_final <= l3d_init + 1e-12);
  }
}

TEST_CASE("fits are deterministic") {
  const auto frame = generate_frame(bump_scene());
  FitConfig cfg;
  cfg.max_iters = 300;
  LossConfig loss;
  const auto init = init_from_ground_plane(frame.lanes2d[0], frame.intrinsics, cfg);
  const auto a = fit_2d_projective(frame.lanes2d[0], frame.intrinsics, frame.image, init, cfg, loss);
  const auto b = fit_2d_projective(frame.lanes2d[0], frame.intrinsics, frame.image, init, cfg, loss);
  CHECK(a.lane == b.lane);
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("bezier and quadratic parameterisations") {
  const auto frame = generate_frame(bump_scene());
  LossConfig loss;
  FitConfig cfg;
  cfg.max_iters = 300;
  cfg.curve = CurveMode::Quadratic;
  const auto q = fit_3d(frame.lanes2d[0], frame.lanes3d[0], frame.intrinsics, frame.image, cfg, loss);
  CHECK(q.lane.curve.a == 0.0);
  cfg.curve = CurveMode::Bezier;
  const auto b = fit_3d(frame.lanes2d[0], frame.lanes3d[0], frame.intrinsics, frame.image, cfg, loss);
  CHECK(std::abs(b.lane.curve.d - (-1.75)) < 1e-3);
  cfg.curve = CurveMode::Quartic;
  CHECK_THROWS_AS(fit_3d(frame.lanes2d[0], frame.lanes3d[0], frame.intrinsics, frame.image, cfg, loss), InvalidArgument);
}

TEST_CASE("2D fit without overlap") {
  SceneSpec spec;
  spec.lateral_offsets = {0.0};
  const auto frame = generate_frame(spec);
  const DecoupledLane3D far{{0, 0, 0, 0}, flat_profile(1.5, 500, 900), 1.0};
  CHECK_THROWS_AS(fit_2d_projective(frame.lanes2d[0], frame.intrinsics, frame.image, far, {}, {}), NoOverlap);
}
