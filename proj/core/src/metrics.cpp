#include "dlane/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dlane/errors.hpp"

namespace dlane {
namespace {

double point_segment_distance_sq(double px, double py, const Pixel& a, const Pixel& b) {
  const double dx = b.u - a.u;
  const double dy = b.v - a.v;
  const double len_sq = dx * dx + dy * dy;
  double t = 0.0;
  if (len_sq > 0.0) t = std::clamp(((px - a.u) * dx + (py - a.v) * dy) / len_sq, 0.0, 1.0);
  const double ex = a.u + t * dx - px;
  const double ey = a.v + t * dy - py;
  return ex * ex + ey * ey;
}

double point_segment_distance(const Point3D& p, const Point3D& a, const Point3D& b) {
  const double dx = b.x - a.x, dy = b.y - a.y, dz = b.z - a.z;
  const double len_sq = dx * dx + dy * dy + dz * dz;
  double t = 0.0;
  if (len_sq > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy + (p.z - a.z) * dz) / len_sq, 0.0, 1.0);
  const double ex = a.x + t * dx - p.x, ey = a.y + t * dy - p.y, ez = a.z + t * dz - p.z;
  return std::sqrt(ex * ex + ey * ey + ez * ez);
}

double mean_distance_to_polyline(const std::vector<Point3D>& from, const std::vector<Point3D>& to) {
  double sum = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    if (to.size() == 1) {
      best = point_segment_distance(p, to[0], to[0]);
    } else {
      for (std::size_t j = 0; j + 1 < to.size(); ++j) best = std::min(best, point_segment_distance(p, to[j], to[j + 1]));
    }
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace

std::vector<double> EvalConfig::default_thresholds() {
  return {0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
}

void EvalConfig::validate() const {
  if (!(lane_width >= 1.0)) throw InvalidArgument("lane_width must be at least 1 pixel");
  if (iou_thresholds.empty()) throw InvalidArgument("at least one IoU threshold is required");
  for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
    const double t = iou_thresholds[i];
    if (!(t > 0.0 && t <= 1.0)) throw InvalidArgument("IoU thresholds must lie in (0, 1]");
    if (i > 0 && !(t > iou_thresholds[i - 1])) throw InvalidArgument("IoU thresholds must be strictly increasing");
  }
  if (!(tusimple_pixel_tol >= 0.0)) throw InvalidArgument("tusimple_pixel_tol must be non-negative");
  if (!(tusimple_row_step > 0.0)) throw InvalidArgument("tusimple_row_step must be positive");
  if (!(raster_scale > 0.0)) throw InvalidArgument("raster_scale must be positive");
}

std::size_t Mask::count() const noexcept {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

Mask rasterize_lane(const Lane2D& lane, const ImageSpec& image, double width) {
  image.validate();
  if (!(width >= 1.0)) throw InvalidArgument("lane width must be at least 1 pixel");
  Mask mask(image.width, image.height);
  const auto& pts = lane.points;
  if (pts.empty()) return mask;
  const double radius = 0.5 * (width - 1.0);
  const double r_sq = radius * radius;
  const std::size_t segments = pts.size() == 1 ? 1 : pts.size() - 1;
  for (std::size_t j = 0; j < segments; ++j) {
    const Pixel& a = pts[j];
    const Pixel& b = pts.size() == 1 ? pts[0] : pts[j + 1];
    // Pixel (x, y) has its centre at (x + 0.5, y + 0.5).
    const double u_lo = std::min(a.u, b.u) - radius, u_hi = std::max(a.u, b.u) + radius;
    const double v_lo = std::min(a.v, b.v) - radius, v_hi = std::max(a.v, b.v) + radius;
    const int x0 = std::max(0, static_cast<int>(std::floor(u_lo - 0.5)));
    const int x1 = std::min(image.width - 1, static_cast<int>(std::ceil(u_hi - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(v_lo - 0.5)));
    const int y1 = std::min(image.height - 1, static_cast<int>(std::ceil(v_hi - 0.5)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        auto& cell = mask.data[static_cast<std::size_t>(y) * static_cast<std::size_t>(image.width) +
                               static_cast<std::size_t>(x)];
        if (cell) continue;
        if (point_segment_distance_sq(x + 0.5, y + 0.5, a, b) <= r_sq) cell = 1;
      }
    }
  }
  return mask;
}

double mask_iou(const Mask& a, const Mask& b) {
  if (a.width != b.width || a.height != b.height) throw DimensionMismatch("masks differ in size");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    inter += (a.data[i] & b.data[i]);
    uni += (a.data[i] | b.data[i]);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double ThresholdCounts::precision() const noexcept {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double ThresholdCounts::recall() const noexcept {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double ThresholdCounts::f1() const noexcept {
  const double p = precision();
  const double r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

double F1Result::mf1() const noexcept {
  if (per_threshold.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : per_threshold) sum += c.f1();
  return sum / static_cast<double>(per_threshold.size());
}

Matrix iou_matrix(const std::vector<Lane2D>& preds, const std::vector<Lane2D>& gts, const ImageSpec& image,
                  const EvalConfig& cfg) {
  const ImageSpec scaled{std::max(1, static_cast<int>(std::lround(image.width * cfg.raster_scale))),
                         std::max(1, static_cast<int>(std::lround(image.height * cfg.raster_scale)))};
  auto raster = [&](const Lane2D& lane) {
    Lane2D s = lane;
    for (auto& p : s.points) {
      p.u *= cfg.raster_scale;
      p.v *= cfg.raster_scale;
    }
    return rasterize_lane(s, scaled, cfg.lane_width * cfg.raster_scale);
  };
  std::vector<Mask> pm, gm;
  pm.reserve(preds.size());
  gm.reserve(gts.size());
  for (const auto& p : preds) pm.push_back(raster(p));
  for (const auto& g : gts) gm.push_back(raster(g));
  Matrix ious(preds.size(), gts.size());
  for (std::size_t i = 0; i < pm.size(); ++i)
    for (std::size_t j = 0; j < gm.size(); ++j) ious(i, j) = mask_iou(pm[i], gm[j]);
  return ious;
}

std::vector<ThresholdCounts> counts_from_ious(const Matrix& ious, const std::vector<double>& thresholds) {
  const auto preds = static_cast<long>(ious.rows());
  const auto gts = static_cast<long>(ious.cols());
  Matrix cost(ious.rows(), ious.cols());
  for (std::size_t i = 0; i < ious.rows(); ++i)
    for (std::size_t j = 0; j < ious.cols(); ++j) cost(i, j) = 1.0 - ious(i, j);
  const auto assignment = solve_assignment(cost);

  std::vector<ThresholdCounts> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    ThresholdCounts c;
    c.threshold = t;
    for (std::size_t i = 0; i < ious.rows(); ++i) {
      const int j = assignment.row_to_col.empty() ? -1 : assignment.row_to_col[i];
      if (j >= 0 && ious(i, static_cast<std::size_t>(j)) >= t) ++c.tp;
    }
    c.fp = preds - c.tp;
    c.fn = gts - c.tp;
    out.push_back(c);
  }
  return out;
}

F1Result f1_suite(const std::vector<Lane2D>& preds, const std::vector<Lane2D>& gts, const ImageSpec& image,
                  const EvalConfig& cfg) {
  cfg.validate();
  return {counts_from_ious(iou_matrix(preds, gts, image, cfg), cfg.iou_thresholds)};
}

double TuSimpleResult::accuracy() const noexcept {
  return gt_points == 0 ? 0.0 : static_cast<double>(correct_points) / static_cast<double>(gt_points);
}

double TuSimpleResult::fp_rate() const noexcept {
  return predictions == 0 ? 0.0 : static_cast<double>(predictions - matched) / static_cast<double>(predictions);
}

double TuSimpleResult::fn_rate() const noexcept {
  return ground_truths == 0 ? 0.0
                            : static_cast<double>(ground_truths - matched) / static_cast<double>(ground_truths);
}

TuSimpleResult& TuSimpleResult::operator+=(const TuSimpleResult& o) {
  correct_points += o.correct_points;
  gt_points += o.gt_points;
  predictions += o.predictions;
  ground_truths += o.ground_truths;
  matched += o.matched;
  return *this;
}

std::vector<double> tusimple_row_anchors(const ImageSpec& image, double step) {
  if (!(step > 0.0)) throw InvalidArgument("row anchor step must be positive");
  std::vector<double> rows;
  for (double v = 0.0; v < image.height; v += step) rows.push_back(v);
  return rows;
}

TuSimpleResult tusimple_accuracy(const std::vector<Lane2D>& preds, const std::vector<Lane2D>& gts,
                                 const std::vector<double>& row_anchors, const EvalConfig& cfg) {
  auto sample = [&](const Lane2D& lane) {
    std::vector<std::optional<double>> us;
    us.reserve(row_anchors.size());
    for (double v : row_anchors) {
      const auto hit = intersect_row(lane, v);
      us.push_back(hit ? std::optional<double>(hit->u) : std::nullopt);
    }
    return us;
  };

  TuSimpleResult out;
  out.predictions = static_cast<long>(preds.size());
  std::vector<std::vector<std::optional<double>>> gt_rows;
  std::vector<long> gt_counts;
  for (const auto& g : gts) {
    auto rows = sample(g);
    const auto n = std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.has_value(); });
    if (n == 0) continue;  // not visible at any anchor
    gt_rows.push_back(std::move(rows));
    gt_counts.push_back(static_cast<long>(n));
    out.gt_points += n;
  }
  out.ground_truths = static_cast<long>(gt_rows.size());

  std::vector<std::vector<std::optional<double>>> pred_rows;
  for (const auto& p : preds) pred_rows.push_back(sample(p));

  Matrix correct(pred_rows.size(), gt_rows.size());
  Matrix cost(pred_rows.size(), gt_rows.size());
  for (std::size_t i = 0; i < pred_rows.size(); ++i) {
    for (std::size_t j = 0; j < gt_rows.size(); ++j) {
      long hits = 0;
      for (std::size_t r = 0; r < row_anchors.size(); ++r) {
        const auto& gu = gt_rows[j][r];
        const auto& pu = pred_rows[i][r];
        if (gu && pu && std::abs(*gu - *pu) <= cfg.tusimple_pixel_tol) ++hits;
      }
      correct(i, j) = static_cast<double>(hits);
      cost(i, j) = 1.0 - static_cast<double>(hits) / static_cast<double>(gt_counts[j]);
    }
  }
  const auto assignment = solve_assignment(cost);
  for (std::size_t i = 0; i < pred_rows.size(); ++i) {
    const int j = assignment.row_to_col.empty() ? -1 : assignment.row_to_col[i];
    if (j < 0) continue;
    const auto ju = static_cast<std::size_t>(j);
    out.correct_points += static_cast<long>(correct(i, ju));
    if (correct(i, ju) / static_cast<double>(gt_counts[ju]) >= cfg.tusimple_match_fraction) ++out.matched;
  }
  return out;
}

double chamfer_distance(const std::vector<Point3D>& a, const std::vector<Point3D>& b) {
  if (a.empty() || b.empty()) throw DegenerateInput("chamfer distance needs two non-empty point sets");
  return 0.5 * (mean_distance_to_polyline(a, b) + mean_distance_to_polyline(b, a));
}

std::optional<double> cd_error(const std::vector<DecoupledLane3D>& preds,
                               const std::vector<std::vector<Point3D>>& gts, const MatchResult& matches) {
  if (matches.pairs.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& m : matches.pairs) {
    const auto& pred = preds.at(static_cast<std::size_t>(m.prediction));
    const auto& gt = gts.at(static_cast<std::size_t>(m.ground_truth));
    sum += chamfer_distance(sample_lane_3d(pred, kChamferSamples), gt);
  }
  return sum / static_cast<double>(matches.pairs.size());
}

}  // namespace dlane

namespace dlane {

double EvalReport::mf1() const noexcept { return F1Result{counts}.mf1(); }

const ThresholdCounts& EvalReport::at_default() const {
  if (counts.empty()) throw InvalidArgument("report has no thresholds");
  for (const auto& c : counts)
    if (std::abs(c.threshold - 0.5) < 1e-12) return c;
  return counts.front();
}

}  // namespace dlane
