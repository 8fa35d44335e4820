#include "dlane/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dlane/errors.hpp"

namespace dlane {
namespace {

// Residuals this small are rounding noise from projection and resampling;
// they are ties and take the zero subgradient.
constexpr double kTie = 1e-9;

double sign(double x) noexcept { return x > kTie ? 1.0 : (x < -kTie ? -1.0 : 0.0); }

// d(1 - IoU_i)/d(x_pred) for one sample, before averaging.
double iou_loss_slope(double delta, double e) noexcept {
  const double denom = 2.0 * e + std::abs(delta);
  return 4.0 * e / (denom * denom) * sign(delta);
}

double sample_iou(double xp, double xg, double e) noexcept {
  const double lo = std::min(xp, xg);
  const double hi = std::max(xp, xg);
  return (2.0 * e + lo - hi) / (2.0 * e + hi - lo);
}

// One projected sample with the partial derivatives needed for chaining.
struct ProjectedSample {
  double u = 0.0, v = 0.0;
  std::array<double, 4> du_dcurve{};
  double du_dz = 0.0;  // total derivative along the curve
  double dv_dz = 0.0;
  double s = 0.0;      // normalised position, dz/dz_min = 1 - s, dz/dz_max = s
  KeypointWeights hw;
  double dv_dh = 0.0;  // fy / z, split over hw
};

std::vector<ProjectedSample> project_with_jacobian(const DecoupledLane3D& lane, const CameraIntrinsics& k,
                                                   int count) {
  const auto zs = uniform_depths(lane.profile.z_min, lane.profile.z_max, count);
  const auto& h = lane.profile.heights;
  std::vector<ProjectedSample> out(zs.size());
  for (std::size_t i = 0; i < zs.size(); ++i) {
    auto& ps = out[i];
    const double z = zs[i];
    if (!(z > 0.0)) throw DomainError("lane sample at or behind the camera plane");
    ps.s = static_cast<double>(i) / static_cast<double>(zs.size() - 1);
    ps.hw = keypoint_weights(h.size(), ps.s);
    const double x = eval_bev_curve(lane.curve, z);
    const double y = (1.0 - ps.hw.w) * h[ps.hw.lo] + ps.hw.w * h[ps.hw.lo + 1];
    ps.u = k.fx * x / z + k.ox;
    ps.v = k.fy * y / z + k.oy;
    const double fz = k.fx / z;
    ps.du_dcurve = {fz * z * z * z, fz * z * z, fz * z, fz};
    ps.du_dz = k.fx * (eval_bev_slope(lane.curve, z) * z - x) / (z * z);
    ps.dv_dz = -k.fy * y / (z * z);
    ps.dv_dh = k.fy / z;
  }
  return out;
}

// Accumulates dL/du_i and dL/dv_i into a parameter gradient.
void chain_samples(const std::vector<ProjectedSample>& samples, std::span<const double> dl_du,
                   std::span<const double> dl_dv, LaneGradient& g) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& ps = samples[i];
    const double cu = dl_du[i];
    const double cv = dl_dv[i];
    if (cu == 0.0 && cv == 0.0) continue;
    for (int c = 0; c < 4; ++c) g.curve[c] += cu * ps.du_dcurve[c];
    const double dz = cu * ps.du_dz + cv * ps.dv_dz;
    g.z_min += dz * (1.0 - ps.s);
    g.z_max += dz * ps.s;
    g.heights[ps.hw.lo] += cv * ps.dv_dh * (1.0 - ps.hw.w);
    g.heights[ps.hw.lo + 1] += cv * ps.dv_dh * ps.hw.w;
  }
}

}  // namespace

void IoUConfig::validate() const {
  if (!(e > 0.0) || !std::isfinite(e)) throw InvalidArgument("IoU radius e must be positive");
  if (sample_count < 2) throw InvalidArgument("IoU sample_count must be at least 2");
}

void LossWeights::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
    throw InvalidArgument("loss weights must be finite and non-negative");
}

LaneGradient LaneGradient::zeros(std::size_t keypoints) {
  LaneGradient g;
  g.heights.assign(keypoints, 0.0);
  return g;
}

LaneGradient& LaneGradient::operator+=(const LaneGradient& other) {
  if (heights.size() != other.heights.size()) throw LengthMismatch("gradient keypoint counts differ");
  for (int c = 0; c < 4; ++c) curve[c] += other.curve[c];
  for (std::size_t i = 0; i < heights.size(); ++i) heights[i] += other.heights[i];
  z_min += other.z_min;
  z_max += other.z_max;
  score += other.score;
  return *this;
}

LaneGradient& LaneGradient::operator*=(double s) {
  for (auto& c : curve) c *= s;
  for (auto& h : heights) h *= s;
  z_min *= s;
  z_max *= s;
  score *= s;
  return *this;
}

std::vector<double> LaneGradient::flatten() const {
  std::vector<double> out(curve.begin(), curve.end());
  out.insert(out.end(), heights.begin(), heights.end());
  out.push_back(z_min);
  out.push_back(z_max);
  out.push_back(score);
  return out;
}

double LaneGradient::norm() const {
  double sum = 0.0;
  for (double x : flatten()) sum += x * x;
  return std::sqrt(sum);
}

double lane_iou(std::span<const double> xs_pred, std::span<const double> xs_gt, double e) {
  if (xs_pred.size() != xs_gt.size()) throw LengthMismatch("lane_iou: sample lists differ in length");
  if (xs_pred.empty()) throw LengthMismatch("lane_iou: no samples");
  double sum = 0.0;
  for (std::size_t i = 0; i < xs_pred.size(); ++i) sum += sample_iou(xs_pred[i], xs_gt[i], e);
  return sum / static_cast<double>(xs_pred.size());
}

LaneTarget3D make_target_3d(const std::vector<Point3D>& points, int keypoints, int sample_count) {
  if (points.size() < 2) throw DegenerateInput("3D label needs at least two points");
  for (std::size_t i = 1; i < points.size(); ++i)
    if (!(points[i].z > points[i - 1].z)) throw DegenerateInput("3D label must be ordered by increasing z");
  LaneTarget3D t;
  t.z_min = points.front().z;
  t.z_max = points.back().z;
  t.z_grid = uniform_depths(t.z_min, t.z_max, sample_count);
  t.xs.reserve(t.z_grid.size());
  for (double z : t.z_grid) t.xs.push_back(interpolate_along_z(points, z).x);
  const auto key_z = uniform_depths(t.z_min, t.z_max, keypoints);
  t.heights.reserve(key_z.size());
  for (double z : key_z) t.heights.push_back(interpolate_along_z(points, z).y);
  return t;
}

LossTerm bev_iou_loss(const DecoupledLane3D& pred, std::span<const double> z_grid,
                      std::span<const double> gt_xs, double e) {
  if (z_grid.size() != gt_xs.size()) throw LengthMismatch("bev_iou_loss: grid and label lengths differ");
  if (z_grid.empty()) throw LengthMismatch("bev_iou_loss: empty grid");
  LossTerm out{0.0, LaneGradient::zeros(pred.profile.size())};
  const double inv_n = 1.0 / static_cast<double>(z_grid.size());
  double iou = 0.0;
  for (std::size_t i = 0; i < z_grid.size(); ++i) {
    const double z = z_grid[i];
    const double xp = eval_bev_curve(pred.curve, z);
    iou += sample_iou(xp, gt_xs[i], e);
    const double slope = iou_loss_slope(xp - gt_xs[i], e) * inv_n;
    out.grad.curve[0] += slope * z * z * z;
    out.grad.curve[1] += slope * z * z;
    out.grad.curve[2] += slope * z;
    out.grad.curve[3] += slope;
  }
  out.value = 1.0 - iou * inv_n;
  return out;
}

LossTerm height_loss(const HeightProfile& pred, std::span<const double> gt_heights) {
  if (pred.size() != gt_heights.size()) throw LengthMismatch("height_loss: keypoint counts differ");
  if (gt_heights.empty()) throw LengthMismatch("height_loss: no keypoints");
  LossTerm out{0.0, LaneGradient::zeros(pred.size())};
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.heights[i] - gt_heights[i];
    out.value += std::abs(d);
    out.grad.heights[i] = sign(d) * inv_n;
  }
  out.value *= inv_n;
  return out;
}

LossTerm endpoint_z_loss(const HeightProfile& pred, double gt_z_min, double gt_z_max) {
  LossTerm out{0.0, LaneGradient::zeros(pred.size())};
  out.value = std::abs(pred.z_min - gt_z_min) + std::abs(pred.z_max - gt_z_max);
  out.grad.z_min = sign(pred.z_min - gt_z_min);
  out.grad.z_max = sign(pred.z_max - gt_z_max);
  return out;
}

PerspectiveLoss perspective_losses(const DecoupledLane3D& pred, const CameraIntrinsics& k,
                                   const ResampledLane2D& gt, const IoUConfig& cfg) {
  cfg.validate();
  const auto samples = project_with_jacobian(pred, k, cfg.sample_count);
  const std::size_t n = samples.size();
  PerspectiveLoss out;
  out.grad_per = LaneGradient::zeros(pred.profile.size());
  out.grad_v = LaneGradient::zeros(pred.profile.size());

  Lane2D polyline;
  polyline.points.reserve(n);
  for (const auto& s : samples) polyline.points.push_back({s.u, s.v});

  struct RowTerm {
    RowHit hit;
    double delta;
  };
  std::vector<RowTerm> terms;
  terms.reserve(gt.rows());
  const auto hits = row_hits(polyline, gt.rows(), gt.row_step, static_cast<double>(gt.image_height - 1));
  for (std::size_t r = 0; r < gt.rows(); ++r)
    if (gt.present[r] && hits[r]) terms.push_back({*hits[r], hits[r]->u - gt.u[r]});
  out.common_rows = terms.size();

  std::vector<double> dl_du(n, 0.0), dl_dv(n, 0.0);

  // Start/end rows are clamped to the image like the label's.
  const double bottom = static_cast<double>(gt.image_height - 1);
  const double v0 = samples.front().v;
  const double v1 = samples.back().v;
  const double vs = std::clamp(v0, 0.0, bottom);
  const double ve = std::clamp(v1, 0.0, bottom);
  out.l_v = std::abs(vs - gt.v_start) + std::abs(ve - gt.v_end);
  {
    std::vector<double> zeros(n, 0.0), dv(n, 0.0);
    if (v0 > 0.0 && v0 < bottom) dv.front() += sign(vs - gt.v_start);
    if (v1 > 0.0 && v1 < bottom) dv.back() += sign(ve - gt.v_end);
    chain_samples(samples, zeros, dv, out.grad_v);
  }

  if (terms.empty()) {
    out.overlap = false;
    out.l_per = std::numeric_limits<double>::infinity();
    out.grad_per = LaneGradient::zeros(pred.profile.size());
    out.grad_v = LaneGradient::zeros(pred.profile.size());
    return out;
  }
  out.overlap = true;

  const double inv_rows = 1.0 / static_cast<double>(terms.size());
  double iou = 0.0;
  for (const auto& [hit, delta] : terms) {
    const double e = cfg.e;
    iou += (2.0 * e - std::abs(delta)) / (2.0 * e + std::abs(delta));
    const double slope = iou_loss_slope(delta, e) * inv_rows;
    if (slope == 0.0) continue;
    const std::size_t j = hit.segment;
    const double t = hit.t;
    dl_du[j] += slope * (1.0 - t);
    dl_du[j + 1] += slope * t;
    const double dv = samples[j + 1].v - samples[j].v;
    if (dv != 0.0) {
      const double du = samples[j + 1].u - samples[j].u;
      dl_dv[j] += slope * du * (t - 1.0) / dv;
      dl_dv[j + 1] += slope * du * (-t) / dv;
    }
  }
  out.l_per = 1.0 - iou * inv_rows;
  chain_samples(samples, dl_du, dl_dv, out.grad_per);
  return out;
}

ClassificationLoss classification_loss(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw LengthMismatch("classification_loss: lengths differ");
  ClassificationLoss out;
  out.grad.assign(scores.size(), 0.0);
  if (scores.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double raw = scores[i];
    const double s = std::clamp(raw, kScoreEpsilon, 1.0 - kScoreEpsilon);
    const double y = labels[i];
    out.value -= y * std::log(s) + (1.0 - y) * std::log(1.0 - s);
    if (raw >= kScoreEpsilon && raw <= 1.0 - kScoreEpsilon)
      out.grad[i] = (-y / s + (1.0 - y) / (1.0 - s)) * inv_n;
  }
  out.value *= inv_n;
  return out;
}

LossTerm height_variance_reg(const HeightProfile& profile) {
  const auto& h = profile.heights;
  if (h.size() < 2) throw InvalidArgument("height_variance_reg needs at least two keypoints");
  LossTerm out{0.0, LaneGradient::zeros(h.size())};
  const double n = static_cast<double>(h.size());
  double mean = 0.0;
  for (double x : h) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : h) var += (x - mean) * (x - mean);
  var /= n;
  out.value = std::sqrt(var);
  if (out.value > 0.0)
    for (std::size_t i = 0; i < h.size(); ++i) out.grad.heights[i] = (h[i] - mean) / (n * out.value);
  return out;
}

double PairLoss::objective(const LossWeights& w, bool has_3d) const {
  if (has_3d) return w.alpha * (l_bev + l_h + l_z) + w.beta * (l_per + l_v);
  return w.beta * (l_per + l_v) + l_reg;
}

LaneGradient PairLoss::objective_gradient(const LossWeights& w, bool has_3d) const {
  auto scaled = [](LaneGradient g, double s) { return g *= s; };
  LaneGradient g = scaled(grad_per, w.beta);
  g += scaled(grad_v, w.beta);
  if (has_3d) {
    g += scaled(grad_bev, w.alpha);
    g += scaled(grad_h, w.alpha);
    g += scaled(grad_z, w.alpha);
  } else {
    g += grad_reg;
  }
  return g;
}

PairLoss pair_loss(const DecoupledLane3D& pred, const CameraIntrinsics& k, const ResampledLane2D& gt2d,
                   const LaneTarget3D* target, const LossConfig& cfg) {
  PairLoss out;
  const std::size_t n = pred.profile.size();
  const auto per = perspective_losses(pred, k, gt2d, cfg.perspective);
  out.overlap = per.overlap;
  out.l_per = per.l_per;
  out.l_v = per.l_v;
  out.grad_per = per.grad_per;
  out.grad_v = per.grad_v;

  auto reg = height_variance_reg(pred.profile);
  out.l_reg = reg.value;
  out.grad_reg = std::move(reg.grad);

  out.grad_bev = LaneGradient::zeros(n);
  out.grad_h = LaneGradient::zeros(n);
  out.grad_z = LaneGradient::zeros(n);
  if (target != nullptr) {
    auto bev = bev_iou_loss(pred, target->z_grid, target->xs, cfg.bev.e);
    auto h = height_loss(pred.profile, target->heights);
    auto z = endpoint_z_loss(pred.profile, target->z_min, target->z_max);
    out.l_bev = bev.value;
    out.l_h = h.value;
    out.l_z = z.value;
    out.grad_bev = std::move(bev.grad);
    out.grad_h = std::move(h.grad);
    out.grad_z = std::move(z.grad);
  }
  return out;
}

LossBreakdown total_loss(const std::vector<DecoupledLane3D>& preds, const std::vector<Lane2D>& gt2d,
                         const std::vector<std::vector<Point3D>>* gt3d, const CameraIntrinsics& k,
                         const ImageSpec& image, const LossConfig& cfg, const LossWeights& weights) {
  weights.validate();
  if (gt3d != nullptr && gt3d->size() != gt2d.size())
    throw LengthMismatch("3D labels must be parallel to 2D labels");

  LossBreakdown out;
  out.has_3d = gt3d != nullptr;
  out.gradients.reserve(preds.size());
  for (const auto& p : preds) out.gradients.push_back(LaneGradient::zeros(p.profile.size()));

  std::vector<ResampledLane2D> pred_rs, gt_rs;
  std::vector<int> pred_index;  // resampled index -> prediction index
  for (std::size_t i = 0; i < preds.size(); ++i) {
    try {
      pred_rs.push_back(resample_lane(project_lane(k, preds[i], cfg.perspective.sample_count), image, cfg.row_step));
      pred_index.push_back(static_cast<int>(i));
    } catch (const DegenerateLane&) {
      // Entirely off-image predictions cannot be matched.
    }
  }
  for (const auto& g : gt2d) gt_rs.push_back(resample_lane(g, image, cfg.row_step));

  const auto raw = hungarian_assign(matching_cost_matrix(pred_rs, gt_rs), cfg.match_threshold);

  std::vector<double> labels(preds.size(), 0.0);
  std::vector<std::pair<MatchPair, PairLoss>> active;
  for (const auto& m : raw.pairs) {
    const int pi = pred_index[static_cast<std::size_t>(m.prediction)];
    const auto gi = static_cast<std::size_t>(m.ground_truth);
    std::optional<LaneTarget3D> target;
    if (gt3d != nullptr)
      target = make_target_3d((*gt3d)[gi], static_cast<int>(preds[static_cast<std::size_t>(pi)].profile.size()),
                              cfg.bev.sample_count);
    auto pl = pair_loss(preds[static_cast<std::size_t>(pi)], k, gt_rs[gi], target ? &*target : nullptr, cfg);
    if (!pl.overlap) continue;
    labels[static_cast<std::size_t>(pi)] = 1.0;
    active.emplace_back(MatchPair{pi, m.ground_truth, m.cost}, std::move(pl));
  }

  std::vector<char> gt_matched(gt2d.size(), 0);
  for (const auto& [m, pl] : active) {
    out.matches.pairs.push_back(m);
    gt_matched[static_cast<std::size_t>(m.ground_truth)] = 1;
  }
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (labels[i] == 0.0) out.matches.unmatched_predictions.push_back(static_cast<int>(i));
  for (std::size_t j = 0; j < gt2d.size(); ++j)
    if (!gt_matched[j]) out.matches.unmatched_ground_truths.push_back(static_cast<int>(j));

  std::vector<double> scores;
  scores.reserve(preds.size());
  for (const auto& p : preds) scores.push_back(p.score);
  const auto cls = classification_loss(scores, labels);
  out.l_cls = cls.value;
  for (std::size_t i = 0; i < preds.size(); ++i) out.gradients[i].score = cls.grad[i];

  if (!active.empty()) {
    const double inv_m = 1.0 / static_cast<double>(active.size());
    for (const auto& [m, pl] : active) {
      out.l_bev += pl.l_bev * inv_m;
      out.l_h += pl.l_h * inv_m;
      out.l_z += pl.l_z * inv_m;
      out.l_per += pl.l_per * inv_m;
      out.l_v += pl.l_v * inv_m;
      out.l_reg += pl.l_reg * inv_m;
      auto g = pl.objective_gradient(weights, out.has_3d);
      g *= inv_m;
      out.gradients[static_cast<std::size_t>(m.prediction)] += g;
    }
  }

  if (out.has_3d)
    out.total = out.l_cls + weights.alpha * (out.l_bev + out.l_h + out.l_z) + weights.beta * (out.l_per + out.l_v);
  else
    out.total = out.l_cls + weights.beta * (out.l_per + out.l_v) + out.l_reg;
  return out;
}

}  // namespace dlane
