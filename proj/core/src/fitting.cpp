#include "dlane/fitting.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "dlane/assignment.hpp"
#include "dlane/errors.hpp"

namespace dlane {
namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Coefficients of p((z - center) / scale) in ascending powers of z, given p's
// coefficients in ascending powers of its argument.
std::vector<double> expand_affine(const std::vector<double>& in_t, double center, double scale) {
  const int deg = static_cast<int>(in_t.size()) - 1;
  std::vector<double> out(in_t.size(), 0.0);
  for (int k = 0; k <= deg; ++k) {
    const double qk = in_t[static_cast<std::size_t>(k)] / std::pow(scale, k);
    for (int j = 0; j <= k; ++j)
      out[static_cast<std::size_t>(j)] += qk * binomial(k, j) * std::pow(-center, k - j);
  }
  return out;
}

// Maps optimiser coordinates of the curve to (a, b, c, d). Columns hold the
// (a, b, c, d) image of each unit coordinate.
struct CurveParameterisation {
  Eigen::Matrix4d to_abcd = Eigen::Matrix4d::Identity();
  std::array<bool, 4> free{true, true, true, true};

  Eigen::Vector4d coordinates(const BevCurve& c) const {
    return to_abcd.fullPivLu().solve(Eigen::Vector4d(c.a, c.b, c.c, c.d));
  }
  BevCurve curve(const Eigen::Vector4d& w) const {
    const Eigen::Vector4d abcd = to_abcd * w;
    return {abcd[0], abcd[1], abcd[2], abcd[3]};
  }
  Eigen::Vector4d pull_back(const std::array<double, 4>& g_abcd) const {
    Eigen::Vector4d g = to_abcd.transpose() * Eigen::Vector4d(g_abcd[0], g_abcd[1], g_abcd[2], g_abcd[3]);
    for (int i = 0; i < 4; ++i)
      if (!free[static_cast<std::size_t>(i)]) g[i] = 0.0;
    return g;
  }
};

CurveParameterisation make_parameterisation(CurveMode mode, double z_min, double z_max) {
  CurveParameterisation p;
  if (mode == CurveMode::Quartic)
    throw InvalidArgument("quartic curves are only available through least squares; lanes store cubics");
  if (mode == CurveMode::Bezier) {
    // Control points of a cubic Bezier over t = (z - z_min) / (z_max - z_min).
    const std::array<std::vector<double>, 4> bernstein_t{
        std::vector<double>{1.0, -3.0, 3.0, -1.0}, std::vector<double>{0.0, 3.0, -6.0, 3.0},
        std::vector<double>{0.0, 0.0, 3.0, -3.0}, std::vector<double>{0.0, 0.0, 0.0, 1.0}};
    for (int k = 0; k < 4; ++k) {
      const auto in_z = expand_affine(bernstein_t[static_cast<std::size_t>(k)], z_min, z_max - z_min);
      p.to_abcd.col(k) = Eigen::Vector4d(in_z[3], in_z[2], in_z[1], in_z[0]);
    }
    return p;
  }
  // Monomials of z / scale so that every coordinate is a lateral offset in meters.
  const double scale = std::max(std::abs(z_max), 1.0);
  p.to_abcd = Eigen::Vector4d(1.0 / (scale * scale * scale), 1.0 / (scale * scale), 1.0 / scale, 1.0).asDiagonal();
  if (mode == CurveMode::Quadratic) p.free[0] = false;
  return p;
}

struct Evaluation {
  PairLoss terms;
  double objective = 0.0;
  Eigen::VectorXd grad;
};

class LaneObjective {
 public:
  LaneObjective(const CameraIntrinsics& k, const ResampledLane2D& gt2d, std::optional<LaneTarget3D> target,
                const LossConfig& loss, const LossWeights& weights, CurveParameterisation param,
                std::size_t keypoints)
      : k_(k), gt2d_(gt2d), target_(std::move(target)), loss_(loss), weights_(weights),
        param_(std::move(param)), keypoints_(keypoints) {}

  std::size_t dimension() const noexcept { return 4 + keypoints_ + 2; }

  Eigen::VectorXd encode(const DecoupledLane3D& lane) const {
    Eigen::VectorXd w(dimension());
    w.head<4>() = param_.coordinates(lane.curve);
    for (std::size_t i = 0; i < keypoints_; ++i) w[static_cast<Eigen::Index>(4 + i)] = lane.profile.heights[i];
    w[static_cast<Eigen::Index>(4 + keypoints_)] = lane.profile.z_min;
    w[static_cast<Eigen::Index>(5 + keypoints_)] = lane.profile.z_max;
    return w.cwiseQuotient(scale_);
  }

  DecoupledLane3D decode(const Eigen::VectorXd& scaled, double score) const {
    const Eigen::VectorXd w = scaled.cwiseProduct(scale_);
    DecoupledLane3D lane;
    lane.curve = param_.curve(w.head<4>());
    lane.profile.heights.resize(keypoints_);
    for (std::size_t i = 0; i < keypoints_; ++i) lane.profile.heights[i] = w[static_cast<Eigen::Index>(4 + i)];
    lane.profile.z_min = w[static_cast<Eigen::Index>(4 + keypoints_)];
    lane.profile.z_max = w[static_cast<Eigen::Index>(5 + keypoints_)];
    lane.score = score;
    return lane;
  }

  // Endpoint coordinates get units of roughly one pixel of endpoint motion:
  // the start/end row loss is steep in meters and would otherwise swamp
  // every step. Fixed at the initial lane.
  void set_endpoint_scale(const DecoupledLane3D& lane) {
    scale_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dimension()));
    const auto& p = lane.profile;
    const double h0 = std::max(std::abs(p.heights.front()), 0.1);
    const double h1 = std::max(std::abs(p.heights.back()), 0.1);
    scale_[4] = p.z_min / k_.fy;
    scale_[static_cast<Eigen::Index>(3 + keypoints_)] = p.z_max / k_.fy;
    scale_[static_cast<Eigen::Index>(4 + keypoints_)] = p.z_min * p.z_min / (k_.fy * h0);
    scale_[static_cast<Eigen::Index>(5 + keypoints_)] = p.z_max * p.z_max / (k_.fy * h1);
  }

  Evaluation evaluate(const DecoupledLane3D& lane) const {
    Evaluation ev;
    ev.terms = pair_loss(lane, k_, gt2d_, target_ ? &*target_ : nullptr, loss_);
    const bool has_3d = target_.has_value();
    ev.objective = ev.terms.objective(weights_, has_3d);
    const auto g = ev.terms.objective_gradient(weights_, has_3d);
    ev.grad.resize(static_cast<Eigen::Index>(dimension()));
    ev.grad.head<4>() = param_.pull_back(g.curve);
    for (std::size_t i = 0; i < keypoints_; ++i) ev.grad[static_cast<Eigen::Index>(4 + i)] = g.heights[i];
    ev.grad[static_cast<Eigen::Index>(4 + keypoints_)] = g.z_min;
    ev.grad[static_cast<Eigen::Index>(5 + keypoints_)] = g.z_max;
    ev.grad = ev.grad.cwiseProduct(scale_);
    return ev;
  }

  void project_constraints(Eigen::VectorXd& w, double z_floor) const {
    const auto i0 = static_cast<Eigen::Index>(4 + keypoints_);
    const auto i1 = i0 + 1;
    const double z_min = std::max(w[i0] * scale_[i0], z_floor);
    const double z_max = std::max(w[i1] * scale_[i1], z_min + 1e-3);
    w[i0] = z_min / scale_[i0];
    w[i1] = z_max / scale_[i1];
  }

  bool has_3d() const noexcept { return target_.has_value(); }

 private:
  CameraIntrinsics k_;
  ResampledLane2D gt2d_;
  std::optional<LaneTarget3D> target_;
  LossConfig loss_;
  LossWeights weights_;
  CurveParameterisation param_;
  std::size_t keypoints_;
  Eigen::VectorXd scale_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dimension()));
};

LossBreakdown breakdown_for(const PairLoss& terms, const DecoupledLane3D& lane, bool has_3d,
                            const LossWeights& weights) {
  LossBreakdown out;
  out.has_3d = has_3d;
  const double score = lane.score;
  const double label = 1.0;
  const auto cls = classification_loss(std::span<const double>(&score, 1), std::span<const double>(&label, 1));
  out.l_cls = cls.value;
  out.l_bev = terms.l_bev;
  out.l_h = terms.l_h;
  out.l_z = terms.l_z;
  out.l_per = terms.l_per;
  out.l_v = terms.l_v;
  out.l_reg = terms.l_reg;
  out.total = out.l_cls + terms.objective(weights, has_3d);
  auto g = terms.objective_gradient(weights, has_3d);
  g.score = cls.grad[0];
  out.gradients.push_back(std::move(g));
  out.matches.pairs.push_back({0, 0, 0.0});
  return out;
}

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

FitReport run_descent(LaneObjective& objective, const DecoupledLane3D& init, const FitConfig& cfg) {
  objective.set_endpoint_scale(init);
  Eigen::VectorXd w = objective.encode(init);
  objective.project_constraints(w, cfg.z_floor);

  auto first = objective.evaluate(objective.decode(w, init.score));
  if (!first.terms.overlap) throw NoOverlap("initial lane shares no image row with the label");
  if (!std::isfinite(first.objective) || !all_finite(first.grad))
    throw NonFinite("objective is not finite at the initial lane");

  const double initial_objective = first.objective;
  Eigen::VectorXd best_w = w;
  Evaluation best = first;
  Evaluation current = std::move(first);
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(w.size());
  double step = cfg.step_size;
  int stale = 0;
  int iter = 0;
  bool converged = false;

  for (;; ++iter) {
    if (current.grad.norm() <= cfg.convergence_tol && current.objective <= best.objective) {
      best_w = w;
      best = current;
      converged = true;
      break;
    }
    if (iter >= cfg.max_iters) break;

    if (stale >= cfg.patience) {
      step *= 0.5;
      if (step < cfg.min_step) break;
      velocity.setZero();
      stale = 0;
    }

    velocity = cfg.momentum * velocity - step * current.grad;
    w += velocity;
    objective.project_constraints(w, cfg.z_floor);
    if (!all_finite(w)) throw NonFinite("parameters became non-finite at iteration " + std::to_string(iter));

    current = objective.evaluate(objective.decode(w, init.score));
    if (!current.terms.overlap) {
      // Lost the label entirely; back to the best iterate with a smaller step.
      w = best_w;
      current = best;
      velocity.setZero();
      step *= 0.5;
      stale = 0;
      if (step < cfg.min_step) break;
      continue;
    }
    if (!std::isfinite(current.objective) || !all_finite(current.grad))
      throw NonFinite("objective became non-finite at iteration " + std::to_string(iter));
    if (current.objective < best.objective) {
      best = current;
      best_w = w;
      stale = 0;
    } else {
      ++stale;
    }
  }

  FitReport report;
  report.lane = objective.decode(best_w, init.score);
  report.objective = best.objective;
  report.initial_objective = initial_objective;
  report.iterations = iter;
  report.converged = converged;
  report.final_loss = breakdown_for(best.terms, report.lane, objective.has_3d(), cfg.weights);
  return report;
}

}  // namespace

int curve_order(CurveMode mode) noexcept {
  switch (mode) {
    case CurveMode::Quadratic:
      return 2;
    case CurveMode::Quartic:
      return 4;
    case CurveMode::Cubic:
    case CurveMode::Bezier:
      return 3;
  }
  return 3;
}

void FitConfig::validate() const {
  if (max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
  if (!(step_size > 0.0)) throw InvalidArgument("step_size must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must be in [0, 1)");
  if (keypoints < 2) throw InvalidArgument("keypoints must be at least 2");
  if (!(z_floor > 0.0)) throw InvalidArgument("z_floor must be positive");
  if (!(assumed_camera_height > 0.0)) throw InvalidArgument("assumed camera height must be positive");
  if (patience < 1) throw InvalidArgument("patience must be at least 1");
  weights.validate();
}

double PolynomialFit::operator()(double x) const noexcept {
  double acc = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * x + *it;
  return acc;
}

BevCurve PolynomialFit::to_bev_curve() const {
  if (coefficients.size() > 5 || (coefficients.size() == 5 && coefficients[4] != 0.0))
    throw InvalidArgument("a BEV curve holds at most a cubic");
  std::array<double, 4> c{};
  for (std::size_t i = 0; i < std::min<std::size_t>(coefficients.size(), 4); ++i) c[i] = coefficients[i];
  return {c[3], c[2], c[1], c[0]};
}

PolynomialFit fit_polynomial(std::span<const double> xs, std::span<const double> ys, int order) {
  if (xs.size() != ys.size()) throw LengthMismatch("fit_polynomial: abscissa and ordinate lengths differ");
  if (order < 0) throw InvalidArgument("polynomial order must be non-negative");
  std::vector<double> distinct(xs.begin(), xs.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < static_cast<std::size_t>(order + 1))
    throw RankDeficient("need " + std::to_string(order + 1) + " distinct abscissae, got " +
                        std::to_string(distinct.size()));

  const double center = 0.5 * (distinct.front() + distinct.back());
  const double half = 0.5 * (distinct.back() - distinct.front());
  const double scale = half > 0.0 ? half : 1.0;

  const auto m = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd vander(m, order + 1);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double t = (xs[static_cast<std::size_t>(i)] - center) / scale;
    double p = 1.0;
    for (int j = 0; j <= order; ++j) {
      vander(i, j) = p;
      p *= t;
    }
    rhs[i] = ys[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd q = vander.householderQr().solve(rhs);

  PolynomialFit fit;
  fit.order = order;
  fit.coefficients = expand_affine(std::vector<double>(q.data(), q.data() + q.size()), center, scale);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - fit(xs[i]);
    fit.rss += r * r;
    fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(r));
  }
  return fit;
}

PolynomialFit fit_bev_least_squares(const std::vector<Point3D>& points, int order) {
  if (order < 1 || order > 4) throw InvalidArgument("BEV polynomial order must be in [1, 4]");
  std::vector<double> zs, xs;
  zs.reserve(points.size());
  xs.reserve(points.size());
  for (const auto& p : points) {
    zs.push_back(p.z);
    xs.push_back(p.x);
  }
  return fit_polynomial(zs, xs, order);
}

HeightProfile fit_heights_direct(const std::vector<Point3D>& points, int n, double z_min, double z_max) {
  if (points.size() < 2) throw DegenerateInput("need at least two points to interpolate heights");
  if (n < 2) throw InvalidArgument("need at least two keypoints");
  if (!(z_min < z_max)) throw InvalidArgument("z_min must be below z_max");
  HeightProfile profile;
  profile.z_min = z_min;
  profile.z_max = z_max;
  profile.heights.reserve(static_cast<std::size_t>(n));
  for (double z : uniform_depths(z_min, z_max, n)) profile.heights.push_back(interpolate_along_z(points, z).y);
  return profile;
}

PolynomialFit fit_perspective_baseline(const Lane2D& gt2d, int order) {
  std::vector<double> vs, us;
  vs.reserve(gt2d.points.size());
  us.reserve(gt2d.points.size());
  for (const auto& p : gt2d.points) {
    vs.push_back(p.v);
    us.push_back(p.u);
  }
  return fit_polynomial(vs, us, order);
}

DecoupledLane3D init_from_ground_plane(const Lane2D& gt2d, const CameraIntrinsics& k, const FitConfig& cfg) {
  std::vector<Point3D> ground;
  ground.reserve(gt2d.points.size());
  for (const auto& p : gt2d.points)
    if (p.v > k.oy) ground.push_back(invert_to_ground(k, p.u, p.v, cfg.assumed_camera_height));
  const int order = curve_order(cfg.curve);
  if (ground.size() < static_cast<std::size_t>(order + 1))
    throw DegenerateInput("too few label points below the horizon to initialise a lane");

  const auto fit = fit_bev_least_squares(ground, std::min(order, 3));
  double z_lo = std::numeric_limits<double>::infinity();
  double z_hi = -z_lo;
  for (const auto& p : ground) {
    z_lo = std::min(z_lo, p.z);
    z_hi = std::max(z_hi, p.z);
  }
  DecoupledLane3D lane;
  lane.curve = fit.to_bev_curve();
  lane.profile = flat_profile(cfg.assumed_camera_height, std::max(z_lo, cfg.z_floor), z_hi, cfg.keypoints);
  lane.score = 1.0;
  return lane;
}

FitReport fit_2d_projective(const Lane2D& gt2d, const CameraIntrinsics& k, const ImageSpec& image,
                            const DecoupledLane3D& init, const FitConfig& cfg, const LossConfig& loss) {
  cfg.validate();
  init.validate();
  const auto gt = resample_lane(gt2d, image, loss.row_step);
  LaneObjective objective(k, gt, std::nullopt, loss, cfg.weights,
                          make_parameterisation(cfg.curve, init.profile.z_min, init.profile.z_max),
                          init.profile.size());
  return run_descent(objective, init, cfg);
}

FitReport fit_3d(const Lane2D& gt2d, const std::vector<Point3D>& gt3d, const CameraIntrinsics& k,
                 const ImageSpec& image, const FitConfig& cfg, const LossConfig& loss) {
  cfg.validate();
  auto target = make_target_3d(gt3d, cfg.keypoints, loss.bev.sample_count);

  DecoupledLane3D init;
  init.curve = fit_bev_least_squares(gt3d, std::min(curve_order(cfg.curve), 3)).to_bev_curve();
  init.profile = fit_heights_direct(gt3d, cfg.keypoints, target.z_min, target.z_max);
  init.score = 1.0;
  init.validate();

  const auto gt = resample_lane(gt2d, image, loss.row_step);
  LaneObjective objective(k, gt, std::move(target), loss, cfg.weights,
                          make_parameterisation(cfg.curve, init.profile.z_min, init.profile.z_max),
                          init.profile.size());
  return run_descent(objective, init, cfg);
}

}  // namespace dlane
