#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dlane/camera.hpp"
#include "dlane/geometry.hpp"
#include "dlane/losses.hpp"

namespace dlane {

/// How the BEV curve is parameterised while fitting.
enum class CurveMode { Quadratic, Cubic, Quartic, Bezier };

/// Polynomial order used by least squares for a mode (Bezier fits a cubic).
int curve_order(CurveMode mode) noexcept;

struct FitConfig {
  int max_iters = 3000;
  double step_size = 1e-2;
  double momentum = 0.9;
  /// Converged when the gradient norm in optimiser coordinates drops to this.
  double convergence_tol = 1e-10;
  std::uint64_t seed = 0;
  CurveMode curve = CurveMode::Cubic;
  int keypoints = kDefaultKeypoints;
  LossWeights weights;
  /// Lower bound for z_min after every step.
  double z_floor = 0.1;
  /// Flat-ground camera height used to back-project 2D labels.
  double assumed_camera_height = 1.5;
  /// Iterations without improvement before the step is halved (momentum is
  /// dropped, the iterate is kept).
  int patience = 50;
  double min_step = 1e-7;

  void validate() const;
};

struct FitReport {
  DecoupledLane3D lane;
  LossBreakdown final_loss;
  double objective = 0.0;
  double initial_objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Least-squares polynomial y(x), coefficients in ascending powers of the raw
/// abscissa.
struct PolynomialFit {
  int order = 0;
  std::vector<double> coefficients;
  double rss = 0.0;
  double max_abs_residual = 0.0;

  double operator()(double x) const noexcept;
  /// Throws InvalidArgument for a quartic with a nonzero leading coefficient.
  BevCurve to_bev_curve() const;
};

/// Solved by Householder QR on a centred and scaled Vandermonde matrix.
/// Throws RankDeficient when fewer than order + 1 distinct abscissae exist.
PolynomialFit fit_polynomial(std::span<const double> xs, std::span<const double> ys, int order);

/// x(z) least squares over the points' (z, x); order in {1, 2, 3, 4}.
PolynomialFit fit_bev_least_squares(const std::vector<Point3D>& points, int order);

/// Keypoint heights interpolated from points ordered by z. Throws
/// DegenerateInput with fewer than two points.
HeightProfile fit_heights_direct(const std::vector<Point3D>& points, int n, double z_min, double z_max);

/// u(v) least squares directly in the image.
PolynomialFit fit_perspective_baseline(const Lane2D& gt2d, int order = 3);

/// Flat-ground back-projection of a 2D label followed by least squares.
DecoupledLane3D init_from_ground_plane(const Lane2D& gt2d, const CameraIntrinsics& k, const FitConfig& cfg);

/// Minimises beta L2D + sigma_h against a 2D label starting from `init`.
/// Throws NoOverlap when `init` shares no row with the label and NonFinite
/// when the objective diverges.
FitReport fit_2d_projective(const Lane2D& gt2d, const CameraIntrinsics& k, const ImageSpec& image,
                            const DecoupledLane3D& init, const FitConfig& cfg, const LossConfig& loss);

/// Least-squares initialisation from the 3D label, then refinement of
/// alpha L3D + beta L2D.
FitReport fit_3d(const Lane2D& gt2d, const std::vector<Point3D>& gt3d, const CameraIntrinsics& k,
                 const ImageSpec& image, const FitConfig& cfg, const LossConfig& loss);

}  // namespace dlane
