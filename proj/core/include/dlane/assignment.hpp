#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "dlane/camera.hpp"

namespace dlane {

inline constexpr double kUnmatchable = std::numeric_limits<double>::infinity();
inline constexpr double kDefaultMatchThreshold = 30.0;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Where a horizontal image row crosses a polyline: segment index and the
/// fraction along it, u = (1 - t) u[seg] + t u[seg + 1].
struct RowHit {
  std::size_t segment = 0;
  double t = 0.0;
  double u = 0.0;
};

/// First crossing (in near-to-far order) of row v with the polyline.
std::optional<RowHit> intersect_row(const Lane2D& lane, double v);

/// First crossing of every grid row v = r * row_step (r < rows) with the
/// polyline, in one pass over its segments. Rows outside [0, max_v] are skipped.
std::vector<std::optional<RowHit>> row_hits(const Lane2D& lane, std::size_t rows, double row_step, double max_v);

/// A lane sampled on the row grid v = 0, step, 2 step, ... <= height - 1.
struct ResampledLane2D {
  double row_step = 1.0;
  int image_height = 0;
  std::vector<double> u;
  std::vector<std::uint8_t> present;
  /// First and last polyline points' v, clamped to [0, height - 1].
  double v_start = 0.0;
  double v_end = 0.0;

  std::size_t rows() const noexcept { return u.size(); }
  double row_v(std::size_t i) const noexcept { return static_cast<double>(i) * row_step; }
  std::size_t present_count() const noexcept;
  bool same_grid(const ResampledLane2D& other) const noexcept;
};

/// Throws DegenerateLane when the lane covers no grid row.
ResampledLane2D resample_lane(const Lane2D& lane, const ImageSpec& image, double row_step = 1.0);

/// Mean |u_p - u_g| over rows both lanes cover plus the start/end row
/// differences. kUnmatchable when no row is shared.
double matching_cost(const ResampledLane2D& p, const ResampledLane2D& g);

struct Assignment {
  /// row_to_col[r] = assigned column, or -1 when r is left over (rows > cols).
  std::vector<int> row_to_col;
  double total = 0.0;
};

/// Minimum-cost injection of the smaller side into the larger one.
/// Infinite entries are allowed; they are only used if unavoidable.
Assignment solve_assignment(const Matrix& costs);

struct MatchPair {
  int prediction = 0;
  int ground_truth = 0;
  double cost = 0.0;

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<int> unmatched_predictions;
  std::vector<int> unmatched_ground_truths;
};

/// Optimal assignment of predictions (rows) to ground truths (columns);
/// pairs whose cost is not below `match_threshold` are reported unmatched.
MatchResult hungarian_assign(const Matrix& costs, double match_threshold = kDefaultMatchThreshold);

/// Resamples both sets and builds the prediction x ground-truth cost matrix.
Matrix matching_cost_matrix(const std::vector<ResampledLane2D>& predictions,
                            const std::vector<ResampledLane2D>& ground_truths);

}  // namespace dlane
