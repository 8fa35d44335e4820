#include "dlane/assignment.hpp"

#include <algorithm>
#include <cmath>

#include "dlane/errors.hpp"

namespace dlane {

std::optional<RowHit> intersect_row(const Lane2D& lane, double v) {
  const auto& pts = lane.points;
  for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
    const double v0 = pts[j].v;
    const double v1 = pts[j + 1].v;
    if (v < std::min(v0, v1) || v > std::max(v0, v1)) continue;
    const double t = v1 == v0 ? 0.0 : (v - v0) / (v1 - v0);
    return RowHit{j, t, (1.0 - t) * pts[j].u + t * pts[j + 1].u};
  }
  return std::nullopt;
}

std::vector<std::optional<RowHit>> row_hits(const Lane2D& lane, std::size_t rows, double row_step,
                                            double max_v) {
  std::vector<std::optional<RowHit>> hits(rows);
  const auto& pts = lane.points;
  std::size_t filled = 0;
  // Segments are walked near to far; the first one to reach a row wins.
  for (std::size_t j = 0; j + 1 < pts.size() && filled < rows; ++j) {
    const double v0 = pts[j].v;
    const double v1 = pts[j + 1].v;
    const double lo = std::max(std::min(v0, v1), 0.0);
    const double hi = std::min(std::max(v0, v1), max_v);
    if (lo > hi) continue;
    for (auto r = static_cast<std::size_t>(std::ceil(lo / row_step)); r < rows; ++r) {
      const double v = static_cast<double>(r) * row_step;
      if (v > hi) break;
      if (hits[r]) continue;
      const double t = v1 == v0 ? 0.0 : (v - v0) / (v1 - v0);
      hits[r] = RowHit{j, t, (1.0 - t) * pts[j].u + t * pts[j + 1].u};
      ++filled;
    }
  }
  return hits;
}

std::size_t ResampledLane2D::present_count() const noexcept {
  return static_cast<std::size_t>(std::count(present.begin(), present.end(), std::uint8_t{1}));
}

bool ResampledLane2D::same_grid(const ResampledLane2D& other) const noexcept {
  return row_step == other.row_step && image_height == other.image_height && u.size() == other.u.size();
}

ResampledLane2D resample_lane(const Lane2D& lane, const ImageSpec& image, double row_step) {
  image.validate();
  if (!(row_step > 0.0)) throw InvalidArgument("row_step must be positive");
  if (lane.points.size() < 2) throw DegenerateLane("lane needs at least two points");

  ResampledLane2D out;
  out.row_step = row_step;
  out.image_height = image.height;
  const auto rows = static_cast<std::size_t>(std::floor((image.height - 1) / row_step)) + 1;
  out.u.assign(rows, 0.0);
  out.present.assign(rows, 0);

  const auto hits = row_hits(lane, rows, row_step, static_cast<double>(image.height - 1));
  std::size_t filled = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!hits[r]) continue;
    out.u[r] = hits[r]->u;
    out.present[r] = 1;
    ++filled;
  }
  if (filled == 0) throw DegenerateLane("lane covers no grid row");

  const auto& pts = lane.points;
  const double bottom = static_cast<double>(image.height - 1);
  out.v_start = std::clamp(pts.front().v, 0.0, bottom);
  out.v_end = std::clamp(pts.back().v, 0.0, bottom);
  return out;
}

double matching_cost(const ResampledLane2D& p, const ResampledLane2D& g) {
  if (!p.same_grid(g)) throw GridMismatch("lanes were resampled on different row grids");
  double sum = 0.0;
  std::size_t common = 0;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    if (!p.present[r] || !g.present[r]) continue;
    sum += std::abs(p.u[r] - g.u[r]);
    ++common;
  }
  if (common == 0) return kUnmatchable;
  return sum / static_cast<double>(common) + std::abs(p.v_start - g.v_start) + std::abs(p.v_end - g.v_end);
}

Matrix matching_cost_matrix(const std::vector<ResampledLane2D>& predictions,
                            const std::vector<ResampledLane2D>& ground_truths) {
  Matrix costs(predictions.size(), ground_truths.size());
  for (std::size_t i = 0; i < predictions.size(); ++i)
    for (std::size_t j = 0; j < ground_truths.size(); ++j)
      costs(i, j) = matching_cost(predictions[i], ground_truths[j]);
  return costs;
}

Assignment solve_assignment(const Matrix& costs) {
  const std::size_t rows = costs.rows();
  const std::size_t cols = costs.cols();
  Assignment result;
  result.row_to_col.assign(rows, -1);
  if (rows == 0 || cols == 0) return result;

  const std::size_t n = std::max(rows, cols);
  double finite_max = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = costs(r, c);
      if (std::isnan(x) || x < 0.0) throw InvalidArgument("assignment costs must be non-negative");
      if (std::isfinite(x)) finite_max = std::max(finite_max, x);
    }
  // Any assignment that uses an infinite entry must lose to every finite one.
  const double big = (finite_max + 1.0) * static_cast<double>(n + 1);
  auto cost = [&](std::size_t r, std::size_t c) {
    if (r >= rows || c >= cols) return 0.0;
    const double x = costs(r, c);
    return std::isfinite(x) ? x : big;
  };

  // Shortest augmenting path with row/column potentials, 1-based indexing.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> row_pot(n + 1, 0.0), col_pot(n + 1, 0.0);
  std::vector<std::size_t> col_owner(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    col_owner[0] = i;
    std::size_t j0 = 0;
    std::vector<double> min_slack(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = col_owner[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - row_pot[i0] - col_pot[j];
        if (cur < min_slack[j]) {
          min_slack[j] = cur;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          row_pot[col_owner[j]] += delta;
          col_pot[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (col_owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      col_owner[j0] = col_owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t r = col_owner[j] - 1;
    const std::size_t c = j - 1;
    if (r < rows && c < cols) {
      result.row_to_col[r] = static_cast<int>(c);
      result.total += costs(r, c);
    }
  }
  return result;
}

MatchResult hungarian_assign(const Matrix& costs, double match_threshold) {
  MatchResult out;
  const auto assignment = solve_assignment(costs);
  std::vector<char> gt_taken(costs.cols(), 0);
  for (std::size_t r = 0; r < costs.rows(); ++r) {
    const int c = assignment.row_to_col[r];
    if (c >= 0 && costs(r, static_cast<std::size_t>(c)) < match_threshold) {
      out.pairs.push_back({static_cast<int>(r), c, costs(r, static_cast<std::size_t>(c))});
      gt_taken[static_cast<std::size_t>(c)] = 1;
    } else {
      out.unmatched_predictions.push_back(static_cast<int>(r));
    }
  }
  for (std::size_t c = 0; c < costs.cols(); ++c)
    if (!gt_taken[c]) out.unmatched_ground_truths.push_back(static_cast<int>(c));
  return out;
}

}  // namespace dlane
