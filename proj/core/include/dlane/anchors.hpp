#pragma once

#include <cstdint>
#include <vector>

#include "dlane/camera.hpp"

namespace dlane {

inline constexpr int kDefaultDescriptorRows = 36;
inline constexpr int kMaxAnchors = 50;
inline constexpr int kDefaultAnchors = 24;

/// Lane summary of fixed length m + 2: u at m uniform rows over the lower half
/// of the image, then the start and end rows.
struct LaneDescriptor {
  std::vector<double> values;

  std::size_t rows() const noexcept { return values.size() < 2 ? 0 : values.size() - 2; }
  double v_start() const { return values.at(values.size() - 2); }
  double v_end() const { return values.at(values.size() - 1); }

  friend bool operator==(const LaneDescriptor&, const LaneDescriptor&) = default;
};

/// Row positions of the descriptor grid.
std::vector<double> descriptor_rows(const ImageSpec& image, int m);

/// Rows the lane does not reach copy the nearest covered row. Throws
/// DegenerateLane when fewer than two grid rows are covered.
LaneDescriptor build_descriptor(const Lane2D& lane, const ImageSpec& image, int m = kDefaultDescriptorRows);

/// Polyline over the descriptor rows between its start and end rows.
Lane2D descriptor_to_lane(const LaneDescriptor& d, const ImageSpec& image);

struct AnchorSet {
  std::vector<LaneDescriptor> anchors;
  double inertia = 0.0;
  /// Inertia after every accepted Lloyd iteration, one list per restart.
  std::vector<std::vector<double>> inertia_history;
};

/// k-means with k-means++ seeding; the lowest-inertia restart wins (ties go to
/// the earlier restart). Restarts run concurrently. Throws TooFewSamples when
/// fewer descriptors than k are given.
AnchorSet cluster_anchors(const std::vector<LaneDescriptor>& descriptors, int k, std::uint64_t seed,
                          int restarts = 10, int max_iters = 100);

/// Fraction of labels whose cheapest anchor (row matching cost) is below
/// `threshold` pixels.
double anchor_recall(const AnchorSet& anchors, const std::vector<Lane2D>& gts, const ImageSpec& image,
                     double threshold, double row_step = 1.0);

}  // namespace dlane
