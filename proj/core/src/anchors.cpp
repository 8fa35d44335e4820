#include "dlane/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "dlane/assignment.hpp"
#include "dlane/errors.hpp"
#include "dlane/random.hpp"

namespace dlane {
namespace {

using Point = std::vector<double>;

double sq_dist(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

struct KMeansRun {
  std::vector<Point> centroids;
  double inertia = std::numeric_limits<double>::infinity();
  std::vector<double> history;
};

class Lloyd {
 public:
  Lloyd(const std::vector<Point>& data, int k) : data_(data), k_(static_cast<std::size_t>(k)) {}

  KMeansRun run(std::uint64_t seed, int max_iters) {
    Rng rng(seed);
    centroids_ = seed_plus_plus(rng);
    labels_.assign(data_.size(), 0);
    assign();
    update();
    KMeansRun out;
    double current = inertia();
    out.history.push_back(current);
    for (int it = 0; it < max_iters; ++it) {
      const auto prev_centroids = centroids_;
      const auto prev_labels = labels_;
      if (!assign()) break;
      update();
      const double next = inertia();
      if (next > current) {
        // Rounding made the step worse; keep the previous state.
        centroids_ = prev_centroids;
        labels_ = prev_labels;
        break;
      }
      current = next;
      out.history.push_back(current);
    }
    out.centroids = centroids_;
    out.inertia = current;
    return out;
  }

 private:
  std::vector<Point> seed_plus_plus(Rng& rng) const {
    std::vector<Point> centres;
    const std::size_t n = data_.size();
    centres.push_back(data_[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n]);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (centres.size() < k_) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d2[i] = std::min(d2[i], sq_dist(data_[i], centres.back()));
        total += d2[i];
      }
      std::size_t pick = 0;
      if (total > 0.0) {
        const double target = uniform01(rng) * total;
        double acc = 0.0;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          acc += d2[i];
          if (acc > target && d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
      }
      centres.push_back(data_[pick]);
    }
    return centres;
  }

  // Returns true when any label changed.
  bool assign() {
    bool changed = false;
    for (std::size_t i = 0; i < data_.size(); ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k_; ++c) {
        const double d = sq_dist(data_[i], centroids_[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (labels_[i] != best) {
        labels_[i] = best;
        changed = true;
      }
    }
    return changed;
  }

  void update() {
    const std::size_t dim = data_.front().size();
    std::vector<Point> sums(k_, Point(dim, 0.0));
    std::vector<std::size_t> counts(k_, 0);
    for (std::size_t i = 0; i < data_.size(); ++i) {
      auto& s = sums[labels_[i]];
      for (std::size_t j = 0; j < dim; ++j) s[j] += data_[i][j];
      ++counts[labels_[i]];
    }
    for (std::size_t c = 0; c < k_; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < dim; ++j) centroids_[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
    for (std::size_t c = 0; c < k_; ++c) {
      if (counts[c] != 0) continue;
      // Empty cluster: move it onto the point farthest from its own centroid.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < data_.size(); ++i) {
        if (counts[labels_[i]] <= 1) continue;
        const double d = sq_dist(data_[i], centroids_[labels_[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far_d < 0.0) continue;
      --counts[labels_[far]];
      labels_[far] = c;
      counts[c] = 1;
      centroids_[c] = data_[far];
    }
  }

  double inertia() const {
    double s = 0.0;
    for (std::size_t i = 0; i < data_.size(); ++i) s += sq_dist(data_[i], centroids_[labels_[i]]);
    return s;
  }

  const std::vector<Point>& data_;
  std::size_t k_;
  std::vector<Point> centroids_;
  std::vector<std::size_t> labels_;
};

double interpolate_rows(const std::vector<double>& rows, const std::vector<double>& us, double v) {
  if (v <= rows.front()) return us.front();
  if (v >= rows.back()) return us.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(rows.begin(), rows.end(), v) - rows.begin());
  const std::size_t lo = hi - 1;
  const double t = (v - rows[lo]) / (rows[hi] - rows[lo]);
  return us[lo] + t * (us[hi] - us[lo]);
}

}  // namespace

std::vector<double> descriptor_rows(const ImageSpec& image, int m) {
  image.validate();
  if (m < 2) throw InvalidArgument("descriptor needs at least two rows");
  const double top = 0.5 * image.height;
  const double bottom = image.height - 1.0;
  std::vector<double> rows(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) rows[static_cast<std::size_t>(i)] = top + (bottom - top) * i / (m - 1);
  rows.back() = bottom;
  return rows;
}

LaneDescriptor build_descriptor(const Lane2D& lane, const ImageSpec& image, int m) {
  const auto rows = descriptor_rows(image, m);
  if (lane.points.size() < 2) throw DegenerateLane("lane needs at least two points");
  std::vector<std::optional<double>> us;
  us.reserve(rows.size());
  std::size_t covered = 0;
  for (double v : rows) {
    const auto hit = intersect_row(lane, v);
    us.push_back(hit ? std::optional<double>(hit->u) : std::nullopt);
    covered += hit ? 1 : 0;
  }
  if (covered < 2) throw DegenerateLane("lane covers fewer than two descriptor rows");

  LaneDescriptor d;
  d.values.reserve(rows.size() + 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (us[i]) {
      d.values.push_back(*us[i]);
      continue;
    }
    // Nearest covered row; the lower index wins a tie.
    for (std::size_t off = 1;; ++off) {
      if (i >= off && us[i - off]) {
        d.values.push_back(*us[i - off]);
        break;
      }
      if (i + off < rows.size() && us[i + off]) {
        d.values.push_back(*us[i + off]);
        break;
      }
    }
  }
  d.values.push_back(std::clamp(lane.points.front().v, rows.front(), rows.back()));
  d.values.push_back(std::clamp(lane.points.back().v, rows.front(), rows.back()));
  return d;
}

Lane2D descriptor_to_lane(const LaneDescriptor& d, const ImageSpec& image) {
  const auto rows = descriptor_rows(image, static_cast<int>(d.rows()));
  const std::vector<double> us(d.values.begin(), d.values.begin() + static_cast<std::ptrdiff_t>(d.rows()));
  const double near = std::max(d.v_start(), d.v_end());
  const double far = std::min(d.v_start(), d.v_end());
  Lane2D lane;
  lane.points.push_back({interpolate_rows(rows, us, near), near});
  for (std::size_t i = rows.size(); i-- > 0;)
    if (rows[i] < near && rows[i] > far) lane.points.push_back({us[i], rows[i]});
  lane.points.push_back({interpolate_rows(rows, us, far), far});
  return lane;
}

AnchorSet cluster_anchors(const std::vector<LaneDescriptor>& descriptors, int k, std::uint64_t seed, int restarts,
                          int max_iters) {
  if (k < 1) throw InvalidArgument("k must be at least 1");
  if (k > kMaxAnchors) throw InvalidArgument("at most " + std::to_string(kMaxAnchors) + " anchors are supported");
  if (restarts < 1) throw InvalidArgument("restarts must be at least 1");
  if (descriptors.size() < static_cast<std::size_t>(k))
    throw TooFewSamples("need at least k = " + std::to_string(k) + " descriptors, got " +
                        std::to_string(descriptors.size()));
  std::vector<Point> data;
  data.reserve(descriptors.size());
  for (const auto& d : descriptors) {
    if (!data.empty() && d.values.size() != data.front().size())
      throw LengthMismatch("descriptors differ in length");
    data.push_back(d.values);
  }

  std::vector<std::future<KMeansRun>> jobs;
  jobs.reserve(static_cast<std::size_t>(restarts));
  for (int r = 0; r < restarts; ++r)
    jobs.push_back(std::async(std::launch::async, [&data, k, max_iters, s = mix_seed(seed, static_cast<std::uint64_t>(r))] {
      return Lloyd(data, k).run(s, max_iters);
    }));

  AnchorSet out;
  out.inertia = std::numeric_limits<double>::infinity();
  std::vector<Point> best;
  for (auto& job : jobs) {
    auto run = job.get();
    out.inertia_history.push_back(run.history);
    if (run.inertia < out.inertia) {
      out.inertia = run.inertia;
      best = std::move(run.centroids);
    }
  }
  for (auto& c : best) out.anchors.push_back({std::move(c)});
  return out;
}

double anchor_recall(const AnchorSet& anchors, const std::vector<Lane2D>& gts, const ImageSpec& image,
                     double threshold, double row_step) {
  if (gts.empty() || anchors.anchors.empty()) return 0.0;
  std::vector<ResampledLane2D> anchor_rows;
  for (const auto& a : anchors.anchors) {
    try {
      anchor_rows.push_back(resample_lane(descriptor_to_lane(a, image), image, row_step));
    } catch (const DegenerateLane&) {
    }
  }
  std::size_t recalled = 0;
  for (const auto& g : gts) {
    ResampledLane2D gr;
    try {
      gr = resample_lane(g, image, row_step);
    } catch (const DegenerateLane&) {
      continue;
    }
    double best = kUnmatchable;
    for (const auto& a : anchor_rows) best = std::min(best, matching_cost(a, gr));
    if (best < threshold) ++recalled;
  }
  return static_cast<double>(recalled) / static_cast<double>(gts.size());
}

}  // namespace dlane
