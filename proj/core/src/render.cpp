#include "dlane/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string_view>

#include "dlane/pipeline.hpp"

namespace dlane {
namespace {

constexpr double kPlotWidth = 480.0;
constexpr double kPlotHeight = 640.0;
constexpr double kMargin = 20.0;

struct XY {
  double x = 0.0;
  double y = 0.0;
};

using Polyline = std::vector<XY>;

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

void append_path(std::string& out, const Polyline& line, std::string_view cls) {
  if (line.empty()) return;
  out += "    <path class=\"";
  out += cls;
  out += "\" d=\"";
  for (std::size_t i = 0; i < line.size(); ++i) {
    out += i == 0 ? "M" : " L";
    out += fmt(line[i].x);
    out += ',';
    out += fmt(line[i].y);
  }
  out += "\"/>\n";
}

// Fits every polyline into the plot area, keeping the aspect ratio.
struct Frame2D {
  double x0 = 0.0, y0 = 0.0, scale = 1.0;
  bool flip_y = false;
  double height = kPlotHeight;

  XY map(XY p) const {
    const double x = kMargin + (p.x - x0) * scale;
    const double y = (p.y - y0) * scale;
    return {x, flip_y ? height - kMargin - y : kMargin + y};
  }
};

Frame2D fit_frame(const std::vector<Polyline>& all, bool flip_y, double w, double h) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& line : all)
    for (const auto& p : line) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  Frame2D f;
  f.flip_y = flip_y;
  f.height = h;
  if (!std::isfinite(xmin)) return f;
  const double sx = (w - 2 * kMargin) / std::max(xmax - xmin, 1e-9);
  const double sy = (h - 2 * kMargin) / std::max(ymax - ymin, 1e-9);
  f.scale = std::min(sx, sy);
  // centre the narrow axis
  f.x0 = xmin - ((w - 2 * kMargin) / f.scale - (xmax - xmin)) / 2;
  f.y0 = ymin - ((h - 2 * kMargin) / f.scale - (ymax - ymin)) / 2;
  return f;
}

}  // namespace

std::string render_svg(const FrameRecord& frame, const FramePrediction* pred, View view) {
  std::vector<Polyline> gt, pr;
  double width = kPlotWidth, height = kPlotHeight;
  std::string view_name;

  if (view == View::Perspective) {
    view_name = "perspective";
    width = frame.image.width;
    height = frame.image.height;
    for (const auto& lane : frame.lanes2d) {
      Polyline line;
      for (const auto& p : lane.points) line.push_back({p.u, p.v});
      gt.push_back(std::move(line));
    }
    if (pred != nullptr)
      for (const auto& lane : prediction_lanes_2d(*pred, frame.intrinsics)) {
        Polyline line;
        for (const auto& p : lane.points) line.push_back({p.u, p.v});
        pr.push_back(std::move(line));
      }
  } else {
    const bool bev = view == View::Bev;
    view_name = bev ? "bev" : "profile";
    if (!bev) std::swap(width, height);
    auto to_xy = [bev](const Point3D& p) { return bev ? XY{p.x, p.z} : XY{p.z, p.y}; };
    for (const auto& lane : frame.lanes3d) {
      Polyline line;
      for (const auto& p : lane) line.push_back(to_xy(p));
      gt.push_back(std::move(line));
    }
    if (pred != nullptr)
      for (const auto& lane : pred->lanes3d) {
        Polyline line;
        for (const auto& p : sample_lane_3d(lane, kDefaultKeypoints)) line.push_back(to_xy(p));
        pr.push_back(std::move(line));
      }
    // bev: far away at the top; profile: y already grows downward
    std::vector<Polyline> all = gt;
    all.insert(all.end(), pr.begin(), pr.end());
    const auto f = fit_frame(all, bev, width, height);
    for (auto* set : {&gt, &pr})
      for (auto& line : *set)
        for (auto& p : line) p = f.map(p);
  }

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
         "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) + "\" data-view=\"" + view_name +
         "\" data-frame=\"" + std::to_string(frame.id) + "\">\n";
  out += "  <style>.gt{fill:none;stroke:#1a7f37;stroke-width:2}.pred{fill:none;stroke:#cf222e;stroke-width:1.5;"
         "stroke-dasharray:6 3}</style>\n";
  out += "  <rect class=\"canvas\" x=\"0\" y=\"0\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
         "\" fill=\"#f6f8fa\" stroke=\"#8c959f\"/>\n";
  out += "  <g class=\"lanes\">\n";
  for (const auto& line : gt) append_path(out, line, "gt");
  for (const auto& line : pr) append_path(out, line, "pred");
  out += "  </g>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace dlane
