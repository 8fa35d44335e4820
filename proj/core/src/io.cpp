#include "dlane/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "dlane/errors.hpp"
#include "json.hpp"

namespace dlane {
namespace {

using nlohmann::json;

// Walks a parsed line, turning type/shape problems into SchemaErrors that
// name the offending field.
class Field {
 public:
  Field(const json& value, std::size_t line, std::string path)
      : value_(value), line_(line), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& what) const { throw SchemaError(line_, path_, what); }

  bool has(const char* key) const { return value_.is_object() && value_.contains(key); }

  Field operator[](const char* key) const {
    if (!value_.is_object()) fail("expected an object");
    const auto it = value_.find(key);
    if (it == value_.end()) throw SchemaError(line_, child(key), "missing field");
    return {*it, line_, child(key)};
  }

  Field at(std::size_t i) const { return {array().at(i), line_, path_ + "[" + std::to_string(i) + "]"}; }

  const json& array() const {
    if (!value_.is_array()) fail("expected an array");
    return value_;
  }
  std::size_t size() const { return array().size(); }

  double number() const {
    if (!value_.is_number()) fail("expected a number");
    const double x = value_.get<double>();
    if (!std::isfinite(x)) fail("expected a finite number");
    return x;
  }
  std::int64_t integer() const {
    if (!value_.is_number_integer()) fail("expected an integer");
    return value_.get<std::int64_t>();
  }
  std::uint64_t unsigned_integer() const {
    if (!value_.is_number_unsigned() && !(value_.is_number_integer() && value_.get<std::int64_t>() >= 0))
      fail("expected a non-negative integer");
    return value_.get<std::uint64_t>();
  }
  std::string string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }
  std::vector<double> numbers() const {
    std::vector<double> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
    return out;
  }

  std::size_t line() const noexcept { return line_; }
  const std::string& path() const noexcept { return path_; }

 private:
  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& value_;
  std::size_t line_;
  std::string path_;
};

struct Line {
  std::size_t number;
  json value;
};

std::vector<Line> parse_lines(std::string_view text, std::string_view expected_type) {
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    const auto raw = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    ++number;
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    if (raw.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      lines.push_back({number, json::parse(raw)});
    } catch (const json::parse_error& e) {
      throw SchemaError(number, "", std::string("invalid JSON: ") + e.what());
    }
  }
  if (lines.empty()) throw SchemaError(1, "schema_version", "missing header line");
  const Field header(lines.front().value, lines.front().number, "");
  const auto version = header["schema_version"].string();
  if (version != kSchemaVersion)
    throw VersionError("unsupported schema_version '" + version + "' (expected '" + std::string(kSchemaVersion) + "')");
  if (header.has("type") && header["type"].string() != expected_type)
    header["type"].fail("expected '" + std::string(expected_type) + "'");
  lines.erase(lines.begin());
  return lines;
}

json header_line(std::string_view type) {
  return json{{"schema_version", std::string(kSchemaVersion)}, {"type", std::string(type)}};
}

json to_json(const CameraIntrinsics& k) { return {{"fx", k.fx}, {"fy", k.fy}, {"ox", k.ox}, {"oy", k.oy}}; }
json to_json(const ImageSpec& im) { return {{"width", im.width}, {"height", im.height}}; }

json to_json(const Lane2D& lane) {
  json pts = json::array();
  for (const auto& p : lane.points) pts.push_back({p.u, p.v});
  return pts;
}

CameraIntrinsics intrinsics_from(const Field& f) {
  CameraIntrinsics k{f["fx"].number(), f["fy"].number(), f["ox"].number(), f["oy"].number()};
  try {
    k.validate();
  } catch (const InvalidArgument& e) {
    f.fail(e.what());
  }
  return k;
}

ImageSpec image_from(const Field& f) {
  const auto w = f["width"].integer();
  const auto h = f["height"].integer();
  if (w < 1 || h < 1 || w > 1'000'000 || h > 1'000'000) f.fail("image dimensions must be positive");
  return {static_cast<int>(w), static_cast<int>(h)};
}

Lane2D lane2d_from(const Field& f) {
  Lane2D lane;
  lane.points.reserve(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto p = f.at(i);
    if (p.size() != 2) p.fail("expected [u, v]");
    lane.points.push_back({p.at(0).number(), p.at(1).number()});
  }
  if (lane.points.size() < 2) f.fail("a 2D lane needs at least two points");
  return lane;
}

std::vector<Point3D> lane3d_from(const Field& f) {
  std::vector<Point3D> lane;
  lane.reserve(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto p = f.at(i);
    if (p.size() != 3) p.fail("expected [x, y, z]");
    lane.push_back({p.at(0).number(), p.at(1).number(), p.at(2).number()});
  }
  if (lane.size() < 2) f.fail("a 3D lane needs at least two points");
  return lane;
}

std::string format_threshold(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", t);
  return buf;
}

GroundKind ground_kind_from(const Field& f) {
  const auto s = f.string();
  if (s == "flat") return GroundKind::Flat;
  if (s == "slope") return GroundKind::Slope;
  if (s == "sine") return GroundKind::Sine;
  if (s == "smooth_noise") return GroundKind::SmoothNoise;
  f.fail("unknown ground kind '" + s + "'");
}

SceneSpec scene_from(const Field& f) {
  SceneSpec s;
  if (f.has("tag")) s.tag = f["tag"].string();
  if (f.has("lateral_offsets")) s.lateral_offsets = f["lateral_offsets"].numbers();
  if (f.has("lane_count") && static_cast<std::size_t>(f["lane_count"].integer()) != s.lateral_offsets.size())
    f["lane_count"].fail("must equal the number of lateral_offsets");
  if (f.has("centerline")) {
    const auto c = f["centerline"].numbers();
    if (c.size() != 4) f["centerline"].fail("expected [a, b, c, d]");
    s.centerline = {c[0], c[1], c[2], c[3]};
  }
  if (f.has("ground")) {
    const auto g = f["ground"];
    if (g.has("kind")) s.ground.kind = ground_kind_from(g["kind"]);
    if (g.has("amplitude")) s.ground.amplitude = g["amplitude"].number();
    if (g.has("wavelength")) s.ground.wavelength = g["wavelength"].number();
    if (g.has("grade")) s.ground.grade = g["grade"].number();
    if (g.has("seed")) s.ground.seed = g["seed"].unsigned_integer();
  }
  if (f.has("z_range")) {
    const auto z = f["z_range"].numbers();
    if (z.size() != 2) f["z_range"].fail("expected [z_min, z_max]");
    s.z_min = z[0];
    s.z_max = z[1];
  }
  if (f.has("camera_height")) s.camera_height = f["camera_height"].number();
  if (f.has("intrinsics")) s.intrinsics = intrinsics_from(f["intrinsics"]);
  if (f.has("image")) s.image = image_from(f["image"]);
  if (f.has("seed")) s.seed = f["seed"].unsigned_integer();
  if (f.has("samples")) s.samples = static_cast<int>(f["samples"].integer());
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    f.fail(e.what());
  }
  return s;
}

}  // namespace

std::string dataset_to_jsonl(const std::vector<FrameRecord>& frames) {
  std::string out = header_line("dataset").dump() + "\n";
  for (const auto& f : frames) {
    json lanes3d = json::array();
    for (const auto& lane : f.lanes3d) {
      json pts = json::array();
      for (const auto& p : lane) pts.push_back({p.x, p.y, p.z});
      lanes3d.push_back(std::move(pts));
    }
    json lanes2d = json::array();
    for (const auto& lane : f.lanes2d) lanes2d.push_back(to_json(lane));
    const json j{{"id", f.id},
                 {"tag", f.tag},
                 {"seed", f.seed},
                 {"intrinsics", to_json(f.intrinsics)},
                 {"image", to_json(f.image)},
                 {"lanes3d", std::move(lanes3d)},
                 {"lanes2d", std::move(lanes2d)}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<FrameRecord> dataset_from_jsonl(std::string_view text) {
  std::vector<FrameRecord> frames;
  std::set<std::int64_t> ids;
  for (const auto& line : parse_lines(text, "dataset")) {
    const Field f(line.value, line.number, "");
    FrameRecord r;
    r.id = f["id"].integer();
    if (!ids.insert(r.id).second) f["id"].fail("duplicate frame id " + std::to_string(r.id));
    r.tag = f["tag"].string();
    r.seed = f["seed"].unsigned_integer();
    r.intrinsics = intrinsics_from(f["intrinsics"]);
    r.image = image_from(f["image"]);
    const auto l3 = f["lanes3d"];
    for (std::size_t i = 0; i < l3.size(); ++i) r.lanes3d.push_back(lane3d_from(l3.at(i)));
    const auto l2 = f["lanes2d"];
    for (std::size_t i = 0; i < l2.size(); ++i) r.lanes2d.push_back(lane2d_from(l2.at(i)));
    if (!r.lanes3d.empty() && r.lanes3d.size() != r.lanes2d.size())
      l3.fail("lanes3d and lanes2d must have the same length");
    frames.push_back(std::move(r));
  }
  return frames;
}

std::string predictions_to_jsonl(const std::vector<FramePrediction>& preds) {
  std::string out = header_line("predictions").dump() + "\n";
  for (const auto& p : preds) {
    json lanes3d = json::array();
    for (const auto& lane : p.lanes3d)
      lanes3d.push_back({{"curve", {lane.curve.a, lane.curve.b, lane.curve.c, lane.curve.d}},
                         {"heights", lane.profile.heights},
                         {"z_range", {lane.profile.z_min, lane.profile.z_max}},
                         {"score", lane.score}});
    json lanes2d = json::array();
    for (std::size_t i = 0; i < p.lanes2d.size(); ++i)
      lanes2d.push_back({{"points", to_json(p.lanes2d[i])},
                         {"score", i < p.scores2d.size() ? p.scores2d[i] : 1.0}});
    const json j{{"frame", p.frame}, {"lanes3d", std::move(lanes3d)}, {"lanes2d", std::move(lanes2d)}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<FramePrediction> predictions_from_jsonl(std::string_view text, const std::vector<FrameRecord>* dataset) {
  std::set<std::int64_t> known;
  if (dataset != nullptr)
    for (const auto& f : *dataset) known.insert(f.id);

  auto score_from = [](const Field& f) {
    const double s = f.number();
    if (s < 0.0 || s > 1.0) f.fail("score must lie in [0, 1]");
    return s;
  };

  std::vector<FramePrediction> preds;
  std::set<std::int64_t> seen;
  for (const auto& line : parse_lines(text, "predictions")) {
    const Field f(line.value, line.number, "");
    FramePrediction p;
    p.frame = f["frame"].integer();
    if (dataset != nullptr && !known.count(p.frame))
      f["frame"].fail("unknown frame id " + std::to_string(p.frame));
    if (!seen.insert(p.frame).second) f["frame"].fail("duplicate frame id " + std::to_string(p.frame));
    if (f.has("lanes3d")) {
      const auto l3 = f["lanes3d"];
      for (std::size_t i = 0; i < l3.size(); ++i) {
        const auto l = l3.at(i);
        DecoupledLane3D lane;
        const auto c = l["curve"].numbers();
        if (c.size() != 4) l["curve"].fail("expected [a, b, c, d]");
        lane.curve = {c[0], c[1], c[2], c[3]};
        lane.profile.heights = l["heights"].numbers();
        const auto z = l["z_range"].numbers();
        if (z.size() != 2) l["z_range"].fail("expected [z_min, z_max]");
        lane.profile.z_min = z[0];
        lane.profile.z_max = z[1];
        lane.score = score_from(l["score"]);
        try {
          lane.validate();
        } catch (const InvalidArgument& e) {
          l.fail(e.what());
        }
        p.lanes3d.push_back(std::move(lane));
      }
    }
    if (f.has("lanes2d")) {
      const auto l2 = f["lanes2d"];
      for (std::size_t i = 0; i < l2.size(); ++i) {
        p.lanes2d.push_back(lane2d_from(l2.at(i)["points"]));
        p.scores2d.push_back(l2.at(i).has("score") ? score_from(l2.at(i)["score"]) : 1.0);
      }
    }
    preds.push_back(std::move(p));
  }
  return preds;
}

std::string report_to_json(const EvalReport& report) {
  json f1 = json::object();
  for (const auto& c : report.counts)
    f1[format_threshold(c.threshold)] = {{"tp", c.tp},
                                         {"fp", c.fp},
                                         {"fn", c.fn},
                                         {"precision", c.precision()},
                                         {"recall", c.recall()},
                                         {"f1", c.f1()}};
  const auto& d = report.at_default();
  json j{{"schema_version", std::string(kSchemaVersion)},
         {"frames", report.frames},
         {"f1", std::move(f1)},
         {"mf1", report.mf1()},
         {"precision", d.precision()},
         {"recall", d.recall()},
         {"tusimple",
          {{"accuracy", report.tusimple.accuracy()},
           {"fp_rate", report.tusimple.fp_rate()},
           {"fn_rate", report.tusimple.fn_rate()},
           {"correct_points", report.tusimple.correct_points},
           {"gt_points", report.tusimple.gt_points}}},
         {"cd_error", report.cd_error ? json(*report.cd_error) : json(nullptr)},
         {"cd_pairs", report.cd_pairs}};
  return j.dump(2) + "\n";
}

std::string report_table(const EvalReport& report) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "frames: %zu\n", report.frames);
  os << buf;
  os << "threshold      TP      FP      FN  precision   recall       F1\n";
  for (const auto& c : report.counts) {
    std::snprintf(buf, sizeof buf, "%9.2f %7ld %7ld %7ld %10.4f %8.4f %8.4f\n", c.threshold, c.tp, c.fp, c.fn,
                  c.precision(), c.recall(), c.f1());
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "mF1: %.4f\n", report.mf1());
  os << buf;
  std::snprintf(buf, sizeof buf, "TuSimple accuracy: %.4f  FP: %.4f  FN: %.4f\n", report.tusimple.accuracy(),
                report.tusimple.fp_rate(), report.tusimple.fn_rate());
  os << buf;
  if (report.cd_error) {
    std::snprintf(buf, sizeof buf, "CD error: %.6f m over %zu pairs\n", *report.cd_error, report.cd_pairs);
    os << buf;
  } else {
    os << "CD error: n/a\n";
  }
  return os.str();
}

std::string anchors_to_json(const AnchorSet& anchors, const ImageSpec& image) {
  json list = json::array();
  for (const auto& a : anchors.anchors) list.push_back(a.values);
  const int m = anchors.anchors.empty() ? 0 : static_cast<int>(anchors.anchors.front().rows());
  const json j{{"schema_version", std::string(kSchemaVersion)},
               {"image", to_json(image)},
               {"rows", m >= 2 ? json(descriptor_rows(image, m)) : json::array()},
               {"k", anchors.anchors.size()},
               {"inertia", anchors.inertia},
               {"anchors", std::move(list)}};
  return j.dump(2) + "\n";
}

SceneFile scene_file_from_json(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(1, "", std::string("invalid JSON: ") + e.what());
  }
  const Field f(root, 1, "");
  SceneFile out;
  if (f.has("scenes")) {
    const auto scenes = f["scenes"];
    for (std::size_t i = 0; i < scenes.size(); ++i) out.scenes.push_back(scene_from(scenes.at(i)));
    if (f.has("jitter")) {
      const auto j = f["jitter"];
      auto opt = [&j](const char* key, double& dst) {
        if (j.has(key)) {
          dst = j[key].number();
          if (dst < 0.0) j[key].fail("jitter bounds must be non-negative");
        }
      };
      opt("a", out.jitter.a);
      opt("b", out.jitter.b);
      opt("c", out.jitter.c);
      opt("d", out.jitter.d);
      opt("amplitude", out.jitter.amplitude);
      opt("wavelength", out.jitter.wavelength);
      opt("grade", out.jitter.grade);
    }
  } else {
    out.scenes.push_back(scene_from(f));
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InvalidArgument("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::vector<FrameRecord> read_dataset(const std::filesystem::path& path) {
  return dataset_from_jsonl(read_text_file(path));
}

void write_dataset(const std::filesystem::path& path, const std::vector<FrameRecord>& frames) {
  write_text_file_atomic(path, dataset_to_jsonl(frames));
}

std::vector<FramePrediction> read_predictions(const std::filesystem::path& path,
                                              const std::vector<FrameRecord>* dataset) {
  return predictions_from_jsonl(read_text_file(path), dataset);
}

void write_predictions(const std::filesystem::path& path, const std::vector<FramePrediction>& preds) {
  write_text_file_atomic(path, predictions_to_jsonl(preds));
}

}  // namespace dlane
