// dlane: generate, fit, evaluate, cluster, project and render lane data.
//
// Exit codes: 0 success, 2 schema or usage error, 3 numeric failure,
// 1 anything else.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dlane/errors.hpp"
#include "dlane/io.hpp"
#include "dlane/pipeline.hpp"
#include "dlane/random.hpp"
#include "dlane/render.hpp"

namespace {

using namespace dlane;

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct GenerateArgs {
  std::string spec, out;
  int frames = 1;
  std::optional<std::uint64_t> seed;
};

struct FitArgs {
  std::string dataset, out, mode = "3d", order = "3";
  double alpha = 1.0, beta = 1.0, e_bev = 0.5, e_per = 15.0;
  int max_iters = 3000;
  std::uint64_t seed = 0;
};

struct EvalArgs {
  std::string dataset, pred, out;
  double lane_width = 30.0;
  std::vector<double> thresholds = EvalConfig::default_thresholds();
  bool quiet = false;
};

struct AnchorArgs {
  std::string dataset, out;
  int k = kDefaultAnchors, restarts = 10, rows = kDefaultDescriptorRows;
  std::uint64_t seed = 0;
};

struct ProjectArgs {
  std::string dataset, pred, out;
};

struct RenderArgs {
  std::string dataset, pred, out, view = "perspective";
  std::int64_t frame = 0;
};

int run_generate(const GenerateArgs& a) {
  auto scenes = scene_file_from_json(read_text_file(a.spec));
  if (a.seed)
    for (std::size_t i = 0; i < scenes.scenes.size(); ++i) scenes.scenes[i].seed = mix_seed(*a.seed, i);
  write_dataset(a.out, generate_dataset(scenes.scenes, a.frames, scenes.jitter));
  return 0;
}

int run_fit(const FitArgs& a, unsigned threads) {
  static const std::map<std::string, FitMode> modes{
      {"2d", FitMode::TwoD}, {"3d", FitMode::ThreeD}, {"perspective-baseline", FitMode::PerspectiveBaseline}};
  static const std::map<std::string, CurveMode> orders{
      {"2", CurveMode::Quadratic}, {"3", CurveMode::Cubic}, {"4", CurveMode::Quartic}, {"bezier", CurveMode::Bezier}};
  FitOptions o;
  o.mode = modes.at(a.mode);
  o.fit.curve = orders.at(a.order);
  o.fit.max_iters = a.max_iters;
  o.fit.seed = a.seed;
  o.fit.weights = {a.alpha, a.beta};
  o.fit.weights.validate();
  o.loss.bev.e = a.e_bev;
  o.loss.perspective.e = a.e_per;
  o.loss.bev.validate();
  o.loss.perspective.validate();
  o.threads = threads;
  const auto frames = read_dataset(a.dataset);
  write_predictions(a.out, fit_dataset(frames, o));
  return 0;
}

int run_eval(const EvalArgs& a, unsigned threads) {
  EvalConfig cfg;
  cfg.lane_width = a.lane_width;
  cfg.iou_thresholds = a.thresholds;
  const auto frames = read_dataset(a.dataset);
  const auto preds = read_predictions(a.pred, &frames);
  const auto report = evaluate(frames, preds, cfg, threads);
  write_text_file_atomic(a.out, report_to_json(report));
  if (!a.quiet) std::cout << report_table(report);
  return 0;
}

int run_anchors(const AnchorArgs& a) {
  const auto frames = read_dataset(a.dataset);
  if (frames.empty()) throw InvalidArgument("dataset has no frames");
  const auto anchors = derive_anchors(frames, a.k, a.seed, a.restarts, a.rows);
  write_text_file_atomic(a.out, anchors_to_json(anchors, frames.front().image));
  return 0;
}

int run_project(const ProjectArgs& a) {
  const auto frames = read_dataset(a.dataset);
  const auto preds = read_predictions(a.pred, &frames);
  std::map<std::int64_t, const FrameRecord*> by_id;
  for (const auto& f : frames) by_id[f.id] = &f;
  std::vector<FramePrediction> out;
  out.reserve(preds.size());
  for (const auto& p : preds) out.push_back(project_prediction(p, by_id.at(p.frame)->intrinsics));
  write_predictions(a.out, out);
  return 0;
}

int run_render(const RenderArgs& a) {
  static const std::map<std::string, View> views{
      {"perspective", View::Perspective}, {"bev", View::Bev}, {"profile", View::Profile}};
  const auto frames = read_dataset(a.dataset);
  const FrameRecord* frame = nullptr;
  for (const auto& f : frames)
    if (f.id == a.frame) frame = &f;
  if (frame == nullptr) throw InvalidArgument("frame " + std::to_string(a.frame) + " is not in the dataset");
  std::optional<FramePrediction> pred;
  if (!a.pred.empty()) {
    for (auto& p : read_predictions(a.pred, &frames))
      if (p.frame == a.frame) pred = std::move(p);
    if (!pred) pred = FramePrediction{a.frame, {}, {}, {}};
  }
  write_text_file_atomic(a.out, render_svg(*frame, pred ? &*pred : nullptr, views.at(a.view)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decoupled 3D lane toolkit: synthetic data, fitting, evaluation"};
  app.set_config("--config", "", "TOML/INI file with flag values; command-line flags win");
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "generate a synthetic dataset");
  g->add_option("--spec", gen.spec, "scene JSON file")->required()->check(CLI::ExistingFile);
  g->add_option("--frames", gen.frames, "frames per scene")->check(CLI::PositiveNumber);
  g->add_option("--out", gen.out, "output dataset (JSON Lines)")->required();
  g->add_option("--seed", gen.seed, "override scene seeds");

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "fit decoupled lanes to a dataset's labels");
  f->add_option("--dataset", fit.dataset)->required()->check(CLI::ExistingFile);
  f->add_option("--mode", fit.mode)->check(CLI::IsMember({"2d", "3d", "perspective-baseline"}));
  f->add_option("--order", fit.order)->check(CLI::IsMember({"2", "3", "4", "bezier"}));
  f->add_option("--out", fit.out)->required();
  f->add_option("--alpha", fit.alpha, "3D loss weight");
  f->add_option("--beta", fit.beta, "2D loss weight");
  f->add_option("--e-bev", fit.e_bev, "BEV lane IoU radius (m)");
  f->add_option("--e-per", fit.e_per, "perspective lane IoU radius (px)");
  f->add_option("--max-iters", fit.max_iters)->check(CLI::PositiveNumber);
  f->add_option("--seed", fit.seed);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "score predictions against a dataset");
  e->add_option("--dataset", ev.dataset)->required()->check(CLI::ExistingFile);
  e->add_option("--pred", ev.pred)->required()->check(CLI::ExistingFile);
  e->add_option("--out", ev.out, "report JSON")->required();
  e->add_option("--lane-width", ev.lane_width, "raster width in pixels");
  e->add_option("--thresholds", ev.thresholds, "IoU thresholds");
  e->add_flag("--quiet", ev.quiet, "do not print the table");

  AnchorArgs an;
  auto* a = app.add_subcommand("anchors", "cluster label lanes into anchors");
  a->add_option("--dataset", an.dataset)->required()->check(CLI::ExistingFile);
  a->add_option("-k", an.k)->check(CLI::Range(1, kMaxAnchors));
  a->add_option("--out", an.out)->required();
  a->add_option("--restarts", an.restarts)->check(CLI::PositiveNumber);
  a->add_option("--rows", an.rows, "descriptor rows")->check(CLI::Range(2, 1000));
  a->add_option("--seed", an.seed);

  ProjectArgs pj;
  auto* p = app.add_subcommand("project", "convert 3D predictions to image polylines");
  p->add_option("--dataset", pj.dataset)->required()->check(CLI::ExistingFile);
  p->add_option("--pred", pj.pred)->required()->check(CLI::ExistingFile);
  p->add_option("--out", pj.out)->required();

  RenderArgs rd;
  auto* r = app.add_subcommand("render", "draw a frame as SVG");
  r->add_option("--dataset", rd.dataset)->required()->check(CLI::ExistingFile);
  r->add_option("--pred", rd.pred)->check(CLI::ExistingFile);
  r->add_option("--frame", rd.frame)->required();
  r->add_option("--view", rd.view)->check(CLI::IsMember({"perspective", "bev", "profile"}));
  r->add_option("--out", rd.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& s) {
    return app.exit(s);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitUsage;
  }

  try {
    if (g->parsed()) return run_generate(gen);
    if (f->parsed()) return run_fit(fit, threads);
    if (e->parsed()) return run_eval(ev, threads);
    if (a->parsed()) return run_anchors(an);
    if (p->parsed()) return run_project(pj);
    if (r->parsed()) return run_render(rd);
  } catch (const NonFinite& err) {
    std::cerr << "numeric failure: " << err.what() << "\n";
    return kExitNumeric;
  } catch (const SchemaError& err) {
    std::cerr << "schema error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const VersionError& err) {
    std::cerr << "version error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
