#include "commands.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "stairkit/error.hpp"
#include "stairkit/io.hpp"
#include "stairkit/log.hpp"
#include "stairkit/overlay.hpp"

namespace stairkit::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void emit(std::ostream& out, const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
  } else {
    io::write_text(out_path, text);
  }
}

struct Common {
  double conf = 0.5;
  double tau = 10.0;
  double epsilon = 4.0;
  double omega = 0.05;
  int steps = 3;
  std::uint64_t seed = 0;
  std::string out_path;
};

void add_cluster_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--conf", c.conf, "confidence threshold")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--tau", c.tau, "line assignment tolerance, px")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--epsilon", c.epsilon, "endpoint-pair dedupe tolerance, px")
      ->check(CLI::NonNegativeNumber);
}

ClusterParams cluster_params(const Common& c) {
  ClusterParams p;
  p.conf_threshold = c.conf;
  p.assign_tolerance = c.tau;
  p.dedupe_tolerance = c.epsilon;
  return p;
}

int cmd_eval(const std::vector<std::string>& preds, const std::vector<std::string>& gts,
             const Common& c, std::ostream& out, std::ostream& err) {
  if (preds.size() != gts.size()) {
    err << "eval: " << preds.size() << " prediction files but " << gts.size() << " label files\n";
    return kInputError;
  }
  MetricReport total;
  json files = json::array();
  int failures = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    try {
      const DetectionGrid pred = io::grid_from_json(io::read_text(preds[k]));
      const auto labels = parse_labels(io::read_text(gts[k]));
      const auto gt = labels_to_grid(labels, pred.dims(), pred.image_dims());
      const MetricReport r = detection_metrics(pred, gt.grid, c.conf);
      total += r;
      auto entry = json::parse(io::metrics_to_json(r));
      entry["pred"] = preds[k];
      entry["gt"] = gts[k];
      files.push_back(std::move(entry));
    } catch (const std::exception& e) {
      ++failures;
      err << "eval: " << preds[k] << " / " << gts[k] << ": " << e.what() << '\n';
    }
  }
  total.finalize();
  json doc = json::parse(io::metrics_to_json(total));
  doc["files"] = std::move(files);
  emit(out, doc.dump(2), c.out_path);
  return failures ? kInputError : kOk;
}

int cmd_cluster(const std::string& grid_path, const Common& c, std::ostream& out) {
  const DetectionGrid grid = io::grid_from_json(io::read_text(grid_path));
  emit(out, io::lines_to_json(cluster_grid(grid, cluster_params(c))), c.out_path);
  return kOk;
}

int cmd_measure(const std::string& grid_path, const std::string& depth_path,
                const std::string& rig_path, const Common& c, std::ostream& out,
                std::ostream& err) {
  const DetectionGrid grid = io::grid_from_json(io::read_text(grid_path));
  const DepthMap depth = io::read_depth_file(depth_path);
  CameraRig rig = io::rig_from_json(io::read_text(rig_path));
  rig.image = grid.image_dims();
  PipelineParams params;
  params.cluster = cluster_params(c);
  params.omega = c.omega;
  params.max_steps = c.steps;
  try {
    const StairMeasurement m = measure_pipeline(grid, depth, rig, params);
    emit(out, io::measurement_to_json(m), c.out_path);
    if (m.lines_detected == 0) {
      err << "measure: no lines detected\n";
      return kInsufficientData;
    }
    return kOk;
  } catch (const PipelineError& e) {
    err << "measure: stage " << e.stage() << ": " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::Input: return kInputError;
      case ErrorKind::Degenerate: return kDegenerate;
      case ErrorKind::InsufficientData: return kInsufficientData;
    }
    return kInputError;
  }
}

std::vector<ValErrors> parse_error_trace(const std::string& text) {
  std::vector<ValErrors> rows;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cols.push_back(cell);
    auto number = [&](const std::string& s, double& v) {
      const auto first = s.find_first_not_of(" \t");
      const auto last = s.find_last_not_of(" \t");
      if (first == std::string::npos) return false;
      const char* b = s.data() + first;
      const char* e = s.data() + last + 1;
      auto [ptr, ec] = std::from_chars(b, e, v);
      return ec == std::errc() && ptr == e && std::isfinite(v);
    };
    double x = 0.0, y = 0.0;
    // x_error,y_error or the full epoch,alpha,beta,x_error,y_error layout.
    const std::size_t xi = cols.size() == 5 ? 3 : 0;
    if ((cols.size() != 2 && cols.size() != 5) || !number(cols[xi], x) ||
        !number(cols[xi + 1], y)) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw ParseError("expected x_error,y_error", line_no);
    }
    if (x < 0.0 || y < 0.0) throw ParseError("errors must be nonnegative", line_no);
    rows.push_back({x, y});
  }
  return rows;
}

int cmd_loss_sched(const std::string& trace_path, double alpha0, double beta0, double sigma,
                   const Common& c, std::ostream& out) {
  const auto trace = parse_error_trace(io::read_text(trace_path));
  LossWeights w;
  w.alpha = alpha0;
  w.beta = beta0;
  w.sigma = sigma;
  std::string csv = "epoch,alpha,beta,x_error,y_error\n";
  for (const auto& r : weight_schedule(w, trace))
    csv += std::to_string(r.epoch) + "," + fmt(r.alpha) + "," + fmt(r.beta) + "," +
           fmt(r.errors.x_error) + "," + fmt(r.errors.y_error) + "\n";
  emit(out, csv, c.out_path);
  return kOk;
}

int cmd_render(int width, int height, const std::string& gt_path, const std::string& lines_path,
               const Common& c, std::ostream& out) {
  std::vector<StairLineLabel> gt;
  std::vector<StairLine2D> lines;
  if (!gt_path.empty()) gt = parse_labels(io::read_text(gt_path));
  if (!lines_path.empty()) lines = io::lines_from_json(io::read_text(lines_path));
  emit(out, render_overlay_svg({width, height}, gt, lines), c.out_path);
  return kOk;
}

struct SimulateArgs {
  SceneSpec spec;
  double pitch_deg = 10.0, roll_deg = 0.0, yaw_deg = 0.0;
  std::string direction = "ascending";
  std::vector<double> camera{0.0, 1.2, -1.0};
  double jitter_px = 0.0;
  double drop_rate = 0.0;
};

int cmd_simulate(SimulateArgs a, const Common& c, std::ostream& out) {
  if (c.out_path.empty()) throw ParseError("simulate needs --out DIR");
  SceneSpec spec = a.spec;
  spec.direction =
      a.direction == "descending" ? StairDirection::Descending : StairDirection::Ascending;
  spec.camera_attitude = {a.pitch_deg * kDegToRad, a.roll_deg * kDegToRad, a.yaw_deg * kDegToRad};
  spec.camera_position = Vec3(a.camera[0], a.camera[1], a.camera[2]);
  spec.rng_seed = c.seed;

  const SyntheticScene scene = make_scene(spec);
  const auto labels = project_gt_lines(scene);
  const DepthMap depth = render_depth(scene);
  DetectionGrid grid = labels_to_grid(labels, {}, spec.rig.image).grid;
  if (a.jitter_px > 0.0 || a.drop_rate > 0.0)
    grid = perturb_grid(grid, a.jitter_px, a.drop_rate, c.seed + 1);

  const fs::path dir(c.out_path);
  fs::create_directories(dir);
  io::write_text(dir / "labels.txt", format_labels(labels));
  io::write_depth_file(dir / "depth.dpth", depth);
  io::write_text(dir / "rig.json", io::rig_to_json(scene.rig));
  io::write_text(dir / "grid.json", io::grid_to_json(grid));
  io::write_text(dir / "manifest.json",
                 io::scene_manifest_json(spec, static_cast<int>(labels.size())));
  out << json{{"out", dir.string()}, {"labels", labels.size()}}.dump() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"stairkit: stair-line grid postprocessing, measurement and simulation", "stairkit"};
  app.require_subcommand(1);
  Common common;

  auto* eval = app.add_subcommand("eval", "cell-level accuracy/recall/IoU against label files");
  std::vector<std::string> preds, gts;
  eval->add_option("--pred", preds, "prediction grid dumps (JSON)")->required()->check(CLI::ExistingFile);
  eval->add_option("--gt", gts, "label files, aligned with --pred")->required()->check(CLI::ExistingFile);
  eval->add_option("--conf", common.conf, "confidence threshold")->check(CLI::Range(0.0, 1.0));
  eval->add_option("--out", common.out_path, "write JSON here instead of stdout");

  auto* cluster = app.add_subcommand("cluster", "cluster a grid dump into stair lines");
  std::string grid_path;
  cluster->add_option("grid", grid_path, "grid dump JSON")->required()->check(CLI::ExistingFile);
  add_cluster_flags(cluster, common);
  cluster->add_option("--out", common.out_path);

  auto* measure = app.add_subcommand("measure", "stair width/height from grid, depth and rig");
  std::string depth_path, rig_path;
  measure->add_option("--grid", grid_path)->required()->check(CLI::ExistingFile);
  measure->add_option("--depth", depth_path, "DPTH1 depth map")->required()->check(CLI::ExistingFile);
  measure->add_option("--rig", rig_path, "rig JSON")->required()->check(CLI::ExistingFile);
  add_cluster_flags(measure, common);
  measure->add_option("--omega", common.omega, "discard differences below this, m")
      ->check(CLI::NonNegativeNumber);
  measure->add_option("--steps", common.steps, "number of nearest steps to report")
      ->check(CLI::NonNegativeNumber);
  measure->add_option("--out", common.out_path);

  auto* sched = app.add_subcommand("loss-sched", "replay the dynamic loss-weight schedule");
  std::string trace_path;
  double alpha0 = 10.0, beta0 = 10.0, sigma = 0.5;
  sched->add_option("trace", trace_path, "CSV of x_error,y_error per epoch")
      ->required()
      ->check(CLI::ExistingFile);
  sched->add_option("--alpha0", alpha0);
  sched->add_option("--beta0", beta0);
  sched->add_option("--sigma", sigma)->check(CLI::PositiveNumber);
  sched->add_option("--out", common.out_path);

  auto* render = app.add_subcommand("render", "SVG overlay of labels and clustered lines");
  int width = 512, height = 512;
  std::string gt_path, lines_path;
  render->add_option("--width", width)->check(CLI::PositiveNumber);
  render->add_option("--height", height)->check(CLI::PositiveNumber);
  render->add_option("--gt", gt_path, "label file")->check(CLI::ExistingFile);
  render->add_option("--lines", lines_path, "cluster output JSON")->check(CLI::ExistingFile);
  render->add_option("--out", common.out_path);

  auto* simulate = app.add_subcommand("simulate", "write a synthetic stair scene");
  SimulateArgs sim;
  simulate->add_option("--n-steps", sim.spec.n_steps)->check(CLI::PositiveNumber);
  simulate->add_option("--step-width", sim.spec.step_width)->check(CLI::PositiveNumber);
  simulate->add_option("--step-height", sim.spec.step_height)->check(CLI::PositiveNumber);
  simulate->add_option("--span", sim.spec.step_span)->check(CLI::PositiveNumber);
  simulate->add_option("--camera", sim.camera, "camera position x y z, stair frame")
      ->expected(3);
  simulate->add_option("--pitch-deg", sim.pitch_deg);
  simulate->add_option("--roll-deg", sim.roll_deg);
  simulate->add_option("--yaw-deg", sim.yaw_deg);
  simulate->add_option("--direction", sim.direction)
      ->check(CLI::IsMember({"ascending", "descending"}));
  simulate->add_option("--fx", sim.spec.rig.fx)->check(CLI::PositiveNumber);
  simulate->add_option("--fy", sim.spec.rig.fy)->check(CLI::PositiveNumber);
  simulate->add_option("--cx", sim.spec.rig.cx);
  simulate->add_option("--cy", sim.spec.rig.cy);
  simulate->add_option("--noise", sim.spec.depth_noise_sigma, "depth noise sigma, m")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--quantum", sim.spec.depth_quantization, "depth quantization, m")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--jitter", sim.jitter_px, "endpoint jitter, px")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--drop", sim.drop_rate, "cell drop rate")->check(CLI::Range(0.0, 0.999));
  simulate->add_option("--seed", common.seed);
  simulate->add_option("--out", common.out_path, "output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kInputError;
  }

  try {
    if (*eval) return cmd_eval(preds, gts, common, out, err);
    if (*cluster) return cmd_cluster(grid_path, common, out);
    if (*measure) return cmd_measure(grid_path, depth_path, rig_path, common, out, err);
    if (*sched) return cmd_loss_sched(trace_path, alpha0, beta0, sigma, common, out);
    if (*render) return cmd_render(width, height, gt_path, lines_path, common, out);
    if (*simulate) return cmd_simulate(sim, common, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const DegenerateError& e) {
    err << "degenerate geometry: " << e.what() << '\n';
    return kDegenerate;
  } catch (const InsufficientDataError& e) {
    err << "insufficient data: " << e.what() << '\n';
    return kInsufficientData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace stairkit::cli
