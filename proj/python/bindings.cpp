// Python bindings. Grids cross the boundary as float64 arrays of shape
// (rows, cols, 9): confidence followed by the eight normalized coordinates.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>
#include <tuple>

#include "stairkit/cluster.hpp"
#include "stairkit/error.hpp"
#include "stairkit/fusion.hpp"
#include "stairkit/geom.hpp"
#include "stairkit/grid.hpp"
#include "stairkit/loss.hpp"
#include "stairkit/overlay.hpp"
#include "stairkit/synth.hpp"

namespace py = pybind11;
using namespace stairkit;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using LabelTuple = std::tuple<int, double, double, double, double>;

DetectionGrid grid_from_array(const Array& a, int image_width, int image_height) {
  if (a.ndim() != 3 || a.shape(2) != 9)
    throw py::value_error("grid array must have shape (rows, cols, 9)");
  DetectionGrid g(GridDims{static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1))},
                  ImageDims{image_width, image_height});
  const double* p = a.data();
  for (auto& c : g.cells()) {
    c.conf = *p++;
    for (double& v : c.coords) v = *p++;
  }
  return g;
}

Array grid_to_array(const DetectionGrid& g) {
  Array a({g.rows(), g.cols(), 9});
  double* p = a.mutable_data();
  for (const auto& c : g.cells()) {
    *p++ = c.conf;
    for (double v : c.coords) *p++ = v;
  }
  return a;
}

std::vector<StairLineLabel> labels_from_tuples(const std::vector<LabelTuple>& in) {
  std::vector<StairLineLabel> out;
  for (const auto& [cls, x1, y1, x2, y2] : in) {
    if (cls != 0 && cls != 1) throw py::value_error("label class must be 0 or 1");
    out.push_back({static_cast<LineClass>(cls), x1, y1, x2, y2});
  }
  return out;
}

std::vector<LabelTuple> labels_to_tuples(const std::vector<StairLineLabel>& in) {
  std::vector<LabelTuple> out;
  for (const auto& l : in) out.emplace_back(static_cast<int>(l.cls), l.x1, l.y1, l.x2, l.y2);
  return out;
}

FeatureMap map_from_array(const Array& a) {
  if (a.ndim() != 3) throw py::value_error("feature map must have shape (H, W, C)");
  return FeatureMap(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                    static_cast<int>(a.shape(2)),
                    std::vector<double>(a.data(), a.data() + a.size()));
}

Array map_to_array(const FeatureMap& m) {
  Array a({m.height(), m.width(), m.channels()});
  std::memcpy(a.mutable_data(), m.data().data(), m.size() * sizeof(double));
  return a;
}

template <int N>
std::vector<std::array<double, N>> rows_of(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != N)
    throw py::value_error("points must have shape (n, " + std::to_string(N) + ")");
  std::vector<std::array<double, N>> out(a.shape(0));
  std::memcpy(out.data(), a.data(), a.size() * sizeof(double));
  return out;
}

Vec3 vec3(const std::array<double, 3>& v) { return {v[0], v[1], v[2]}; }
std::array<double, 3> arr3(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

py::dict line_dict(const StairLine2D& l) {
  py::dict d;
  d["x1"] = l.x1;
  d["y1"] = l.y1;
  d["x2"] = l.x2;
  d["y2"] = l.y2;
  d["k"] = l.k;
  d["b"] = l.b;
  d["member_count"] = l.members.size();
  return d;
}

ClusterParams cluster_params(double conf, double tau, double epsilon) {
  ClusterParams p;
  p.conf_threshold = conf;
  p.assign_tolerance = tau;
  p.dedupe_tolerance = epsilon;
  return p;
}

LossMode parse_mode(const std::string& s) {
  if (s == "dynamic") return LossMode::Dynamic;
  if (s == "fixed") return LossMode::Fixed;
  throw py::value_error("mode must be 'dynamic' or 'fixed'");
}

LossGate parse_gate(const std::string& s) {
  if (s == "gt") return LossGate::GroundTruth;
  if (s == "pred") return LossGate::Predicted;
  throw py::value_error("gate must be 'gt' or 'pred'");
}

}  // namespace

PYBIND11_MODULE(_stairkit, m) {
  m.doc() = "Stair line detection postprocessing and geometry";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<DegenerateError>(m, "DegenerateError", PyExc_ArithmeticError);
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError", PyExc_RuntimeError);
  py::register_exception<PipelineError>(m, "PipelineError", PyExc_RuntimeError);

  // grid
  m.def("parse_labels", [](const std::string& text) { return labels_to_tuples(parse_labels(text)); },
        py::arg("text"));
  m.def("format_labels",
        [](const std::vector<LabelTuple>& labels) { return format_labels(labels_from_tuples(labels)); },
        py::arg("labels"));
  m.def(
      "labels_to_grid",
      [](const std::vector<LabelTuple>& labels, int rows, int cols, int width, int height) {
        return grid_to_array(
            labels_to_grid(labels_from_tuples(labels), {rows, cols}, {width, height}).grid);
      },
      py::arg("labels"), py::arg("rows") = 32, py::arg("cols") = 16, py::arg("width") = 512,
      py::arg("height") = 512);
  m.def(
      "cell_to_pixel",
      [](int i, int j, double x, double y) {
        const Point2 p = cell_to_pixel(DetectionGrid{}, i, j, {x, y});
        return std::make_pair(p.x, p.y);
      },
      py::arg("i"), py::arg("j"), py::arg("x"), py::arg("y"));

  // fusion
  m.def("focus_slice", [](const Array& a) { return map_to_array(focus_slice(map_from_array(a))); },
        py::arg("x"));
  m.def("focus_unslice",
        [](const Array& a) { return map_to_array(focus_unslice(map_from_array(a))); }, py::arg("x"));
  m.def(
      "selective_fuse",
      [](const Array& u_rgb, const Array& u_d, std::vector<double> rgb_logits,
         std::vector<double> depth_logits) {
        SelectiveParams p;
        p.logits = FixedLogits{std::move(rgb_logits), std::move(depth_logits)};
        const auto r = selective_fuse(map_from_array(u_rgb), map_from_array(u_d), p);
        return py::make_tuple(map_to_array(r.fused), r.rgb_weights, r.depth_weights);
      },
      py::arg("u_rgb"), py::arg("u_d"), py::arg("rgb_logits"), py::arg("depth_logits"),
      "Fuse with fixed per-channel logits; returns (fused, rgb_weights, depth_weights).");
  m.def(
      "selective_fuse_affine",
      [](const Array& u_rgb, const Array& u_d, std::vector<double> rgb_weight,
         std::vector<double> rgb_bias, std::vector<double> depth_weight,
         std::vector<double> depth_bias) {
        SelectiveParams p;
        p.logits = AffineLogits{std::move(rgb_weight), std::move(rgb_bias), std::move(depth_weight),
                                std::move(depth_bias)};
        const auto r = selective_fuse(map_from_array(u_rgb), map_from_array(u_d), p);
        return py::make_tuple(map_to_array(r.fused), r.rgb_weights, r.depth_weights);
      },
      py::arg("u_rgb"), py::arg("u_d"), py::arg("rgb_weight"), py::arg("rgb_bias"),
      py::arg("depth_weight"), py::arg("depth_bias"),
      "Fuse with logits from row-major C x C matrices applied to the pooled descriptor.");
  m.def(
      "backbone_shape_plan",
      [](int height, int width, double factor) {
        py::list rows;
        for (const auto& r : backbone_shape_plan(height, width, factor).rows) {
          py::dict d;
          d["name"] = r.name;
          d["branch"] = to_string(r.branch);
          d["stride"] = py::make_tuple(r.stride_h, r.stride_w);
          d["shape"] = py::make_tuple(r.height, r.width, r.channels);
          rows.append(d);
        }
        return rows;
      },
      py::arg("height") = 512, py::arg("width") = 512, py::arg("width_factor") = 1.0);

  // loss and metrics
  m.def(
      "detection_metrics",
      [](const Array& pred, const Array& gt, double conf) {
        const auto r = detection_metrics(grid_from_array(pred, 512, 512), grid_from_array(gt, 512, 512),
                                         conf);
        py::dict d;
        d["tp"] = r.tp;
        d["fp"] = r.fp;
        d["fn"] = r.fn;
        d["accuracy"] = r.accuracy;
        d["recall"] = r.recall;
        d["iou"] = r.iou;
        return d;
      },
      py::arg("pred"), py::arg("gt"), py::arg("conf") = 0.5);
  m.def(
      "multitask_loss",
      [](const Array& pred, const Array& gt, double alpha, double beta, double lam,
         const std::string& mode, const std::string& gate) {
        LossWeights w;
        w.alpha = alpha;
        w.beta = beta;
        w.lambda = lam;
        const auto r = multitask_loss(grid_from_array(pred, 512, 512), grid_from_array(gt, 512, 512),
                                      w, parse_mode(mode), parse_gate(gate));
        py::dict d;
        d["total"] = r.total;
        d["cls"] = r.cls_term;
        d["x"] = r.x_term;
        d["y"] = r.y_term;
        return d;
      },
      py::arg("pred"), py::arg("gt"), py::arg("alpha") = 10.0, py::arg("beta") = 10.0,
      py::arg("lam") = 4.0, py::arg("mode") = "dynamic", py::arg("gate") = "gt");
  m.def(
      "coord_errors",
      [](const std::vector<Array>& preds, const std::vector<Array>& gts) {
        std::vector<DetectionGrid> p, g;
        for (const auto& a : preds) p.push_back(grid_from_array(a, 512, 512));
        for (const auto& a : gts) g.push_back(grid_from_array(a, 512, 512));
        const auto e = coord_errors(p, g);
        return std::make_pair(e.x_error, e.y_error);
      },
      py::arg("preds"), py::arg("gts"));
  m.def(
      "update_weights",
      [](double alpha, double beta, double x_error, double y_error, double sigma) {
        const auto w = update_weights({alpha, beta, sigma, 4.0}, {x_error, y_error});
        return std::make_pair(w.alpha, w.beta);
      },
      py::arg("alpha"), py::arg("beta"), py::arg("x_error"), py::arg("y_error"),
      py::arg("sigma") = 0.5);
  m.def(
      "weight_schedule",
      [](const std::vector<std::pair<double, double>>& trace, double alpha0, double beta0,
         double sigma) {
        std::vector<ValErrors> t;
        for (const auto& [x, y] : trace) t.push_back({x, y});
        std::vector<std::pair<double, double>> out;
        for (const auto& r : weight_schedule({alpha0, beta0, sigma, 4.0}, t))
          out.emplace_back(r.alpha, r.beta);
        return out;
      },
      py::arg("trace"), py::arg("alpha0") = 10.0, py::arg("beta0") = 10.0, py::arg("sigma") = 0.5);

  // clustering
  m.def(
      "fit_line_2d",
      [](const Array& pts) {
        std::vector<Point2> p;
        for (const auto& r : rows_of<2>(pts)) p.push_back({r[0], r[1]});
        const auto f = fit_line_2d(p);
        return std::make_pair(f.k, f.b);
      },
      py::arg("points"));
  m.def(
      "cluster_grid",
      [](const Array& grid, double conf, double tau, double epsilon) {
        py::list out;
        for (const auto& l : cluster_grid(grid_from_array(grid, 512, 512),
                                          cluster_params(conf, tau, epsilon)))
          out.append(line_dict(l));
        return out;
      },
      py::arg("grid"), py::arg("conf") = 0.5, py::arg("tau") = 10.0, py::arg("epsilon") = 4.0);

  // geometry
  m.def(
      "fit_line_3d",
      [](const Array& pts) {
        std::vector<Vec3> p;
        for (const auto& r : rows_of<3>(pts)) p.push_back(vec3(r));
        const auto f = fit_line_3d(p);
        return py::make_tuple(f.k1, f.b1, f.k2, f.b2);
      },
      py::arg("points"), "Fits x = k1 z + b1 and y = k2 z + b2.");
  m.def(
      "attitude_from_gravity",
      [](const std::array<double, 3>& g) {
        const auto a = attitude_from_gravity(vec3(g));
        return std::make_pair(a.pitch, a.roll);
      },
      py::arg("gravity"));
  m.def(
      "gravity_from_attitude",
      [](double pitch, double roll, double magnitude) {
        return arr3(gravity_from_attitude(pitch, roll, magnitude));
      },
      py::arg("pitch"), py::arg("roll"), py::arg("magnitude") = 9.81);
  m.def(
      "camera_to_world",
      [](const std::array<double, 3>& p, double pitch, double roll) {
        return arr3(camera_to_world(vec3(p), pitch, roll));
      },
      py::arg("point"), py::arg("pitch"), py::arg("roll"));
  m.def(
      "world_to_stair",
      [](const std::array<double, 3>& p, double yaw) { return arr3(world_to_stair(vec3(p), yaw)); },
      py::arg("point"), py::arg("yaw"));
  m.def(
      "measure",
      [](const Array& grid, const py::array_t<float, py::array::c_style | py::array::forcecast>& depth,
         double fx, double fy, double cx, double cy, const std::array<double, 3>& gravity,
         int steps, double conf, double tau, double epsilon, double omega) {
        if (depth.ndim() != 2) throw py::value_error("depth must have shape (H, W)");
        DepthMap d(static_cast<int>(depth.shape(1)), static_cast<int>(depth.shape(0)));
        std::memcpy(d.data.data(), depth.data(), d.data.size() * sizeof(float));
        CameraRig rig{fx, fy, cx, cy, vec3(gravity), ImageDims{d.width, d.height}};
        PipelineParams p;
        p.cluster = cluster_params(conf, tau, epsilon);
        p.omega = omega;
        p.max_steps = steps;
        const auto r = measure_pipeline(grid_from_array(grid, d.width, d.height), d, rig, p);
        py::dict out;
        out["direction"] = r.direction ? py::object(py::str(to_string(*r.direction))) : py::none();
        py::list st;
        for (const auto& s : r.steps) st.append(py::make_tuple(s.width, s.height));
        out["steps"] = st;
        out["yaw"] = r.yaw;
        out["pitch"] = r.pitch;
        out["roll"] = r.roll;
        out["lines_detected"] = r.lines_detected;
        out["lines_used"] = r.lines_used;
        out["diagnostics"] = r.diagnostics;
        return out;
      },
      py::arg("grid"), py::arg("depth"), py::arg("fx") = 460.0, py::arg("fy") = 460.0,
      py::arg("cx") = 256.0, py::arg("cy") = 256.0,
      py::arg("gravity") = std::array<double, 3>{0.0, 9.81, 0.0}, py::arg("steps") = 3,
      py::arg("conf") = 0.5, py::arg("tau") = 10.0, py::arg("epsilon") = 4.0,
      py::arg("omega") = 0.05,
      "Run the full pipeline; returns a dict with direction, steps [(width, height)], angles.");

  // synthetic scenes
  m.def(
      "simulate",
      [](int n_steps, double step_width, double step_height, const std::array<double, 3>& camera,
         double pitch, double roll, double yaw, bool descending, double noise, double quantum,
         std::uint64_t seed) {
        SceneSpec s;
        s.n_steps = n_steps;
        s.step_width = step_width;
        s.step_height = step_height;
        s.camera_position = vec3(camera);
        s.camera_attitude = {pitch, roll, yaw};
        s.direction = descending ? StairDirection::Descending : StairDirection::Ascending;
        s.depth_noise_sigma = noise;
        s.depth_quantization = quantum;
        s.rng_seed = seed;
        const auto scene = make_scene(s);
        const auto d = render_depth(scene);
        py::array_t<float> depth({d.height, d.width});
        std::memcpy(depth.mutable_data(), d.data.data(), d.data.size() * sizeof(float));
        py::dict out;
        out["labels"] = labels_to_tuples(project_gt_lines(scene));
        out["depth"] = depth;
        out["gravity"] = arr3(scene.rig.gravity);
        out["fx"] = scene.rig.fx;
        out["fy"] = scene.rig.fy;
        out["cx"] = scene.rig.cx;
        out["cy"] = scene.rig.cy;
        return out;
      },
      py::arg("n_steps") = 5, py::arg("step_width") = 0.30, py::arg("step_height") = 0.15,
      py::arg("camera") = std::array<double, 3>{0.0, 1.2, -1.0}, py::arg("pitch") = 0.0,
      py::arg("roll") = 0.0, py::arg("yaw") = 0.0, py::arg("descending") = false,
      py::arg("noise") = 0.0, py::arg("quantum") = 0.0, py::arg("seed") = 0,
      "Render a staircase; angles in radians, camera position in the stair frame.");
  m.def(
      "perturb_grid",
      [](const Array& grid, double noise_px, double drop_rate, std::uint64_t seed) {
        return grid_to_array(perturb_grid(grid_from_array(grid, 512, 512), noise_px, drop_rate, seed));
      },
      py::arg("grid"), py::arg("noise_px"), py::arg("drop_rate") = 0.0, py::arg("seed") = 0);
  m.def(
      "render_overlay_svg",
      [](const std::vector<LabelTuple>& gt, const Array& grid, double conf, double tau,
         double epsilon) {
        return render_overlay_svg(
            {512, 512}, labels_from_tuples(gt),
            cluster_grid(grid_from_array(grid, 512, 512), cluster_params(conf, tau, epsilon)));
      },
      py::arg("gt"), py::arg("grid"), py::arg("conf") = 0.5, py::arg("tau") = 10.0,
      py::arg("epsilon") = 4.0, "SVG with ground-truth labels and the lines clustered from grid.");
}
