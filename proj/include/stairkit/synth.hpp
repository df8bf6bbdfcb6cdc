#pragma once

// Parametric stair scenes with known geometry: depth rendering by ray casting,
// gravity in the camera frame, projected ground-truth labels and grid jitter.
// Serves as the independent oracle for end-to-end checks.

#include <cstdint>
#include <vector>

#include "stairkit/geom.hpp"
#include "stairkit/grid.hpp"

namespace stairkit {

struct SceneSpec {
  int n_steps = 5;
  double step_width = 0.30;   // tread depth along stair Z
  double step_height = 0.15;  // riser
  double step_span = 1.2;     // lateral extent along stair X, centred on x = 0
  double landing_length = 1.5;
  Vec3 camera_position{0.0, 1.0, -1.0};  // stair frame
  Attitude camera_attitude{};            // pitch, roll per the gravity convention; yaw vs stair
  StairDirection direction = StairDirection::Ascending;
  CameraRig rig{};  // intrinsics and image size; gravity is derived
  double depth_noise_sigma = 0.0;
  double depth_quantization = 0.0;
  std::uint64_t rng_seed = 0;
};

// Axis-aligned rectangle in the stair frame: coordinate `axis` equals `value`,
// the other two coordinates lie in [lo, hi] (indexed by axis number).
struct Rect {
  int axis = 1;
  double value = 0.0;
  Vec3 lo, hi;
};

struct Edge3D {
  Vec3 a, b;  // endpoints, stair frame, a.x < b.x
  LineClass cls = LineClass::Convex;
};

struct SyntheticScene {
  SceneSpec spec;
  std::vector<Rect> surfaces;
  std::vector<Edge3D> edges;  // near -> far along the staircase
  Mat3 camera_axes;           // columns: camera x, y, z axes in the stair frame
  Vec3 gravity;               // camera frame
  CameraRig rig;              // spec.rig with gravity filled in

  Vec3 to_camera(const Vec3& stair_point) const;
  Vec3 to_stair(const Vec3& camera_point) const;
  // Distance along the ray from the camera centre in direction `dir` (stair frame,
  // any length) to the first surface, in units of `dir`; infinity when nothing is hit.
  double cast(const Vec3& dir) const;
};

// Throws std::invalid_argument for invalid specs or a camera inside the stair volume.
SyntheticScene make_scene(const SceneSpec& spec);

DepthMap render_depth(const SyntheticScene& scene);

// Visible edge portions projected into the image, clipped, left endpoint first.
std::vector<StairLineLabel> project_gt_lines(const SyntheticScene& scene);

// Jitters endpoint coordinates uniformly within +-noise_px and drops positive
// cells with probability drop_rate. Deterministic for a given seed.
DetectionGrid perturb_grid(const DetectionGrid& gt, double endpoint_noise_px, double drop_rate,
                           std::uint64_t rng_seed);

}  // namespace stairkit
