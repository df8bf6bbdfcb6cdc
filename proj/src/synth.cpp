#include "stairkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace stairkit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Rect riser(double z, double y0, double y1, double half_span) {
  return {2, z, Vec3(-half_span, y0, z), Vec3(half_span, y1, z)};
}

Rect tread(double y, double z0, double z1, double half_span) {
  return {1, y, Vec3(-half_span, y, z0), Vec3(half_span, y, z1)};
}

// Height of the walkable profile under stair-frame depth z.
double profile_height(const SceneSpec& s, double z) {
  const int j = static_cast<int>(std::floor(z / s.step_width));
  const int clamped = std::clamp(j, 0, s.n_steps);
  const double h = clamped * s.step_height;
  return s.direction == StairDirection::Ascending ? h : -h;
}

double ray_rect(const Vec3& origin, const Vec3& dir, const Rect& r) {
  const double d = dir[r.axis];
  if (d == 0.0) return kInf;
  const double t = (r.value - origin[r.axis]) / d;
  if (!(t > 0.0)) return kInf;
  const Vec3 p = origin + t * dir;
  for (int a = 0; a < 3; ++a) {
    if (a == r.axis) continue;
    if (p[a] < r.lo[a] || p[a] > r.hi[a]) return kInf;
  }
  return t;
}

}  // namespace

Vec3 SyntheticScene::to_camera(const Vec3& p) const {
  return camera_axes.transpose() * (p - spec.camera_position);
}

Vec3 SyntheticScene::to_stair(const Vec3& p) const {
  return spec.camera_position + camera_axes * p;
}

double SyntheticScene::cast(const Vec3& dir) const {
  double best = kInf;
  for (const auto& r : surfaces) best = std::min(best, ray_rect(spec.camera_position, dir, r));
  return best;
}

SyntheticScene make_scene(const SceneSpec& spec) {
  if (spec.n_steps < 1) throw std::invalid_argument("scene needs at least one step");
  if (!(spec.step_width > 0.0) || !(spec.step_height > 0.0) || !(spec.step_span > 0.0) ||
      !(spec.landing_length > 0.0))
    throw std::invalid_argument("step dimensions must be positive");
  if (spec.depth_noise_sigma < 0.0 || spec.depth_quantization < 0.0)
    throw std::invalid_argument("noise parameters must be nonnegative");
  const Vec3& cam = spec.camera_position;
  if (cam.y() <= profile_height(spec, cam.z()) + 1e-6)
    throw std::invalid_argument("camera is inside the stair volume");

  SyntheticScene s;
  s.spec = spec;
  const double w = spec.step_width, h = spec.step_height, half = 0.5 * spec.step_span;
  const int n = spec.n_steps;
  const double sign = spec.direction == StairDirection::Ascending ? 1.0 : -1.0;
  const double z_start = std::min(cam.z(), 0.0) - 5.0;

  // Floor (ascending) or upper landing (descending) before the first riser.
  s.surfaces.push_back(tread(0.0, z_start, w, half));
  for (int j = 1; j <= n; ++j) {
    const double y_lo = sign * (j - 1) * h, y_hi = sign * j * h;
    s.surfaces.push_back(riser(j * w, std::min(y_lo, y_hi), std::max(y_lo, y_hi), half));
    const double z_end = j == n ? n * w + spec.landing_length : (j + 1) * w;
    s.surfaces.push_back(tread(sign * j * h, j * w, z_end, half));
  }
  for (int j = 1; j <= n; ++j) {
    const double z = j * w;
    const double y_top = spec.direction == StairDirection::Ascending ? j * h : -(j - 1) * h;
    const double y_bottom = y_top - h;
    // Ascending: concave (riser foot) is nearer along the profile than the convex nosing.
    const Edge3D convex{Vec3(-half, y_top, z), Vec3(half, y_top, z), LineClass::Convex};
    const Edge3D concave{Vec3(-half, y_bottom, z), Vec3(half, y_bottom, z), LineClass::Concave};
    if (spec.direction == StairDirection::Ascending) {
      s.edges.push_back(concave);
      s.edges.push_back(convex);
    } else {
      s.edges.push_back(convex);
      s.edges.push_back(concave);
    }
  }

  // Camera axes in the gravity-aligned world frame, built from the attitude angles.
  const double p = spec.camera_attitude.pitch, r = spec.camera_attitude.roll;
  const double cp = std::cos(p), sr = std::sin(r);
  if (cp <= 0.0 || sr * sr >= cp * cp)
    throw std::invalid_argument("camera attitude outside the supported range");
  const Vec3 z_w(0.0, -std::sin(p), cp);
  const Vec3 x_w(-std::sqrt(1.0 - sr * sr / (cp * cp)), sr, std::tan(p) * sr);
  const Vec3 y_w = z_w.cross(x_w);
  // World -> stair: rotation about Y by the camera yaw.
  const double yaw = spec.camera_attitude.yaw;
  Mat3 world_to_stair_m;
  world_to_stair_m << std::cos(yaw), 0.0, std::sin(yaw), 0.0, 1.0, 0.0, -std::sin(yaw), 0.0,
      std::cos(yaw);
  s.camera_axes.col(0) = world_to_stair_m * x_w;
  s.camera_axes.col(1) = world_to_stair_m * y_w;
  s.camera_axes.col(2) = world_to_stair_m * z_w;

  const double g = 9.81;
  const Vec3 down(0.0, -1.0, 0.0);
  s.gravity = g * s.camera_axes.transpose() * down;
  s.rig = spec.rig;
  s.rig.gravity = s.gravity;
  return s;
}

DepthMap render_depth(const SyntheticScene& scene) {
  const CameraRig& rig = scene.rig;
  const int width = rig.image.width, height = rig.image.height;
  DepthMap depth(width, height);
  std::mt19937_64 rng(scene.spec.rng_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double sigma = scene.spec.depth_noise_sigma;
  const double quantum = scene.spec.depth_quantization;
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const Vec3 ray_c((u + 0.5 - rig.cx) / rig.fx, (v + 0.5 - rig.cy) / rig.fy, 1.0);
      const double t = scene.cast(scene.camera_axes * ray_c);
      if (!std::isfinite(t)) continue;
      // Unit z in the camera ray, so the ray parameter is the camera-frame depth.
      double z = t;
      if (sigma > 0.0) z += sigma * noise(rng);
      if (quantum > 0.0) z = std::round(z / quantum) * quantum;
      if (z > 0.0) depth.at(u, v) = static_cast<float>(z);
    }
  }
  return depth;
}

namespace {

bool visible(const SyntheticScene& scene, const Vec3& p) {
  const Vec3 pc = scene.to_camera(p);
  if (pc.z() <= 1e-3) return false;
  const Point2 px = project(pc, scene.rig);
  if (px.x < 0.0 || px.y < 0.0 || px.x > scene.rig.image.width || px.y > scene.rig.image.height)
    return false;
  const Vec3 dir = p - scene.spec.camera_position;
  const double t = scene.cast(dir);
  return t >= 1.0 - 1e-9;
}

}  // namespace

std::vector<StairLineLabel> project_gt_lines(const SyntheticScene& scene) {
  constexpr int kSamples = 513;
  const double width = scene.rig.image.width, height = scene.rig.image.height;
  std::vector<StairLineLabel> labels;
  for (const auto& e : scene.edges) {
    auto at = [&](double t) -> Vec3 { return e.a + t * (e.b - e.a); };
    std::vector<bool> vis(kSamples);
    for (int k = 0; k < kSamples; ++k) vis[k] = visible(scene, at(k / double(kSamples - 1)));
    int best_lo = -1, best_hi = -1;
    for (int k = 0; k < kSamples;) {
      if (!vis[k]) {
        ++k;
        continue;
      }
      int end = k;
      while (end + 1 < kSamples && vis[end + 1]) ++end;
      if (end - k > best_hi - best_lo) {
        best_lo = k;
        best_hi = end;
      }
      k = end + 1;
    }
    if (best_lo < 0 || best_hi == best_lo) continue;

    auto refine = [&](double inside, double outside) {
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (inside + outside);
        (visible(scene, at(mid)) ? inside : outside) = mid;
      }
      return inside;
    };
    const double step = 1.0 / (kSamples - 1);
    const double t0 = best_lo == 0 ? 0.0 : refine(best_lo * step, (best_lo - 1) * step);
    const double t1 = best_hi == kSamples - 1 ? 1.0 : refine(best_hi * step, (best_hi + 1) * step);

    Point2 p0 = project(scene.to_camera(at(t0)), scene.rig);
    Point2 p1 = project(scene.to_camera(at(t1)), scene.rig);
    for (Point2* p : {&p0, &p1}) {
      p->x = std::clamp(p->x, 0.0, width);
      p->y = std::clamp(p->y, 0.0, height);
    }
    if (p0.x > p1.x) std::swap(p0, p1);
    if (std::hypot(p1.x - p0.x, p1.y - p0.y) < 1e-6) continue;
    labels.push_back({e.cls, p0.x, p0.y, p1.x, p1.y});
  }
  return labels;
}

DetectionGrid perturb_grid(const DetectionGrid& gt, double endpoint_noise_px, double drop_rate,
                           std::uint64_t rng_seed) {
  if (endpoint_noise_px < 0.0) throw std::invalid_argument("endpoint noise must be >= 0");
  if (drop_rate < 0.0 || drop_rate >= 1.0) throw std::invalid_argument("drop rate must be in [0,1)");
  DetectionGrid out = gt;
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double nx = endpoint_noise_px / gt.cell_width();
  const double ny = endpoint_noise_px / gt.cell_height();
  for (auto& cell : out.cells()) {
    if (cell.conf <= 0.0) continue;
    if (unit(rng) < drop_rate) {
      cell = CellPrediction{};
      continue;
    }
    if (endpoint_noise_px == 0.0) continue;
    const bool duplicated = std::equal(cell.coords.begin(), cell.coords.begin() + 4,
                                       cell.coords.begin() + 4);
    const int count = duplicated ? 4 : 8;
    for (int k = 0; k < count; ++k) {
      const double amp = k % 2 == 0 ? nx : ny;
      cell.coords[k] = std::clamp(cell.coords[k] + amp * (2.0 * unit(rng) - 1.0), 0.0, 1.0);
    }
    if (duplicated) std::copy_n(cell.coords.begin(), 4, cell.coords.begin() + 4);
  }
  return out;
}

}  // namespace stairkit
