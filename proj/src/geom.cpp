#include "stairkit/geom.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "stairkit/error.hpp"
#include "stairkit/log.hpp"

namespace stairkit {

LineSamples sample_line_points(const StairLine2D& line, int image_width) {
  LineSamples out;
  const double mid = 0.5 * image_width;
  double start, step;
  if (line.x1 < mid && mid < line.x2) {
    step = std::min(mid - line.x1, line.x2 - mid) / 4.0;
    start = mid - 4.0 * step;
  } else {
    out.fallback = true;
    step = (line.x2 - line.x1) / 8.0;
    start = line.x1;
  }
  for (int m = 0; m < 9; ++m) {
    const double x = start + m * step;
    out.points[m] = {x, line.y_at(x)};
  }
  return out;
}

std::optional<Vec3> backproject(Point2 pixel, double depth, const CameraRig& rig) {
  if (!std::isfinite(depth) || depth <= 0.0) return std::nullopt;
  return Vec3((pixel.x - rig.cx) * depth / rig.fx, (pixel.y - rig.cy) * depth / rig.fy, depth);
}

Point2 project(const Vec3& p, const CameraRig& rig) {
  return {rig.fx * p.x() / p.z() + rig.cx, rig.fy * p.y() / p.z() + rig.cy};
}

namespace {

// Least squares of v on t; returns slope, intercept and the residual sum of squares.
struct Simple {
  double slope, intercept, rss;
};

Simple regress(std::span<const Vec3> pts, int t_axis, int v_axis) {
  const double n = static_cast<double>(pts.size());
  double mt = 0.0, mv = 0.0;
  for (const auto& p : pts) {
    mt += p[t_axis];
    mv += p[v_axis];
  }
  mt /= n;
  mv /= n;
  double stt = 0.0, stv = 0.0, scale = 0.0;
  for (const auto& p : pts) {
    stt += (p[t_axis] - mt) * (p[t_axis] - mt);
    stv += (p[t_axis] - mt) * (p[v_axis] - mv);
    scale += p[t_axis] * p[t_axis];
  }
  if (stt <= 1e-24 * std::max(1.0, scale)) throw DegenerateError("3D line fit has zero spread");
  const double slope = stv / stt;
  const double intercept = mv - slope * mt;
  double rss = 0.0;
  for (const auto& p : pts) {
    const double r = p[v_axis] - (slope * p[t_axis] + intercept);
    rss += r * r;
  }
  return {slope, intercept, rss};
}

}  // namespace

Line3DParams fit_line_3d(std::span<const Vec3> points) {
  if (points.size() < 2) throw DegenerateError("3D line fit needs at least two points");
  const Simple x = regress(points, 2, 0);
  const Simple y = regress(points, 2, 1);
  return {x.slope, x.intercept, y.slope, y.intercept,
          std::sqrt((x.rss + y.rss) / static_cast<double>(points.size()))};
}

Line3DAlongX fit_line_3d_along_x(std::span<const Vec3> points) {
  if (points.size() < 2) throw DegenerateError("3D line fit needs at least two points");
  const Simple z = regress(points, 0, 2);
  const Simple y = regress(points, 0, 1);
  return {z.slope, z.intercept, y.slope, y.intercept,
          std::sqrt((z.rss + y.rss) / static_cast<double>(points.size()))};
}

Vec3 yoz_intersection(const Line3DParams& l) {
  if (std::abs(l.k1) < 1e-9) throw DegenerateError("line is parallel to the camera YOZ plane");
  return {0.0, (l.k1 * l.b2 - l.k2 * l.b1) / l.k1, -l.b1 / l.k1};
}

Vec3 yoz_intersection(const Line3DAlongX& l) { return {0.0, l.by, l.bz}; }

Attitude attitude_from_gravity(const Vec3& g) {
  const double n = g.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DegenerateError("gravity vector has zero length");
  Attitude a;
  a.roll = std::asin(std::clamp(-g.x() / n, -1.0, 1.0));
  a.pitch = std::asin(std::clamp(g.z() / n, -1.0, 1.0));
  return a;
}

Vec3 gravity_from_attitude(double pitch, double roll, double magnitude) {
  const double sr = std::sin(roll), sp = std::sin(pitch);
  const double rest = 1.0 - sr * sr - sp * sp;
  if (rest < 0.0) throw DegenerateError("pitch/roll combination has no gravity direction");
  return magnitude * Vec3(-sr, std::sqrt(rest), sp);
}

Mat3 camera_to_world_rotation(double pitch, double roll) {
  if (std::abs(std::cos(pitch)) < 1e-12) throw DegenerateError("pitch at +-90 degrees");
  const Vec3 down = gravity_from_attitude(pitch, roll, 1.0);
  const Vec3 up = -down;
  const Vec3 forward(0.0, 0.0, 1.0);
  Vec3 z_axis = forward - forward.dot(up) * up;
  const double zn = z_axis.norm();
  if (zn < 1e-12) throw DegenerateError("optical axis is vertical");
  z_axis /= zn;
  const Vec3 x_axis = up.cross(z_axis);
  Mat3 r;
  r.row(0) = x_axis.transpose();
  r.row(1) = up.transpose();
  r.row(2) = z_axis.transpose();
  return r;
}

Vec3 camera_to_world(const Vec3& p, double pitch, double roll) {
  return camera_to_world_rotation(pitch, roll) * p;
}

double yaw_from_line(const Vec3& p1, const Vec3& p2) {
  double dx = p2.x() - p1.x();
  double dz = p2.z() - p1.z();
  const double scale = std::max({1.0, p1.norm(), p2.norm()});
  if ((p2 - p1).norm() <= 1e-12 * scale) throw DegenerateError("coincident points");
  if (std::hypot(dx, dz) <= 1e-12 * scale) throw DegenerateError("line is vertical");
  if (dx < 0.0 || (dx == 0.0 && dz < 0.0)) {
    dx = -dx;
    dz = -dz;
  }
  return std::atan2(dz, dx);
}

double mean_yaw(std::span<const double> yaws) {
  if (yaws.empty()) throw InsufficientDataError("no yaw estimates");
  double s = 0.0;
  for (double y : yaws) s += y;
  return s / static_cast<double>(yaws.size());
}

Vec3 world_to_stair(const Vec3& p, double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return {p.x() * c + p.z() * s, p.y(), -p.x() * s + p.z() * c};
}

const char* to_string(StairDirection d) {
  return d == StairDirection::Ascending ? "ascending" : "descending";
}

DirectionDecision classify_direction(std::span<const std::optional<LineClass>> classes,
                                     std::span<const Vec3> stair_points) {
  if (classes.empty()) throw std::invalid_argument("classify_direction: no lines");
  bool any_concave = false, all_convex = true;
  for (const auto& c : classes) {
    if (c == LineClass::Concave) any_concave = true;
    if (c != LineClass::Convex) all_convex = false;
  }
  if (any_concave) return {StairDirection::Ascending, false};
  if (all_convex) return {StairDirection::Descending, false};

  if (stair_points.size() < 2)
    throw InsufficientDataError("direction heuristic needs at least two edge points");
  double mz = 0.0, my = 0.0;
  for (const auto& p : stair_points) {
    mz += p.z();
    my += p.y();
  }
  mz /= static_cast<double>(stair_points.size());
  my /= static_cast<double>(stair_points.size());
  double szz = 0.0, szy = 0.0;
  for (const auto& p : stair_points) {
    szz += (p.z() - mz) * (p.z() - mz);
    szy += (p.z() - mz) * (p.y() - my);
  }
  if (szz <= 0.0) throw DegenerateError("edge points share one depth");
  return {szy > 0.0 ? StairDirection::Ascending : StairDirection::Descending, true};
}

StepMeasurements measure_steps(std::span<const Vec3> edge_points, double omega) {
  if (edge_points.size() < 2) throw InsufficientDataError("need at least two edge points");
  StepMeasurements out;
  for (std::size_t i = 0; i + 1 < edge_points.size(); ++i) {
    const double h = std::abs(edge_points[i + 1].y() - edge_points[i].y());
    const double w = std::abs(edge_points[i + 1].z() - edge_points[i].z());
    if (h >= omega) out.heights.push_back(h);
    if (w >= omega) out.widths.push_back(w);
  }
  const std::size_t n = std::min(out.heights.size(), out.widths.size());
  for (std::size_t i = 0; i < n; ++i) out.steps.push_back({out.widths[i], out.heights[i]});
  return out;
}

double profile_coordinate(const Vec3& p, StairDirection direction) {
  return p.z() + (direction == StairDirection::Ascending ? p.y() : -p.y());
}

namespace {

struct PlaneSample {
  double u, v, z;
};

// Fits 1/z = a u + b v + c and returns the extrapolated depth at (u, v).
std::optional<double> plane_depth(std::vector<PlaneSample>& pts, double u, double v) {
  for (int pass = 0; pass < 2; ++pass) {
    if (pts.size() < 6) return std::nullopt;
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    // Centered on the query pixel for conditioning.
    for (const auto& p : pts) {
      const Eigen::Vector3d row(p.u - u, p.v - v, 1.0);
      ata += row * row.transpose();
      atb += row / p.z;
    }
    Eigen::LDLT<Eigen::Matrix3d> ldlt(ata);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
    if (std::abs(ata.determinant()) < 1e-6 * std::pow(ata.trace(), 3) / 27.0) return std::nullopt;
    const Eigen::Vector3d coef = ldlt.solve(atb);
    if (pass == 1) {
      if (!(coef[2] > 0.0)) return std::nullopt;
      return 1.0 / coef[2];
    }
    std::vector<double> res;
    res.reserve(pts.size());
    for (const auto& p : pts) {
      const double inv = coef[0] * (p.u - u) + coef[1] * (p.v - v) + coef[2];
      res.push_back(inv > 0.0 ? std::abs(1.0 / inv - p.z) : INFINITY);
    }
    std::vector<double> sorted = res;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double thr = std::max(4.0 * 1.4826 * sorted[sorted.size() / 2], 1e-9);
    std::vector<PlaneSample> kept;
    for (std::size_t k = 0; k < pts.size(); ++k)
      if (res[k] <= thr) kept.push_back(pts[k]);
    if (kept.size() == pts.size()) {
      if (!(coef[2] > 0.0)) return std::nullopt;
      return 1.0 / coef[2];
    }
    pts = std::move(kept);
  }
  return std::nullopt;
}

}  // namespace

std::optional<double> depth_at_line_sample(const DepthMap& depth, Point2 pixel, const LineFit2& line,
                                           int window_radius, double side_margin_px) {
  const int cu = static_cast<int>(std::floor(pixel.x));
  const int cv = static_cast<int>(std::floor(pixel.y));
  const double norm = std::sqrt(1.0 + line.k * line.k);
  std::vector<PlaneSample> above, below;
  for (int r = cv - window_radius; r <= cv + window_radius; ++r) {
    if (r < 0 || r >= depth.height) continue;
    for (int c = cu - window_radius; c <= cu + window_radius; ++c) {
      if (c < 0 || c >= depth.width) continue;
      const double z = depth.at(c, r);
      if (!(z > 0.0) || !std::isfinite(z)) continue;
      const double u = c + 0.5, v = r + 0.5;
      const double side = (v - (line.k * u + line.b)) / norm;
      if (std::abs(side) < side_margin_px) continue;
      (side < 0.0 ? above : below).push_back({u, v, z});
    }
  }
  std::optional<double> best;
  for (auto* pts : {&above, &below})
    if (auto z = plane_depth(*pts, pixel.x, pixel.y); z && (!best || *z < *best)) best = z;
  if (best) return best;

  // Nearest valid pixel in the 3x3 neighbourhood.
  double best_d = INFINITY;
  for (int r = cv - 1; r <= cv + 1; ++r)
    for (int c = cu - 1; c <= cu + 1; ++c) {
      if (r < 0 || r >= depth.height || c < 0 || c >= depth.width) continue;
      const double z = depth.at(c, r);
      if (!(z > 0.0) || !std::isfinite(z)) continue;
      const double d = std::hypot(c + 0.5 - pixel.x, r + 0.5 - pixel.y);
      if (d < best_d) {
        best_d = d;
        best = z;
      }
    }
  return best;
}

namespace {

struct LineAnchor {
  Vec3 anchor;    // camera frame, on x = 0
  Vec3 end_a, end_b;  // two points on the fitted line, camera frame
  std::optional<LineClass> cls;
};

}  // namespace

StairMeasurement measure_pipeline(const DetectionGrid& grid, const DepthMap& depth,
                                  const CameraRig& rig, const PipelineParams& params) {
  if (depth.width != grid.image_dims().width || depth.height != grid.image_dims().height ||
      depth.data.size() != static_cast<std::size_t>(depth.width) * depth.height)
    throw PipelineError("input", ErrorKind::Input, "depth map size does not match the grid image");
  if (!(rig.fx > 0.0) || !(rig.fy > 0.0))
    throw PipelineError("input", ErrorKind::Input, "focal lengths must be positive");

  StairMeasurement m;
  Mat3 to_world;
  try {
    const Attitude att = attitude_from_gravity(rig.gravity);
    m.pitch = att.pitch;
    m.roll = att.roll;
    to_world = camera_to_world_rotation(att.pitch, att.roll);
  } catch (const DegenerateError& e) {
    throw PipelineError("attitude", ErrorKind::Degenerate, e.what());
  }

  std::vector<StairLine2D> lines;
  try {
    lines = cluster_grid(grid, params.cluster);
  } catch (const std::invalid_argument& e) {
    throw PipelineError("cluster", ErrorKind::Input, e.what());
  }
  m.lines_detected = static_cast<int>(lines.size());
  if (lines.empty()) {
    m.diagnostics.push_back("no stair lines detected");
    return m;
  }

  std::vector<LineAnchor> anchors;
  int dropped_depth = 0, dropped_fit = 0;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto& line = lines[li];
    if (std::hypot(line.x2 - line.x1, line.y2 - line.y1) < params.min_line_length_px) {
      ++dropped_fit;
      std::ostringstream tag;
      tag << "line " << li << " (b=" << line.b << "): shorter than " << params.min_line_length_px
          << " px, dropped";
      m.diagnostics.push_back(tag.str());
      continue;
    }
    const LineSamples samples = sample_line_points(line, depth.width);
    const LineFit2 fit2{line.k, line.b};
    std::vector<Vec3> pts;
    for (const auto& px : samples.points) {
      // The depth window must fit inside the image, else one side of the edge is cut off.
      const double edge = params.depth_window_radius + 1.0;
      if (px.x < edge || px.y < edge || px.x >= depth.width - edge || px.y >= depth.height - edge)
        continue;
      const auto z = depth_at_line_sample(depth, px, fit2, params.depth_window_radius,
                                          params.side_margin_px);
      if (!z) continue;
      if (auto p = backproject(px, *z, rig)) pts.push_back(*p);
    }
    std::ostringstream tag;
    tag << "line " << li << " (b=" << line.b << ")";
    if (static_cast<int>(pts.size()) < params.min_valid_samples) {
      ++dropped_depth;
      m.diagnostics.push_back(tag.str() + ": " + std::to_string(9 - pts.size()) +
                              " of 9 samples in depth holes or at the border, dropped");
      continue;
    }

    double mx = 0.0, mz = 0.0;
    for (const auto& p : pts) {
      mx += p.x();
      mz += p.z();
    }
    mx /= static_cast<double>(pts.size());
    mz /= static_cast<double>(pts.size());
    double sxx = 0.0, szz = 0.0, xmin = INFINITY, xmax = -INFINITY, zmin = INFINITY,
           zmax = -INFINITY;
    for (const auto& p : pts) {
      sxx += (p.x() - mx) * (p.x() - mx);
      szz += (p.z() - mz) * (p.z() - mz);
      xmin = std::min(xmin, p.x());
      xmax = std::max(xmax, p.x());
      zmin = std::min(zmin, p.z());
      zmax = std::max(zmax, p.z());
    }

    LineAnchor a;
    a.cls = line.cls;
    double residual = 0.0;
    try {
      if (szz > sxx) {
        const Line3DParams l = fit_line_3d(pts);
        a.anchor = yoz_intersection(l);
        a.end_a = Vec3(l.k1 * zmin + l.b1, l.k2 * zmin + l.b2, zmin);
        a.end_b = Vec3(l.k1 * zmax + l.b1, l.k2 * zmax + l.b2, zmax);
        residual = l.residual;
      } else {
        const Line3DAlongX l = fit_line_3d_along_x(pts);
        a.anchor = yoz_intersection(l);
        a.end_a = Vec3(xmin, l.ky * xmin + l.by, l.kz * xmin + l.bz);
        a.end_b = Vec3(xmax, l.ky * xmax + l.by, l.kz * xmax + l.bz);
        residual = l.residual;
      }
    } catch (const DegenerateError& e) {
      ++dropped_fit;
      m.diagnostics.push_back(tag.str() + ": " + e.what() + ", dropped");
      continue;
    }
    if (residual > params.max_fit_rms) {
      ++dropped_fit;
      m.diagnostics.push_back(tag.str() + ": 3D fit residual " + std::to_string(residual) +
                              " m, dropped");
      continue;
    }
    anchors.push_back(a);
  }
  m.lines_used = static_cast<int>(anchors.size());
  for (const auto& d : m.diagnostics) log::info(d);

  if (anchors.empty()) {
    if (dropped_depth > 0 && dropped_fit == 0)
      throw PipelineError("depth", ErrorKind::InsufficientData,
                          "insufficient depth: every line lost too many samples to holes or the image border");
    throw PipelineError("fit_line_3d", ErrorKind::Degenerate, "no line produced a usable 3D fit");
  }

  for (const auto& a : anchors) {
    try {
      m.line_yaws.push_back(yaw_from_line(to_world * a.end_a, to_world * a.end_b));
    } catch (const DegenerateError& e) {
      m.diagnostics.push_back(std::string("yaw: ") + e.what());
    }
  }
  if (m.line_yaws.empty()) throw PipelineError("yaw", ErrorKind::Degenerate, "no usable yaw");
  m.yaw = mean_yaw(m.line_yaws);

  std::vector<Vec3> stair_pts;
  std::vector<std::optional<LineClass>> classes;
  for (const auto& a : anchors) {
    stair_pts.push_back(world_to_stair(to_world * a.anchor, m.yaw));
    classes.push_back(a.cls);
  }

  DirectionDecision dir;
  try {
    dir = classify_direction(classes, stair_pts);
  } catch (const InsufficientDataError& e) {
    throw PipelineError("direction", ErrorKind::InsufficientData, e.what());
  } catch (const DegenerateError& e) {
    throw PipelineError("direction", ErrorKind::Degenerate, e.what());
  }
  m.direction = dir.direction;
  m.direction_heuristic = dir.heuristic;

  std::stable_sort(stair_pts.begin(), stair_pts.end(), [&](const Vec3& l, const Vec3& r) {
    return profile_coordinate(l, dir.direction) < profile_coordinate(r, dir.direction);
  });
  m.edge_points = stair_pts;

  StepMeasurements steps;
  try {
    steps = measure_steps(stair_pts, params.omega);
  } catch (const InsufficientDataError& e) {
    throw PipelineError("measure_steps", ErrorKind::InsufficientData, e.what());
  }
  m.steps = std::move(steps.steps);
  if (params.max_steps >= 0 && static_cast<int>(m.steps.size()) > params.max_steps)
    m.steps.resize(params.max_steps);
  return m;
}

}  // namespace stairkit
