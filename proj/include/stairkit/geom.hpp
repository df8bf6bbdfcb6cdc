#pragma once

// Metric stair geometry from clustered 2D lines, an aligned depth map and the
// IMU gravity vector: sampling, pinhole backprojection, 3D line fitting, the
// camera -> world -> stair frame chain, and per-step width/height.

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stairkit/cluster.hpp"
#include "stairkit/grid.hpp"

namespace stairkit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Pinhole intrinsics plus the gravity vector measured in the camera frame
// (x right, y down, z forward; a level camera reads (0, +g, 0)).
struct CameraRig {
  double fx = 460.0, fy = 460.0;
  double cx = 256.0, cy = 256.0;
  Vec3 gravity{0.0, 9.81, 0.0};
  ImageDims image{};
};

struct Attitude {
  double pitch = 0.0;
  double roll = 0.0;
  double yaw = 0.0;
};

// x = k1 z + b1, y = k2 z + b2.
struct Line3DParams {
  double k1 = 0.0, b1 = 0.0, k2 = 0.0, b2 = 0.0;
  double residual = 0.0;  // RMS of the two regressions
};

// z = kz x + bz, y = ky x + by. Used when a line is closer to parallel with the image plane.
struct Line3DAlongX {
  double kz = 0.0, bz = 0.0, ky = 0.0, by = 0.0;
  double residual = 0.0;
};

// Row-major depth in meters; 0 marks a hole.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  DepthMap() = default;
  DepthMap(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0.0f) {}
  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

struct LineSamples {
  std::array<Point2, 9> points{};
  bool fallback = false;  // line did not straddle the middle axis
};

LineSamples sample_line_points(const StairLine2D& line, int image_width);

// Empty when depth is not a positive finite number.
std::optional<Vec3> backproject(Point2 pixel, double depth, const CameraRig& rig);
Point2 project(const Vec3& p, const CameraRig& rig);

Line3DParams fit_line_3d(std::span<const Vec3> points);
Line3DAlongX fit_line_3d_along_x(std::span<const Vec3> points);

// Crossing of the fitted line with the camera x = 0 plane.
Vec3 yoz_intersection(const Line3DParams& line);
Vec3 yoz_intersection(const Line3DAlongX& line);

Attitude attitude_from_gravity(const Vec3& gravity);
// Inverse of attitude_from_gravity for |roll|, |pitch| inside the arcsin range.
Vec3 gravity_from_attitude(double pitch, double roll, double magnitude = 9.81);

// Rotation taking camera coordinates to the gravity-aligned world frame
// (Y up, Z the horizontal projection of the optical axis, X = Y x Z).
Mat3 camera_to_world_rotation(double pitch, double roll);
Vec3 camera_to_world(const Vec3& p, double pitch, double roll);

// Yaw of a stair line in the world frame, in (-pi/2, pi/2].
double yaw_from_line(const Vec3& p1, const Vec3& p2);
double mean_yaw(std::span<const double> yaws);
Vec3 world_to_stair(const Vec3& p, double yaw);

enum class StairDirection { Ascending, Descending };
const char* to_string(StairDirection d);

struct DirectionDecision {
  StairDirection direction = StairDirection::Ascending;
  bool heuristic = false;  // decided from the depth profile, not line classes
};

// Concave lines present -> ascending; all convex -> descending; otherwise the
// sign of the ys-on-zs slope over the stair-frame anchors decides.
DirectionDecision classify_direction(std::span<const std::optional<LineClass>> classes,
                                     std::span<const Vec3> stair_points = {});

struct StepSize {
  double width = 0.0;
  double height = 0.0;
};

struct StepMeasurements {
  std::vector<double> heights;  // after the omega filter, near -> far
  std::vector<double> widths;
  std::vector<StepSize> steps;  // width_i paired with height_i
};

StepMeasurements measure_steps(std::span<const Vec3> edge_points, double omega = 0.05);

// Sort key placing stair edge anchors near -> far along the staircase profile.
double profile_coordinate(const Vec3& stair_point, StairDirection direction);

struct PipelineParams {
  ClusterParams cluster{};
  double omega = 0.05;
  int max_steps = 3;
  int min_valid_samples = 4;
  int depth_window_radius = 4;
  double side_margin_px = 1.0;
  double max_fit_rms = 0.03;
  double min_line_length_px = 64.0;  // shorter lines extrapolate poorly to x = 0
};

struct StairMeasurement {
  std::optional<StairDirection> direction;
  bool direction_heuristic = false;
  std::vector<StepSize> steps;
  std::vector<Vec3> edge_points;  // stair frame, near -> far
  std::vector<double> line_yaws;
  double yaw = 0.0, pitch = 0.0, roll = 0.0;
  int lines_detected = 0;
  int lines_used = 0;
  std::vector<std::string> diagnostics;
};

enum class ErrorKind { Input, Degenerate, InsufficientData };

class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string stage, ErrorKind kind, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), kind_(kind) {}
  const std::string& stage() const { return stage_; }
  ErrorKind kind() const { return kind_; }

 private:
  std::string stage_;
  ErrorKind kind_;
};

// Depth at a subpixel sample on a stair line: a local inverse-depth plane is fit
// on each side of the line and the nearer extrapolation is taken; falls back to
// the nearest valid pixel in the 3x3 neighbourhood.
std::optional<double> depth_at_line_sample(const DepthMap& depth, Point2 pixel, const LineFit2& line,
                                           int window_radius = 4, double side_margin_px = 1.0);

StairMeasurement measure_pipeline(const DetectionGrid& grid, const DepthMap& depth,
                                  const CameraRig& rig, const PipelineParams& params = {});

}  // namespace stairkit
