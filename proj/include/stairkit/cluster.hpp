#pragma once

// Middle-out least-squares clustering of positive grid cells into whole stair
// lines described by (x1, y1, x2, y2, k, b).

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "stairkit/grid.hpp"

namespace stairkit {

struct Segment2 {
  Point2 left;
  Point2 right;
  friend bool operator==(const Segment2&, const Segment2&) = default;
};

struct LineFit2 {
  double k = 0.0;  // slope
  double b = 0.0;  // intercept, px
};

// Ordinary least squares of y on x. Throws DegenerateError for fewer than two
// points or zero spread in x.
LineFit2 fit_line_2d(std::span<const Point2> points);

struct StairLine2D {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;
  double k = 0.0, b = 0.0;
  std::vector<Segment2> members;
  std::optional<LineClass> cls;  // nullopt: unknown

  double y_at(double x) const { return k * x + b; }
  std::vector<Point2> member_points() const;
};

struct ClusterParams {
  double assign_tolerance = 10.0;  // tau, px
  double dedupe_tolerance = 4.0;   // epsilon, px
  std::pair<int, int> seed_columns{7, 8};
  double conf_threshold = 0.5;
  // Final pass joining lines whose members all lie within tau of a joint fit.
  bool merge_split_lines = true;
};

// Both endpoint pairs of a cell in pixels, or only the first when the mean
// endpoint distance between the pairs is below dedupe_tolerance.
std::vector<Segment2> select_cell_segments(const DetectionGrid& grid, int i, int j,
                                           double dedupe_tolerance);

// Mean vertical distance of the segment endpoints to y = kx + b.
double vertical_distance(const Segment2& s, const LineFit2& line);

std::vector<StairLine2D> cluster_grid(const DetectionGrid& grid, const ClusterParams& params = {});

}  // namespace stairkit
