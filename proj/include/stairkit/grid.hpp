#pragma once

// Detection-grid data model: the 32x16 cell output of the stair detector, the
// "cls x1 y1 x2 y2" label format, and conversions between cell-normalized and
// pixel coordinates.

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace stairkit {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

enum class LineClass { Convex = 0, Concave = 1 };

// One annotated stair line in image pixels, left endpoint first.
struct StairLineLabel {
  LineClass cls = LineClass::Convex;
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;
  friend bool operator==(const StairLineLabel&, const StairLineLabel&) = default;
};

struct ImageDims {
  int width = 512;
  int height = 512;
  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

struct GridDims {
  int rows = 32;
  int cols = 16;
  friend bool operator==(const GridDims&, const GridDims&) = default;
};

// Confidence plus two endpoint pairs (x1,y1,x2,y2) and (x3,y3,x4,y4), each
// coordinate normalized to the cell box. Odd-numbered points are left ends.
struct CellPrediction {
  double conf = 0.0;
  std::array<double, 8> coords{};

  Point2 point(int k) const { return {coords[2 * k], coords[2 * k + 1]}; }
  friend bool operator==(const CellPrediction&, const CellPrediction&) = default;
};

class DetectionGrid {
 public:
  DetectionGrid() : DetectionGrid(GridDims{}, ImageDims{}) {}
  DetectionGrid(GridDims dims, ImageDims image);

  int rows() const { return dims_.rows; }
  int cols() const { return dims_.cols; }
  GridDims dims() const { return dims_; }
  ImageDims image_dims() const { return image_; }
  double cell_width() const { return static_cast<double>(image_.width) / dims_.cols; }
  double cell_height() const { return static_cast<double>(image_.height) / dims_.rows; }

  // Bounds-checked; throws std::out_of_range.
  CellPrediction& at(int i, int j);
  const CellPrediction& at(int i, int j) const;

  std::vector<CellPrediction>& cells() { return cells_; }
  const std::vector<CellPrediction>& cells() const { return cells_; }

  bool same_shape(const DetectionGrid& other) const {
    return dims_ == other.dims_ && image_ == other.image_;
  }

  friend bool operator==(const DetectionGrid&, const DetectionGrid&) = default;

 private:
  GridDims dims_;
  ImageDims image_;
  std::vector<CellPrediction> cells_;
};

struct IndexedCell {
  int i = 0;
  int j = 0;
  CellPrediction cell;
};

// Throws ParseError carrying the 1-based line number of the offending record.
std::vector<StairLineLabel> parse_labels(std::string_view text);
std::string format_labels(const std::vector<StairLineLabel>& labels);

struct GridEncoding {
  DetectionGrid grid;
  // Cells that were crossed by more than two segments.
  int overfull_cells = 0;
};

GridEncoding labels_to_grid(const std::vector<StairLineLabel>& labels, GridDims dims = {},
                            ImageDims image = {});

// Pixel location of a cell-normalized point. Throws std::out_of_range for a bad cell.
Point2 cell_to_pixel(const DetectionGrid& grid, int i, int j, Point2 normalized);
Point2 pixel_to_cell(const DetectionGrid& grid, int i, int j, Point2 pixel);

// Cells with conf >= threshold, row-major.
std::vector<IndexedCell> threshold_cells(const DetectionGrid& grid, double conf_threshold);

// Clip segment a-b against the closed box [x0,x1]x[y0,y1]. Returns false when the
// segment misses the box; the clipped chord may still have zero length.
bool clip_segment(Point2 a, Point2 b, double x0, double y0, double x1, double y1, Point2& out_a,
                  Point2& out_b);

}  // namespace stairkit
