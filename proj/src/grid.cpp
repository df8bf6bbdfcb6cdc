#include "stairkit/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <system_error>

#include "stairkit/error.hpp"

namespace stairkit {

DetectionGrid::DetectionGrid(GridDims dims, ImageDims image) : dims_(dims), image_(image) {
  if (dims.rows <= 0 || dims.cols <= 0) throw std::invalid_argument("grid dims must be positive");
  if (image.width <= 0 || image.height <= 0)
    throw std::invalid_argument("image dims must be positive");
  cells_.resize(static_cast<std::size_t>(dims.rows) * dims.cols);
}

CellPrediction& DetectionGrid::at(int i, int j) {
  if (i < 0 || i >= dims_.rows || j < 0 || j >= dims_.cols)
    throw std::out_of_range("cell (" + std::to_string(i) + "," + std::to_string(j) +
                            ") outside grid");
  return cells_[static_cast<std::size_t>(i) * dims_.cols + j];
}

const CellPrediction& DetectionGrid::at(int i, int j) const {
  return const_cast<DetectionGrid*>(this)->at(i, j);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\f\v");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto start = s.find_first_not_of(" \t\r\f\v", pos);
    if (start == std::string_view::npos) break;
    auto end = s.find_first_of(" \t\r\f\v", start);
    if (end == std::string_view::npos) end = s.size();
    out.push_back(s.substr(start, end - start));
    pos = end;
  }
  return out;
}

double parse_number(std::string_view tok, int line) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ParseError("non-numeric field '" + std::string(tok) + "'", line);
  return v;
}

void append_number(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

struct Chord {
  Point2 a, b;
  double length = 0.0;
};

}  // namespace

std::vector<StairLineLabel> parse_labels(std::string_view text) {
  std::vector<StairLineLabel> labels;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = trim(text.substr(pos, nl - pos));
    ++line_no;
    pos = nl + 1;
    if (line.empty()) continue;

    const auto fields = split_ws(line);
    if (fields.size() != 5)
      throw ParseError("expected 5 fields, got " + std::to_string(fields.size()), line_no);
    const double cls = parse_number(fields[0], line_no);
    if (cls != 0.0 && cls != 1.0) throw ParseError("class must be 0 or 1", line_no);

    StairLineLabel label;
    label.cls = cls == 0.0 ? LineClass::Convex : LineClass::Concave;
    label.x1 = parse_number(fields[1], line_no);
    label.y1 = parse_number(fields[2], line_no);
    label.x2 = parse_number(fields[3], line_no);
    label.y2 = parse_number(fields[4], line_no);
    if (label.x1 > label.x2) throw ParseError("left endpoint x1 exceeds right endpoint x2", line_no);
    if (label.x1 < 0.0 || label.y1 < 0.0 || label.y2 < 0.0)
      throw ParseError("negative pixel coordinate", line_no);
    labels.push_back(label);
  }
  return labels;
}

std::string format_labels(const std::vector<StairLineLabel>& labels) {
  std::string out;
  for (const auto& l : labels) {
    out += l.cls == LineClass::Convex ? '0' : '1';
    for (double v : {l.x1, l.y1, l.x2, l.y2}) {
      out += ' ';
      append_number(out, v);
    }
    out += '\n';
  }
  return out;
}

bool clip_segment(Point2 a, Point2 b, double x0, double y0, double x1, double y1, Point2& out_a,
                  Point2& out_b) {
  // Liang-Barsky.
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  double t0 = 0.0, t1 = 1.0;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - x0, x1 - a.x, a.y - y0, y1 - a.y};
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return false;
      continue;
    }
    const double t = q[k] / p[k];
    if (p[k] < 0.0) {
      if (t > t1) return false;
      t0 = std::max(t0, t);
    } else {
      if (t < t0) return false;
      t1 = std::min(t1, t);
    }
  }
  out_a = {a.x + t0 * dx, a.y + t0 * dy};
  out_b = {a.x + t1 * dx, a.y + t1 * dy};
  // Pin coordinates that landed on the box to the exact border value.
  auto snap = [&](Point2& p, double t) {
    if (dx != 0.0 && t > 0.0 && t < 1.0) {
      if (std::abs(p.x - x0) < 1e-9) p.x = x0;
      if (std::abs(p.x - x1) < 1e-9) p.x = x1;
    }
    if (dy != 0.0 && t > 0.0 && t < 1.0) {
      if (std::abs(p.y - y0) < 1e-9) p.y = y0;
      if (std::abs(p.y - y1) < 1e-9) p.y = y1;
    }
  };
  snap(out_a, t0);
  snap(out_b, t1);
  return true;
}

GridEncoding labels_to_grid(const std::vector<StairLineLabel>& labels, GridDims dims,
                            ImageDims image) {
  GridEncoding enc{DetectionGrid(dims, image), 0};
  DetectionGrid& grid = enc.grid;
  const double cw = grid.cell_width();
  const double ch = grid.cell_height();
  std::vector<std::vector<Chord>> chords(grid.cells().size());

  for (const auto& l : labels) {
    for (double v : {l.x1, l.x2})
      if (v < 0.0 || v > image.width) throw std::invalid_argument("label outside image width");
    for (double v : {l.y1, l.y2})
      if (v < 0.0 || v > image.height) throw std::invalid_argument("label outside image height");

    const Point2 a{l.x1, l.y1};
    const Point2 b{l.x2, l.y2};
    const int j_lo = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) / cw)) - 1);
    const int j_hi = std::min(dims.cols - 1, static_cast<int>(std::floor(std::max(a.x, b.x) / cw)));
    const int i_lo = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) / ch)) - 1);
    const int i_hi = std::min(dims.rows - 1, static_cast<int>(std::floor(std::max(a.y, b.y) / ch)));
    for (int i = i_lo; i <= i_hi; ++i) {
      for (int j = j_lo; j <= j_hi; ++j) {
        const double bx0 = j * cw, by0 = i * ch, bx1 = (j + 1) * cw, by1 = (i + 1) * ch;
        Point2 ca, cb;
        if (!clip_segment(a, b, bx0, by0, bx1, by1, ca, cb)) continue;
        const double len = std::hypot(cb.x - ca.x, cb.y - ca.y);
        if (len <= 1e-9) continue;
        // A chord lying on a shared border belongs to the upper/left cell.
        if (i > 0 && ca.y == by0 && cb.y == by0) continue;
        if (j > 0 && ca.x == bx0 && cb.x == bx0) continue;
        if (ca.x > cb.x || (ca.x == cb.x && ca.y > cb.y)) std::swap(ca, cb);
        chords[static_cast<std::size_t>(i) * dims.cols + j].push_back({ca, cb, len});
      }
    }
  }

  for (int i = 0; i < dims.rows; ++i) {
    for (int j = 0; j < dims.cols; ++j) {
      auto& list = chords[static_cast<std::size_t>(i) * dims.cols + j];
      if (list.empty()) continue;
      if (list.size() > 2) {
        ++enc.overfull_cells;
        std::stable_sort(list.begin(), list.end(),
                         [](const Chord& l, const Chord& r) { return l.length > r.length; });
        list.resize(2);
      }
      std::stable_sort(list.begin(), list.end(), [](const Chord& l, const Chord& r) {
        const double ly = l.a.y + l.b.y, ry = r.a.y + r.b.y;
        if (ly != ry) return ly < ry;
        return l.a.x + l.b.x < r.a.x + r.b.x;
      });
      CellPrediction& cell = grid.at(i, j);
      cell.conf = 1.0;
      for (int slot = 0; slot < 2; ++slot) {
        const Chord& c = list[std::min<std::size_t>(slot, list.size() - 1)];
        const Point2 na = pixel_to_cell(grid, i, j, c.a);
        const Point2 nb = pixel_to_cell(grid, i, j, c.b);
        cell.coords[4 * slot + 0] = na.x;
        cell.coords[4 * slot + 1] = na.y;
        cell.coords[4 * slot + 2] = nb.x;
        cell.coords[4 * slot + 3] = nb.y;
      }
    }
  }
  return enc;
}

Point2 cell_to_pixel(const DetectionGrid& grid, int i, int j, Point2 normalized) {
  if (i < 0 || i >= grid.rows() || j < 0 || j >= grid.cols())
    throw std::out_of_range("cell index outside grid");
  const double cw = grid.cell_width();
  const double ch = grid.cell_height();
  return {j * cw + normalized.x * cw, i * ch + normalized.y * ch};
}

Point2 pixel_to_cell(const DetectionGrid& grid, int i, int j, Point2 pixel) {
  if (i < 0 || i >= grid.rows() || j < 0 || j >= grid.cols())
    throw std::out_of_range("cell index outside grid");
  const double cw = grid.cell_width();
  const double ch = grid.cell_height();
  return {(pixel.x - j * cw) / cw, (pixel.y - i * ch) / ch};
}

std::vector<IndexedCell> threshold_cells(const DetectionGrid& grid, double conf_threshold) {
  std::vector<IndexedCell> out;
  for (int i = 0; i < grid.rows(); ++i)
    for (int j = 0; j < grid.cols(); ++j)
      if (const auto& c = grid.at(i, j); c.conf >= conf_threshold) out.push_back({i, j, c});
  return out;
}

}  // namespace stairkit
