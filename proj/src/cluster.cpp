#include "stairkit/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "stairkit/error.hpp"

namespace stairkit {

LineFit2 fit_line_2d(std::span<const Point2> points) {
  if (points.size() < 2) throw DegenerateError("line fit needs at least two points");
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, scale = 0.0;
  for (const auto& p : points) {
    const double dx = p.x - mx;
    sxx += dx * dx;
    sxy += dx * (p.y - my);
    scale += p.x * p.x;
  }
  if (sxx <= 1e-24 * std::max(1.0, scale)) throw DegenerateError("line fit has zero x variance");
  const double k = sxy / sxx;
  return {k, my - k * mx};
}

std::vector<Point2> StairLine2D::member_points() const {
  std::vector<Point2> pts;
  pts.reserve(members.size() * 2);
  for (const auto& m : members) {
    pts.push_back(m.left);
    pts.push_back(m.right);
  }
  return pts;
}

std::vector<Segment2> select_cell_segments(const DetectionGrid& grid, int i, int j,
                                           double dedupe_tolerance) {
  const CellPrediction& cell = grid.at(i, j);
  auto seg = [&](int first) {
    Segment2 s{cell_to_pixel(grid, i, j, cell.point(first)),
               cell_to_pixel(grid, i, j, cell.point(first + 1))};
    if (s.left.x > s.right.x || (s.left.x == s.right.x && s.left.y > s.right.y))
      std::swap(s.left, s.right);
    return s;
  };
  const Segment2 a = seg(0);
  const Segment2 b = seg(2);
  const double d = 0.5 * (std::hypot(a.left.x - b.left.x, a.left.y - b.left.y) +
                          std::hypot(a.right.x - b.right.x, a.right.y - b.right.y));
  if (d < dedupe_tolerance) return {a};
  return {a, b};
}

double vertical_distance(const Segment2& s, const LineFit2& line) {
  return 0.5 * (std::abs(s.left.y - (line.k * s.left.x + line.b)) +
                std::abs(s.right.y - (line.k * s.right.x + line.b)));
}

namespace {

struct Working {
  std::vector<Segment2> members;
  LineFit2 fit;
};

LineFit2 fit_or_flat(std::span<const Point2> pts) {
  try {
    return fit_line_2d(pts);
  } catch (const DegenerateError&) {
    double my = 0.0;
    for (const auto& p : pts) my += p.y;
    return {0.0, my / static_cast<double>(pts.size())};
  }
}

LineFit2 refit(const std::vector<Segment2>& members) {
  std::vector<Point2> pts;
  pts.reserve(members.size() * 2);
  for (const auto& m : members) {
    pts.push_back(m.left);
    pts.push_back(m.right);
  }
  return fit_or_flat(pts);
}

// For the endpoint pair closest in x, the vertical gap.
double chain_gap(const Segment2& s, const Segment2& t) {
  const Point2 ps[2] = {s.left, s.right};
  const Point2 pt[2] = {t.left, t.right};
  double best_dx = INFINITY, gap = INFINITY;
  for (const auto& a : ps)
    for (const auto& b : pt)
      if (const double dx = std::abs(a.x - b.x); dx < best_dx) {
        best_dx = dx;
        gap = std::abs(a.y - b.y);
      }
  return gap;
}

double mean_signed_offset(const std::vector<Segment2>& members, const LineFit2& fit) {
  double sum = 0.0;
  for (const auto& m : members)
    sum += m.left.y + m.right.y - fit.k * (m.left.x + m.right.x) - 2.0 * fit.b;
  return sum / (2.0 * static_cast<double>(members.size()));
}

int find_root(std::vector<int>& parent, int v) {
  while (parent[v] != v) v = parent[v] = parent[parent[v]];
  return v;
}

}  // namespace

std::vector<StairLine2D> cluster_grid(const DetectionGrid& grid, const ClusterParams& params) {
  if (!(params.assign_tolerance > 0.0)) throw std::invalid_argument("assign tolerance must be > 0");
  if (params.dedupe_tolerance < 0.0) throw std::invalid_argument("dedupe tolerance must be >= 0");
  const int cols = grid.cols();
  const auto [seed_a, seed_b] = params.seed_columns;
  if (seed_a < 0 || seed_b >= cols || seed_a >= seed_b)
    throw std::invalid_argument("seed columns outside grid");

  std::vector<std::vector<Segment2>> by_column(cols);
  for (const auto& c : threshold_cells(grid, params.conf_threshold))
    for (const auto& s : select_cell_segments(grid, c.i, c.j, params.dedupe_tolerance))
      by_column[c.j].push_back(s);

  const double tau = params.assign_tolerance;
  std::vector<Working> lines;

  // Seeds: union-find over the segments of the middle columns.
  std::vector<Segment2> seeds;
  for (int col = seed_a; col <= seed_b; ++col)
    seeds.insert(seeds.end(), by_column[col].begin(), by_column[col].end());
  std::vector<int> parent(seeds.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t s = 0; s < seeds.size(); ++s)
    for (std::size_t t = s + 1; t < seeds.size(); ++t)
      if (chain_gap(seeds[s], seeds[t]) < tau) {
        const int rs = find_root(parent, static_cast<int>(s));
        const int rt = find_root(parent, static_cast<int>(t));
        if (rs != rt) parent[std::max(rs, rt)] = std::min(rs, rt);
      }
  std::vector<int> line_of_root(seeds.size(), -1);
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const int r = find_root(parent, static_cast<int>(s));
    if (line_of_root[r] < 0) {
      line_of_root[r] = static_cast<int>(lines.size());
      lines.push_back({});
    }
    lines[line_of_root[r]].members.push_back(seeds[s]);
  }
  for (auto& l : lines) l.fit = refit(l.members);

  // Remaining columns, alternating outward from the seeds.
  std::vector<int> order;
  for (int left = seed_a - 1, right = seed_b + 1; left >= 0 || right < cols; --left, ++right) {
    if (left >= 0) order.push_back(left);
    if (right < cols) order.push_back(right);
  }
  for (const int col : order) {
    std::vector<bool> touched(lines.size(), false);
    for (const auto& seg : by_column[col]) {
      int best = -1;
      double best_d = INFINITY;
      for (std::size_t l = 0; l < lines.size(); ++l)
        if (const double d = vertical_distance(seg, lines[l].fit); d < best_d) {
          best_d = d;
          best = static_cast<int>(l);
        }
      if (best >= 0 && best_d < tau) {
        lines[best].members.push_back(seg);
        touched[best] = true;
      } else {
        const Point2 pts[2] = {seg.left, seg.right};
        lines.push_back({{seg}, fit_or_flat(pts)});
        touched.push_back(false);
      }
    }
    for (std::size_t l = 0; l < lines.size(); ++l)
      if (touched[l]) lines[l].fit = refit(lines[l].members);
  }

  // A seed fitted on few noisy segments can mispredict the next column and leave
  // one line in two pieces. Join pairs that one fit explains.
  for (bool merged = params.merge_split_lines; merged;) {
    merged = false;
    for (std::size_t a = 0; a < lines.size() && !merged; ++a)
      for (std::size_t b = a + 1; b < lines.size() && !merged; ++b) {
        std::vector<Segment2> joint = lines[a].members;
        joint.insert(joint.end(), lines[b].members.begin(), lines[b].members.end());
        const LineFit2 fit = refit(joint);
        // Two parallel lines also fit a midline within tau, but sit on opposite sides of it.
        const double offset = std::abs(mean_signed_offset(lines[a].members, fit) -
                                       mean_signed_offset(lines[b].members, fit));
        if (offset < 0.5 * tau &&
            std::all_of(joint.begin(), joint.end(),
                        [&](const Segment2& s) { return vertical_distance(s, fit) < tau; })) {
          lines[a] = {std::move(joint), fit};
          lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(b));
          merged = true;
        }
      }
  }

  std::vector<StairLine2D> out;
  out.reserve(lines.size());
  for (auto& l : lines) {
    StairLine2D line;
    line.k = l.fit.k;
    line.b = l.fit.b;
    Point2 lo = l.members.front().left, hi = l.members.front().right;
    for (const auto& m : l.members) {
      if (m.left.x < lo.x) lo = m.left;
      if (m.right.x > hi.x) hi = m.right;
    }
    line.x1 = lo.x;
    line.y1 = lo.y;
    line.x2 = hi.x;
    line.y2 = hi.y;
    line.members = std::move(l.members);
    out.push_back(std::move(line));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const StairLine2D& a, const StairLine2D& b) { return a.b < b.b; });
  return out;
}

}  // namespace stairkit
