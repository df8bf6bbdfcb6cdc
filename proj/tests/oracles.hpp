#pragma once

// Brute-force reference implementations and random generators shared by the
// unit tests and the acceptance runner. Written independently of src/: no
// shared helpers, long double accumulation, uncentered normal equations.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "stairkit/cluster.hpp"
#include "stairkit/fusion.hpp"
#include "stairkit/geom.hpp"
#include "stairkit/grid.hpp"
#include "stairkit/loss.hpp"
#include "stairkit/synth.hpp"

namespace oracle {

using namespace stairkit;

inline bool close_rel(double a, double b, double rel, double abs_floor = 1e-12) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), abs_floor});
}

struct Counts {
  long tp = 0, fp = 0, fn = 0;
};

inline Counts metric_counts(const DetectionGrid& p, const DetectionGrid& g, double t) {
  Counts c;
  for (int i = 0; i < p.rows(); ++i)
    for (int j = 0; j < p.cols(); ++j) {
      const bool pp = !(p.at(i, j).conf < t);
      const bool gg = !(g.at(i, j).conf < t);
      if (pp && gg) c.tp++;
      else if (pp) c.fp++;
      else if (gg) c.fn++;
    }
  return c;
}

inline double ratio_or_one(long n, long d) { return d ? double(n) / double(d) : 1.0; }

inline long double bce(long double p, long double t) {
  const long double eps = 1e-12L;
  if (p < eps) p = eps;
  if (p > 1 - eps) p = 1 - eps;
  long double v = 0;
  if (t > 0) v += -t * std::log(p);
  if (t < 1) v += -(1 - t) * std::log(1 - p);
  return v;
}

struct Loss {
  double total, cls, x, y;
};

inline Loss multitask(const DetectionGrid& p, const DetectionGrid& g, const LossWeights& w,
                      LossMode mode, LossGate gate) {
  long double cls = 0, x = 0, y = 0;
  const long double mn = (long double)p.rows() * p.cols();
  for (int i = 0; i < p.rows(); ++i)
    for (int j = 0; j < p.cols(); ++j) {
      const auto& a = p.at(i, j);
      const auto& b = g.at(i, j);
      cls += bce(a.conf, b.conf);
      const long double gv = gate == LossGate::GroundTruth ? b.conf : a.conf;
      for (int k = 0; k < 4; ++k) {
        x += gv * std::fabs((long double)a.coords[2 * k] - b.coords[2 * k]);
        y += gv * std::fabs((long double)a.coords[2 * k + 1] - b.coords[2 * k + 1]);
      }
    }
  cls /= mn;
  x /= mn;
  y /= mn;
  const long double total =
      mode == LossMode::Dynamic ? cls + w.alpha * x + w.beta * y : cls + w.lambda * (x + w.alpha * y);
  return {double(total), double(cls), double(x), double(y)};
}

inline ValErrors coord_errors(const std::vector<DetectionGrid>& ps,
                              const std::vector<DetectionGrid>& gs) {
  long double x = 0, y = 0;
  for (std::size_t s = 0; s < ps.size(); ++s)
    for (int i = 0; i < ps[s].rows(); ++i)
      for (int j = 0; j < ps[s].cols(); ++j) {
        const auto& a = ps[s].at(i, j);
        const auto& b = gs[s].at(i, j);
        for (int k = 0; k < 4; ++k) {
          x += (long double)b.conf * std::fabs((long double)a.coords[2 * k] - b.coords[2 * k]);
          y += (long double)b.conf * std::fabs((long double)a.coords[2 * k + 1] - b.coords[2 * k + 1]);
        }
      }
  return {double(x), double(y)};
}

// y = k x + b via the 2x2 normal equations and Cramer's rule.
inline LineFit2 fit_line(const std::vector<Point2>& pts) {
  long double n = pts.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : pts) {
    sx += p.x;
    sy += p.y;
    sxx += (long double)p.x * p.x;
    sxy += (long double)p.x * p.y;
  }
  const long double det = n * sxx - sx * sx;
  return {double((n * sxy - sx * sy) / det), double((sxx * sy - sx * sxy) / det)};
}

inline Line3DParams fit_line_3d(const std::vector<Vec3>& pts) {
  std::vector<Point2> xz, yz;
  for (const auto& p : pts) {
    xz.push_back({p.z(), p.x()});
    yz.push_back({p.z(), p.y()});
  }
  const auto a = fit_line(xz), b = fit_line(yz);
  return {a.k, a.b, b.k, b.b, 0.0};
}

struct Fused {
  std::vector<double> w_rgb, w_d, fused;
};

inline Fused selective(const FeatureMap& u, const FeatureMap& d, const std::vector<double>& A,
                       const std::vector<double>& a0, const std::vector<double>& B,
                       const std::vector<double>& b0) {
  const int h = u.height(), w = u.width(), c = u.channels();
  std::vector<long double> s(c, 0);
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) s[ch] += (long double)u.at(y, x, ch) + d.at(y, x, ch);
    s[ch] /= (long double)h * w;
  }
  Fused out;
  for (int r = 0; r < c; ++r) {
    long double la = a0[r], lb = b0[r];
    for (int k = 0; k < c; ++k) {
      la += A[r * c + k] * s[k];
      lb += B[r * c + k] * s[k];
    }
    const long double m = std::max(la, lb);
    const long double ea = std::exp(la - m), eb = std::exp(lb - m);
    out.w_rgb.push_back(double(ea / (ea + eb)));
    out.w_d.push_back(double(eb / (ea + eb)));
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch)
        out.fused.push_back(out.w_rgb[ch] * u.at(y, x, ch) + out.w_d[ch] * d.at(y, x, ch));
  return out;
}

// Random grid: each cell positive with probability p_pos, coordinates in (0,1).
inline DetectionGrid random_grid(std::mt19937_64& rng, double p_pos = 0.3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DetectionGrid g;
  for (auto& c : g.cells()) {
    c.conf = u(rng) < p_pos ? u(rng) * 0.5 + 0.5 : u(rng) * 0.5;
    for (double& v : c.coords) v = 0.001 + 0.998 * u(rng);
  }
  return g;
}

// Binary-confidence variant used as ground truth.
inline DetectionGrid random_gt(std::mt19937_64& rng, double p_pos = 0.3) {
  DetectionGrid g = random_grid(rng, p_pos);
  for (auto& c : g.cells()) c.conf = c.conf >= 0.5 ? 1.0 : 0.0;
  return g;
}

// K near-horizontal lines across the image, pairwise vertical gap > min_gap
// everywhere, encoded to a grid and jittered by up to noise_px per coordinate.
struct ClusterTrial {
  std::vector<LineFit2> lines;
  DetectionGrid grid;
  int k = 0;

  // Generating line nearest to the segment midpoint.
  int owner(const Segment2& s) const {
    const double mx = 0.5 * (s.left.x + s.right.x), my = 0.5 * (s.left.y + s.right.y);
    int best = 0;
    for (std::size_t l = 1; l < lines.size(); ++l)
      if (std::abs(my - lines[l].k * mx - lines[l].b) <
          std::abs(my - lines[best].k * mx - lines[best].b))
        best = int(l);
    return best;
  }
};

inline ClusterTrial cluster_trial(std::uint64_t seed, double min_gap, double noise_px) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(1, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ClusterTrial t;
  t.k = count(rng);
  for (int attempt = 1;; ++attempt) {
    t.lines.clear();
    const double slope = 0.15 * (2 * u(rng) - 1);
    double y = 20 + 40 * u(rng);
    for (int l = 0; l < t.k; ++l) {
      const double k = slope + 0.02 * (2 * u(rng) - 1);
      t.lines.push_back({k, y - k * 256.0});
      y += min_gap + 4 + 16 * u(rng);
    }
    bool ok = true;
    for (int l = 0; l < t.k && ok; ++l)
      for (double x : {0.0, 512.0}) {
        const double yl = t.lines[l].k * x + t.lines[l].b;
        ok = ok && yl > 1.0 && yl < 511.0;
        if (l > 0) ok = ok && yl - (t.lines[l - 1].k * x + t.lines[l - 1].b) > min_gap;
      }
    if (ok) break;
    if (attempt % 50 == 0) t.k = std::max(1, t.k - 1);
  }
  std::vector<StairLineLabel> labels;
  for (const auto& l : t.lines) labels.push_back({LineClass::Convex, 0.0, l.b, 512.0, l.k * 512.0 + l.b});
  t.grid = perturb_grid(labels_to_grid(labels).grid, noise_px, 0.0, seed ^ 0x9e3779b97f4a7c15ull);
  return t;
}

// Exact recovery: one output line per generating line, each holding only that line's segments.
inline bool cluster_exact(const ClusterTrial& t, const std::vector<StairLine2D>& out) {
  if (int(out.size()) != t.k) return false;
  std::vector<int> seen(t.k, 0);
  for (const auto& line : out) {
    if (line.members.empty()) return false;
    const int id = t.owner(line.members.front());
    for (const auto& m : line.members)
      if (t.owner(m) != id) return false;
    if (seen[id]++) return false;
  }
  return true;
}

}  // namespace oracle
