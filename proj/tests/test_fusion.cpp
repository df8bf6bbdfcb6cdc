#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "stairkit/fusion.hpp"

using namespace stairkit;

namespace {

FeatureMap random_map(std::mt19937_64& rng, int h, int w, int c) {
  std::normal_distribution<double> n(0.0, 1.0);
  FeatureMap m(h, w, c);
  for (double& v : m.data()) v = n(rng);
  return m;
}

const ShapeRow& row(const ShapePlan& p, const std::string& name, PlanBranch b) {
  for (const auto& r : p.rows)
    if (r.name == name && r.branch == b) return r;
  FAIL("missing row " << name);
  return p.rows.front();
}

}  // namespace

TEST_CASE("focus_slice phases") {
  std::vector<double> v(16);
  std::iota(v.begin(), v.end(), 0.0);
  const FeatureMap in(4, 4, 1, v);
  const FeatureMap out = focus_slice(in);
  CHECK(out.height() == 2);
  CHECK(out.width() == 2);
  CHECK(out.channels() == 4);
  CHECK(out.at(0, 0, 0) == 0);
  CHECK(out.at(0, 1, 0) == 2);
  CHECK(out.at(1, 0, 0) == 8);
  CHECK(out.at(1, 1, 0) == 10);
  CHECK(out.at(0, 0, 1) == 1);   // even row, odd col
  CHECK(out.at(0, 0, 2) == 4);   // odd row, even col
  CHECK(out.at(0, 0, 3) == 5);   // odd, odd
}

TEST_CASE("focus_slice full-size shape and inverse") {
  const FeatureMap big(512, 512, 3, 1.0);
  const FeatureMap s = focus_slice(big);
  CHECK(s.height() == 256);
  CHECK(s.width() == 256);
  CHECK(s.channels() == 12);

  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const FeatureMap m = random_map(rng, 2 * (1 + t % 5), 2 * (1 + t % 3), 1 + t % 4);
    const FeatureMap sl = focus_slice(m);
    auto a = m.data(), b = sl.data();
    CHECK(std::accumulate(a.begin(), a.end(), 0.0) ==
          doctest::Approx(std::accumulate(b.begin(), b.end(), 0.0)));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    CHECK(focus_unslice(sl) == m);
  }
  CHECK_THROWS_AS(focus_slice(FeatureMap(3, 4, 1)), std::invalid_argument);
  CHECK_THROWS_AS(focus_slice(FeatureMap(4, 5, 1)), std::invalid_argument);
}

TEST_CASE("selective_fuse identical branches") {
  std::mt19937_64 rng(2);
  const FeatureMap u = random_map(rng, 5, 6, 3);
  SelectiveParams p;
  p.logits = FixedLogits{{0.3, -2.0, 5.0}, {1.0, 0.0, -1.0}};
  const auto r = selective_fuse(u, u, p);
  for (std::size_t k = 0; k < u.size(); ++k)
    CHECK(r.fused.data()[k] == doctest::Approx(u.data()[k]).epsilon(1e-12));
}

TEST_CASE("selective_fuse fixed logits ln3, ln1") {
  const FeatureMap u(1, 2, 1, std::vector<double>{4.0, 8.0});
  const FeatureMap d(1, 2, 1, std::vector<double>{0.0, -4.0});
  SelectiveParams p;
  p.logits = FixedLogits{{std::log(3.0)}, {std::log(1.0)}};
  const auto r = selective_fuse(u, d, p);
  CHECK(std::abs(r.rgb_weights[0] - 0.75) < 1e-9);
  CHECK(std::abs(r.depth_weights[0] - 0.25) < 1e-9);
  CHECK(std::abs(r.fused.at(0, 0, 0) - 3.0) < 1e-9);
  CHECK(std::abs(r.fused.at(0, 1, 0) - 5.0) < 1e-9);
}

TEST_CASE("selective_fuse matches the per-pixel oracle") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const int h = 1 + t % 4, w = 1 + t % 5, c = 1 + t % 6;
    const FeatureMap u = random_map(rng, h, w, c), d = random_map(rng, h, w, c);
    AffineLogits a;
    for (auto* v : {&a.rgb_weight, &a.depth_weight}) {
      v->resize(c * c);
      for (double& x : *v) x = n(rng);
    }
    for (auto* v : {&a.rgb_bias, &a.depth_bias}) {
      v->resize(c);
      for (double& x : *v) x = n(rng);
    }
    SelectiveParams p;
    p.logits = a;
    const auto got = selective_fuse(u, d, p);
    const auto want = oracle::selective(u, d, a.rgb_weight, a.rgb_bias, a.depth_weight, a.depth_bias);
    for (int ch = 0; ch < c; ++ch) {
      CHECK(oracle::close_rel(got.rgb_weights[ch], want.w_rgb[ch], 1e-9));
      CHECK(std::abs(got.rgb_weights[ch] + got.depth_weights[ch] - 1.0) < 1e-9);
    }
    for (std::size_t k = 0; k < want.fused.size(); ++k) {
      CHECK(oracle::close_rel(got.fused.data()[k], want.fused[k], 1e-9));
      const double lo = std::min(u.data()[k], d.data()[k]), hi = std::max(u.data()[k], d.data()[k]);
      CHECK(got.fused.data()[k] >= lo - 1e-12);
      CHECK(got.fused.data()[k] <= hi + 1e-12);
    }
  }
}

TEST_CASE("selective_fuse descriptor hook and scaling") {
  std::mt19937_64 rng(4);
  const FeatureMap u = random_map(rng, 3, 3, 2), d = random_map(rng, 3, 3, 2);
  SelectiveParams fixed;
  fixed.logits = FixedLogits{{0.2, 0.7}, {-0.1, 1.5}};
  FeatureMap u3 = u, d3 = d;
  for (double& v : u3.data()) v *= 3.0;
  for (double& v : d3.data()) v *= 3.0;
  const auto a = selective_fuse(u, d, fixed), b = selective_fuse(u3, d3, fixed);
  for (std::size_t k = 0; k < u.size(); ++k)
    CHECK(b.fused.data()[k] == doctest::Approx(3.0 * a.fused.data()[k]));

  AffineLogits aff{{1, 0, 0, 1}, {0, 0}, {0, 0, 0, 0}, {0, 0}};
  SelectiveParams relu;
  relu.logits = aff;
  relu.descriptor_activation = [](double s) { return s > 0 ? s : 0.0; };
  const auto r = selective_fuse(u, d, relu);
  const auto s = global_average_pool(u);
  const auto sd = global_average_pool(d);
  for (int ch = 0; ch < 2; ++ch) {
    const double pooled = std::max(0.0, s[ch] + sd[ch]);
    CHECK(r.rgb_weights[ch] == doctest::Approx(1.0 / (1.0 + std::exp(-pooled))));
  }

  CHECK_THROWS_AS(selective_fuse(u, FeatureMap(3, 3, 1), fixed), std::invalid_argument);
}

TEST_CASE("backbone shape plan at full width") {
  const ShapePlan p = backbone_shape_plan(512, 512, 1.0);
  CHECK(check_shape_plan(p).empty());
  const auto& init = row(p, "Initial", PlanBranch::Rgb);
  CHECK(init.height == 256);
  CHECK(init.width == 256);
  CHECK(init.channels == 32);
  for (const char* n : {"Bottleneck 1.0", "Bottleneck 1.1", "Bottleneck 1.2"})
    for (PlanBranch b : {PlanBranch::Rgb, PlanBranch::Depth}) {
      const auto& r = row(p, n, b);
      CHECK(r.height == 128);
      CHECK(r.width == 128);
      CHECK(r.channels == 128);
    }
  const auto& sel = row(p, "Selective module", PlanBranch::Shared);
  CHECK(sel.height == 128);
  CHECK(sel.channels == 128);
  const auto& fin = row(p, "Conv 3x3", PlanBranch::Shared);
  CHECK(fin.height == 32);
  CHECK(fin.width == 16);
  CHECK(fin.channels == 128);
  CHECK(fin.stride_h == 1);
  CHECK(fin.stride_w == 2);
  const auto& cls = row(p, "Sigmoid", PlanBranch::Classification);
  CHECK(cls.height == 32);
  CHECK(cls.width == 16);
  CHECK(cls.channels == 1);
  CHECK(row(p, "Conv 1x1", PlanBranch::Classification).channels == 1);
  const auto& loc = row(p, "Sigmoid", PlanBranch::Location);
  CHECK(loc.height == 32);
  CHECK(loc.width == 16);
  CHECK(loc.channels == 8);
}

TEST_CASE("backbone shape plan width factors") {
  const ShapePlan half = backbone_shape_plan(512, 512, 0.5);
  CHECK(row(half, "Bottleneck 1.1", PlanBranch::Rgb).channels == 64);
  const ShapePlan quarter = backbone_shape_plan(512, 512, 0.25);
  CHECK(row(quarter, "Initial", PlanBranch::Depth).channels == 8);
  for (const ShapePlan* p : {&half, &quarter}) {
    CHECK(check_shape_plan(*p).empty());
    CHECK(row(*p, "Sigmoid", PlanBranch::Classification).channels == 1);
    CHECK(row(*p, "Sigmoid", PlanBranch::Location).channels == 8);
  }
  CHECK_THROWS_AS(backbone_shape_plan(500, 512, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(backbone_shape_plan(512, 512, 0.3), std::invalid_argument);
}

TEST_CASE("check_shape_plan flags an inconsistent row") {
  ShapePlan p = backbone_shape_plan(512, 512, 1.0);
  p.rows[3].height += 1;
  CHECK_FALSE(check_shape_plan(p).empty());
}
