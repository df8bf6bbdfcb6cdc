#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "stairkit/loss.hpp"

using namespace stairkit;

TEST_CASE("multitask_loss is zero on exact predictions") {
  std::mt19937_64 rng(1);
  const DetectionGrid gt = oracle::random_gt(rng);
  const auto l = multitask_loss(gt, gt, {});
  CHECK(l.x_term == 0.0);
  CHECK(l.y_term == 0.0);
  CHECK(l.cls_term < 1e-10);
}

TEST_CASE("multitask_loss single offset cell") {
  DetectionGrid gt, pred;
  auto& g = gt.at(4, 4);
  g.conf = 1.0;
  g.coords = {0.2, 0.3, 0.4, 0.5, 0.2, 0.3, 0.4, 0.5};
  auto& p = pred.at(4, 4);
  p.conf = 1.0;
  for (int k = 0; k < 8; ++k) p.coords[k] = g.coords[k] + 0.1;
  const auto l = multitask_loss(pred, gt, {});
  const double expect = 0.1 * 4 / (32.0 * 16.0);
  CHECK(std::abs(l.x_term - expect) < 1e-9);
  CHECK(std::abs(l.y_term - expect) < 1e-9);
  CHECK(std::abs(l.total - (l.cls_term + 10 * l.x_term + 10 * l.y_term)) < 1e-12);

  const auto fixed = multitask_loss(pred, gt, LossWeights::stairnet_fixed(), LossMode::Fixed);
  CHECK(std::abs(fixed.total - (fixed.cls_term + 4 * (fixed.x_term + 4 * fixed.y_term))) < 1e-12);
}

TEST_CASE("multitask_loss matches the double-loop oracle") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    const DetectionGrid p = oracle::random_grid(rng), g = oracle::random_gt(rng);
    for (auto mode : {LossMode::Dynamic, LossMode::Fixed})
      for (auto gate : {LossGate::GroundTruth, LossGate::Predicted}) {
        LossWeights w{1.0 + t % 7, 2.0 + t % 5, 0.5, 4.0};
        const auto got = multitask_loss(p, g, w, mode, gate);
        const auto want = oracle::multitask(p, g, w, mode, gate);
        CHECK(oracle::close_rel(got.total, want.total, 1e-9));
        CHECK(oracle::close_rel(got.x_term, want.x, 1e-9));
        CHECK(got.total >= 0.0);
      }
  }
  CHECK_THROWS_AS(multitask_loss(DetectionGrid({16, 16}, {}), DetectionGrid{}, {}),
                  std::invalid_argument);
}

TEST_CASE("coord_errors") {
  std::mt19937_64 rng(3);
  const std::vector<DetectionGrid> gts{oracle::random_gt(rng), oracle::random_gt(rng)};
  const auto zero = coord_errors(gts, gts);
  CHECK(zero.x_error == 0.0);
  CHECK(zero.y_error == 0.0);

  DetectionGrid g, p;
  g.at(1, 1).conf = 1.0;
  g.at(1, 1).coords = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
  p.at(1, 1) = g.at(1, 1);
  for (int k = 0; k < 8; k += 2) p.at(1, 1).coords[k] += 0.1;
  const std::vector<DetectionGrid> ps{p}, gs{g};
  const auto e = coord_errors(ps, gs);
  CHECK(std::abs(e.x_error - 0.4) < 1e-9);
  CHECK(e.y_error == 0.0);

  for (int t = 0; t < 50; ++t) {
    std::vector<DetectionGrid> a, b;
    for (int s = 0; s < 1 + t % 4; ++s) {
      a.push_back(oracle::random_grid(rng));
      b.push_back(oracle::random_gt(rng));
    }
    const auto got = coord_errors(a, b);
    const auto want = oracle::coord_errors(a, b);
    CHECK(oracle::close_rel(got.x_error, want.x_error, 1e-9));
    CHECK(oracle::close_rel(got.y_error, want.y_error, 1e-9));
  }
  const std::vector<DetectionGrid> one{g};
  CHECK_THROWS_AS(coord_errors(one, {}), std::invalid_argument);
}

TEST_CASE("update_weights") {
  const LossWeights w0{};
  auto w = update_weights(w0, {2, 1});
  CHECK(std::abs(w.alpha - 10.5) < 1e-9);
  CHECK(std::abs(w.beta - 9.5) < 1e-9);
  w = update_weights(w0, {1, 2});
  CHECK(std::abs(w.alpha - 9.5) < 1e-9);
  CHECK(std::abs(w.beta - 10.5) < 1e-9);
  w = update_weights({0.8, 19.2, 0.5, 4.0}, {1, 5});
  CHECK(w.alpha == 0.8);
  CHECK(w.beta == 19.2);
  w = update_weights(w0, {0, 0});
  CHECK(w.alpha == 10.0);
  CHECK(w.beta == 10.0);
  CHECK_THROWS_AS(update_weights(w0, {-1, 0}), std::invalid_argument);
}

TEST_CASE("weight trajectory properties") {
  // Constant X > Y: alpha rises monotonically until beta would cross the floor.
  LossWeights w{};
  double prev = w.alpha;
  for (int k = 0; k < 100; ++k) {
    w = update_weights(w, {3, 1});
    CHECK(w.alpha >= prev);
    CHECK(w.alpha + w.beta == doctest::Approx(20.0));
    CHECK(w.beta >= 0.5);
    prev = w.alpha;
  }
  CHECK(w.beta < 0.5 + 2.0 / 3.0);

  std::mt19937_64 rng(4);
  std::exponential_distribution<double> e(1.0);
  const std::vector<ValErrors> trace{{2, 1}, {1, 1}, {0.5, 4}};
  const auto rows = weight_schedule({}, trace);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].epoch == 1);
  CHECK(rows[0].alpha == doctest::Approx(10.5));
  CHECK(rows[1].alpha == doctest::Approx(10.5));
  CHECK(rows[2].alpha == doctest::Approx(10.5 - 0.875));
  std::vector<ValErrors> random_trace(1000);
  for (auto& v : random_trace) v = {e(rng), e(rng)};
  for (const auto& r : weight_schedule({1.0, 1.0, 0.5, 4.0}, random_trace)) {
    CHECK(r.alpha >= 0.5);
    CHECK(r.beta >= 0.5);
    CHECK(std::abs(r.alpha + r.beta - 2.0) < 1e-9);
  }
}

TEST_CASE("detection_metrics") {
  DetectionGrid p, g;
  for (int k = 0; k < 8; ++k) {
    p.cells()[k].conf = 0.9;
    g.cells()[k].conf = 1.0;
  }
  p.cells()[8].conf = 0.6;
  p.cells()[9].conf = 0.5;
  g.cells()[10].conf = 1.0;
  g.cells()[11].conf = 1.0;
  p.cells()[12].conf = 0.49;
  const auto r = detection_metrics(p, g);
  CHECK(r.tp == 8);
  CHECK(r.fp == 2);
  CHECK(r.fn == 2);
  CHECK(std::abs(r.accuracy - 0.8) < 1e-9);
  CHECK(std::abs(r.recall - 0.8) < 1e-9);
  CHECK(std::abs(r.iou - 8.0 / 12.0) < 1e-9);

  const auto same = detection_metrics(g, g);
  CHECK(same.accuracy == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.iou == 1.0);

  const auto empty = detection_metrics(DetectionGrid{}, DetectionGrid{});
  CHECK(empty.iou == 1.0);
  DetectionGrid only_gt;
  only_gt.at(0, 0).conf = 1.0;
  const auto miss = detection_metrics(DetectionGrid{}, only_gt);
  CHECK(miss.recall == 0.0);
  CHECK(miss.iou == 0.0);
  CHECK(miss.accuracy == 1.0);
}

TEST_CASE("detection_metrics matches the cell-count oracle") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const DetectionGrid p = oracle::random_grid(rng), g = oracle::random_gt(rng);
    const auto r = detection_metrics(p, g);
    const auto c = oracle::metric_counts(p, g, 0.5);
    CHECK(r.tp == c.tp);
    CHECK(r.fp == c.fp);
    CHECK(r.fn == c.fn);
    CHECK(r.iou <= std::min(r.accuracy, r.recall) + 1e-15);
    CHECK(oracle::close_rel(r.iou, oracle::ratio_or_one(c.tp, c.tp + c.fp + c.fn), 1e-12));

    // Invariance under a shared row reversal.
    DetectionGrid pr, gr;
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 16; ++j) {
        pr.at(31 - i, j) = p.at(i, j);
        gr.at(31 - i, j) = g.at(i, j);
      }
    const auto rr = detection_metrics(pr, gr);
    CHECK(rr.tp == r.tp);
    CHECK(rr.fp == r.fp);
  }
}

TEST_CASE("micro-averaged aggregation") {
  MetricReport a, b;
  a.tp = 3;
  a.fp = 1;
  b.fn = 4;
  a.finalize();
  b.finalize();
  a += b;
  CHECK(a.tp == 3);
  CHECK(a.fn == 4);
  CHECK(a.recall == doctest::Approx(3.0 / 7.0));
}
