#include "stairkit/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stairkit {
namespace {

constexpr double kProbEps = 1e-12;

void require_same_shape(const DetectionGrid& a, const DetectionGrid& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("grid dimensions differ");
}

double l1_x(const CellPrediction& p, const CellPrediction& g) {
  double s = 0.0;
  for (int k = 0; k < 8; k += 2) s += std::abs(p.coords[k] - g.coords[k]);
  return s;
}

double l1_y(const CellPrediction& p, const CellPrediction& g) {
  double s = 0.0;
  for (int k = 1; k < 8; k += 2) s += std::abs(p.coords[k] - g.coords[k]);
  return s;
}

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double binary_cross_entropy(double p, double target) {
  const double q = std::clamp(p, kProbEps, 1.0 - kProbEps);
  double loss = 0.0;
  if (target != 0.0) loss -= target * std::log(q);
  if (target != 1.0) loss -= (1.0 - target) * std::log(1.0 - q);
  return loss;
}

LossBreakdown multitask_loss(const DetectionGrid& pred, const DetectionGrid& gt,
                             const LossWeights& weights, LossMode mode, LossGate gate) {
  require_same_shape(pred, gt);
  LossBreakdown out;
  const auto& pc = pred.cells();
  const auto& gc = gt.cells();
  for (std::size_t k = 0; k < pc.size(); ++k) {
    out.cls_term += binary_cross_entropy(pc[k].conf, gc[k].conf);
    const double g = gate == LossGate::GroundTruth ? gc[k].conf : pc[k].conf;
    if (g == 0.0) continue;
    out.x_term += g * l1_x(pc[k], gc[k]);
    out.y_term += g * l1_y(pc[k], gc[k]);
  }
  const double n = static_cast<double>(pc.size());
  out.cls_term /= n;
  out.x_term /= n;
  out.y_term /= n;
  if (mode == LossMode::Dynamic)
    out.total = out.cls_term + weights.alpha * out.x_term + weights.beta * out.y_term;
  else
    out.total = out.cls_term + weights.lambda * (out.x_term + weights.alpha * out.y_term);
  return out;
}

ValErrors coord_errors(std::span<const DetectionGrid> preds, std::span<const DetectionGrid> gts) {
  if (preds.size() != gts.size()) throw std::invalid_argument("prediction/GT list lengths differ");
  ValErrors out;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    require_same_shape(preds[s], gts[s]);
    const auto& pc = preds[s].cells();
    const auto& gc = gts[s].cells();
    for (std::size_t k = 0; k < pc.size(); ++k) {
      if (gc[k].conf == 0.0) continue;
      out.x_error += gc[k].conf * l1_x(pc[k], gc[k]);
      out.y_error += gc[k].conf * l1_y(pc[k], gc[k]);
    }
  }
  return out;
}

LossWeights update_weights(const LossWeights& weights, const ValErrors& errors) {
  if (errors.x_error < 0.0 || errors.y_error < 0.0)
    throw std::invalid_argument("validation errors must be nonnegative");
  const double denom = std::max(errors.x_error, errors.y_error);
  if (denom == 0.0) return weights;
  const double delta = (errors.x_error - errors.y_error) / denom;
  LossWeights next = weights;
  next.alpha = weights.alpha + delta;
  next.beta = weights.beta - delta;
  if (next.alpha < weights.sigma || next.beta < weights.sigma) return weights;
  return next;
}

std::vector<WeightStep> weight_schedule(LossWeights start, std::span<const ValErrors> trace) {
  std::vector<WeightStep> rows;
  rows.reserve(trace.size());
  int epoch = 1;
  for (const auto& e : trace) {
    start = update_weights(start, e);
    rows.push_back({epoch++, start.alpha, start.beta, e});
  }
  return rows;
}

void MetricReport::finalize() {
  accuracy = ratio(tp, tp + fp);
  recall = ratio(tp, tp + fn);
  iou = ratio(tp, tp + fp + fn);
}

MetricReport& MetricReport::operator+=(const MetricReport& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  finalize();
  return *this;
}

MetricReport detection_metrics(const DetectionGrid& pred, const DetectionGrid& gt,
                               double conf_threshold) {
  require_same_shape(pred, gt);
  MetricReport r;
  const auto& pc = pred.cells();
  const auto& gc = gt.cells();
  for (std::size_t k = 0; k < pc.size(); ++k) {
    const bool p = pc[k].conf >= conf_threshold;
    const bool g = gc[k].conf >= conf_threshold;
    r.tp += p && g;
    r.fp += p && !g;
    r.fn += !p && g;
  }
  r.finalize();
  return r;
}

}  // namespace stairkit
