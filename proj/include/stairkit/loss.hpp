#pragma once

// Multitask detection loss (fixed and dynamic coordinate weights), the
// validation coordinate errors that drive the weight schedule, and cell-level
// accuracy / recall / IoU.

#include <cstdint>
#include <span>
#include <vector>

#include "stairkit/grid.hpp"

namespace stairkit {

struct LossWeights {
  double alpha = 10.0;  // abscissa weight
  double beta = 10.0;   // ordinate weight
  double sigma = 0.5;   // floor below which an update is rejected
  double lambda = 4.0;  // classification/location tradeoff, fixed mode only

  // Fixed weighting with lambda = alpha = 4.
  static LossWeights stairnet_fixed() { return {4.0, 10.0, 0.5, 4.0}; }
};

enum class LossMode { Fixed, Dynamic };

// Which confidence multiplies the location terms.
enum class LossGate { Predicted, GroundTruth };

struct LossBreakdown {
  double total = 0.0;
  double cls_term = 0.0;
  double x_term = 0.0;
  double y_term = 0.0;
};

LossBreakdown multitask_loss(const DetectionGrid& pred, const DetectionGrid& gt,
                             const LossWeights& weights, LossMode mode = LossMode::Dynamic,
                             LossGate gate = LossGate::GroundTruth);

// Clamped binary cross-entropy.
double binary_cross_entropy(double p, double target);

struct ValErrors {
  double x_error = 0.0;
  double y_error = 0.0;

  ValErrors& operator+=(const ValErrors& o) {
    x_error += o.x_error;
    y_error += o.y_error;
    return *this;
  }
};

ValErrors coord_errors(std::span<const DetectionGrid> preds, std::span<const DetectionGrid> gts);

LossWeights update_weights(const LossWeights& weights, const ValErrors& errors);

struct WeightStep {
  int epoch = 0;
  double alpha = 0.0;
  double beta = 0.0;
  ValErrors errors;
};

// Sequential updates, one row per epoch (epochs start at 1).
std::vector<WeightStep> weight_schedule(LossWeights start, std::span<const ValErrors> trace);

struct MetricReport {
  std::int64_t tp = 0, fp = 0, fn = 0;
  double accuracy = 1.0, recall = 1.0, iou = 1.0;

  // Recomputes the ratios from the counts. A ratio whose denominator is zero is 1.
  void finalize();
  MetricReport& operator+=(const MetricReport& o);
};

MetricReport detection_metrics(const DetectionGrid& pred, const DetectionGrid& gt,
                               double conf_threshold = 0.5);

}  // namespace stairkit
