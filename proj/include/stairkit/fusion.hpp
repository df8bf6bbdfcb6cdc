#pragma once

// Numeric kernels for the RGB-D fusion backbone: the focus space-to-depth slice,
// the selective two-branch channel fusion, and the backbone shape plan.

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace stairkit {

// Dense (h, w, c) tensor, row-major with channels fastest.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int height, int width, int channels, double fill = 0.0);
  FeatureMap(int height, int width, int channels, std::vector<double> data);

  int height() const { return h_; }
  int width() const { return w_; }
  int channels() const { return c_; }
  std::size_t size() const { return data_.size(); }

  double& at(int y, int x, int ch) { return data_[index(y, x, ch)]; }
  double at(int y, int x, int ch) const { return data_[index(y, x, ch)]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const FeatureMap& o) const { return h_ == o.h_ && w_ == o.w_ && c_ == o.c_; }
  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t index(int y, int x, int ch) const {
    return (static_cast<std::size_t>(y) * w_ + x) * c_ + ch;
  }

  int h_ = 0, w_ = 0, c_ = 0;
  std::vector<double> data_;
};

// Halves h and w, quadruples c. Output channel blocks hold the
// (even row, even col), (even, odd), (odd, even), (odd, odd) phases in that order.
FeatureMap focus_slice(const FeatureMap& input);
FeatureMap focus_unslice(const FeatureMap& sliced);

// Two affine maps from the pooled descriptor s to per-branch logits:
// a = rgb_weight * s + rgb_bias, b = depth_weight * s + depth_bias.
// Matrices are c x c row-major.
struct AffineLogits {
  std::vector<double> rgb_weight, rgb_bias;
  std::vector<double> depth_weight, depth_bias;
};

// Logit vectors supplied directly; the descriptor is ignored.
struct FixedLogits {
  std::vector<double> rgb, depth;
};

struct SelectiveParams {
  std::variant<AffineLogits, FixedLogits> logits;
  // Optional element-wise map applied to the pooled descriptor before the logits.
  std::function<double(double)> descriptor_activation;
};

struct SelectiveResult {
  FeatureMap fused;
  std::vector<double> rgb_weights;
  std::vector<double> depth_weights;
};

SelectiveResult selective_fuse(const FeatureMap& u_rgb, const FeatureMap& u_d,
                               const SelectiveParams& params);

// Global average pool, one value per channel.
std::vector<double> global_average_pool(const FeatureMap& m);

enum class PlanBranch { Rgb, Depth, Shared, Classification, Location };

struct ShapeRow {
  std::string name;
  PlanBranch branch = PlanBranch::Shared;
  int stride_h = 1;
  int stride_w = 1;
  int height = 0;
  int width = 0;
  int channels = 0;
  friend bool operator==(const ShapeRow&, const ShapeRow&) = default;
};

struct ShapePlan {
  int input_height = 0;
  int input_width = 0;
  std::vector<ShapeRow> rows;
};

const char* to_string(PlanBranch b);

// width_factor must be 1, 0.5 or 0.25; input sides must be positive multiples of 32.
ShapePlan backbone_shape_plan(int input_height, int input_width, double width_factor);

// Checks that every row's h, w follow from its predecessor in the same stream and
// its declared stride. Returns an empty string when consistent, else a description.
std::string check_shape_plan(const ShapePlan& plan);

}  // namespace stairkit
