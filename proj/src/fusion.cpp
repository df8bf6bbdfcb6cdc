#include "stairkit/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stairkit {

FeatureMap::FeatureMap(int height, int width, int channels, double fill)
    : h_(height), w_(width), c_(channels) {
  if (height <= 0 || width <= 0 || channels <= 0)
    throw std::invalid_argument("feature map dims must be positive");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

FeatureMap::FeatureMap(int height, int width, int channels, std::vector<double> data)
    : h_(height), w_(width), c_(channels), data_(std::move(data)) {
  if (height <= 0 || width <= 0 || channels <= 0)
    throw std::invalid_argument("feature map dims must be positive");
  if (data_.size() != static_cast<std::size_t>(height) * width * channels)
    throw std::invalid_argument("feature map data length does not match h*w*c");
}

FeatureMap focus_slice(const FeatureMap& input) {
  if (input.height() % 2 != 0 || input.width() % 2 != 0)
    throw std::invalid_argument("focus_slice needs even height and width");
  const int c = input.channels();
  FeatureMap out(input.height() / 2, input.width() / 2, 4 * c);
  constexpr int kPhase[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      for (int p = 0; p < 4; ++p)
        for (int ch = 0; ch < c; ++ch)
          out.at(y, x, p * c + ch) = input.at(2 * y + kPhase[p][0], 2 * x + kPhase[p][1], ch);
  return out;
}

FeatureMap focus_unslice(const FeatureMap& sliced) {
  if (sliced.channels() % 4 != 0)
    throw std::invalid_argument("focus_unslice needs a channel count divisible by 4");
  const int c = sliced.channels() / 4;
  FeatureMap out(sliced.height() * 2, sliced.width() * 2, c);
  constexpr int kPhase[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (int y = 0; y < sliced.height(); ++y)
    for (int x = 0; x < sliced.width(); ++x)
      for (int p = 0; p < 4; ++p)
        for (int ch = 0; ch < c; ++ch)
          out.at(2 * y + kPhase[p][0], 2 * x + kPhase[p][1], ch) = sliced.at(y, x, p * c + ch);
  return out;
}

std::vector<double> global_average_pool(const FeatureMap& m) {
  const int c = m.channels();
  std::vector<double> pooled(c, 0.0);
  const auto& d = m.data();
  for (std::size_t k = 0; k < d.size(); ++k) pooled[k % c] += d[k];
  const double n = static_cast<double>(m.height()) * m.width();
  for (double& v : pooled) v /= n;
  return pooled;
}

namespace {

std::vector<double> affine(const std::vector<double>& weight, const std::vector<double>& bias,
                           const std::vector<double>& s) {
  const std::size_t c = s.size();
  if (weight.size() != c * c || bias.size() != c)
    throw std::invalid_argument("selective params do not match the channel count");
  std::vector<double> out(bias);
  for (std::size_t r = 0; r < c; ++r)
    for (std::size_t k = 0; k < c; ++k) out[r] += weight[r * c + k] * s[k];
  return out;
}

}  // namespace

SelectiveResult selective_fuse(const FeatureMap& u_rgb, const FeatureMap& u_d,
                               const SelectiveParams& params) {
  if (!u_rgb.same_shape(u_d)) throw std::invalid_argument("selective_fuse: branch shapes differ");
  const int c = u_rgb.channels();

  std::vector<double> rgb_logits, depth_logits;
  if (const auto* fixed = std::get_if<FixedLogits>(&params.logits)) {
    if (fixed->rgb.size() != static_cast<std::size_t>(c) ||
        fixed->depth.size() != static_cast<std::size_t>(c))
      throw std::invalid_argument("fixed logits do not match the channel count");
    rgb_logits = fixed->rgb;
    depth_logits = fixed->depth;
  } else {
    const auto& aff = std::get<AffineLogits>(params.logits);
    std::vector<double> s(c, 0.0);
    const auto& a = u_rgb.data();
    const auto& b = u_d.data();
    for (std::size_t k = 0; k < a.size(); ++k) s[k % c] += a[k] + b[k];
    const double n = static_cast<double>(u_rgb.height()) * u_rgb.width();
    for (double& v : s) v /= n;
    if (params.descriptor_activation)
      for (double& v : s) v = params.descriptor_activation(v);
    rgb_logits = affine(aff.rgb_weight, aff.rgb_bias, s);
    depth_logits = affine(aff.depth_weight, aff.depth_bias, s);
  }

  SelectiveResult res{FeatureMap(u_rgb.height(), u_rgb.width(), c), std::vector<double>(c),
                      std::vector<double>(c)};
  for (int ch = 0; ch < c; ++ch) {
    // Two-way softmax written as a logistic of the logit gap.
    const double w = 1.0 / (1.0 + std::exp(depth_logits[ch] - rgb_logits[ch]));
    res.rgb_weights[ch] = w;
    res.depth_weights[ch] = 1.0 - w;
  }
  const auto& a = u_rgb.data();
  const auto& b = u_d.data();
  auto& f = res.fused.data();
  for (std::size_t k = 0; k < a.size(); ++k) {
    const int ch = static_cast<int>(k % c);
    f[k] = res.rgb_weights[ch] * a[k] + res.depth_weights[ch] * b[k];
  }
  return res;
}

const char* to_string(PlanBranch b) {
  switch (b) {
    case PlanBranch::Rgb: return "rgb";
    case PlanBranch::Depth: return "depth";
    case PlanBranch::Shared: return "shared";
    case PlanBranch::Classification: return "classification";
    case PlanBranch::Location: return "location";
  }
  return "?";
}

ShapePlan backbone_shape_plan(int input_height, int input_width, double width_factor) {
  if (width_factor != 1.0 && width_factor != 0.5 && width_factor != 0.25)
    throw std::invalid_argument("width factor must be 1, 0.5 or 0.25");
  if (input_height <= 0 || input_width <= 0 || input_height % 32 != 0 || input_width % 32 != 0)
    throw std::invalid_argument("input size must be a positive multiple of 32 on both sides");

  auto scaled = [&](int c) {
    return std::max(1, static_cast<int>(std::lround(c * width_factor)));
  };
  const int h2 = input_height / 2, w2 = input_width / 2;
  const int h4 = input_height / 4, w4 = input_width / 4;
  const int h8 = input_height / 8, w8 = input_width / 8;
  const int h16 = input_height / 16, w16 = input_width / 16;
  const int w32 = input_width / 32;

  ShapePlan plan{input_height, input_width, {}};
  auto& rows = plan.rows;
  for (PlanBranch br : {PlanBranch::Rgb, PlanBranch::Depth}) {
    rows.push_back({"Initial", br, 2, 2, h2, w2, scaled(32)});
    rows.push_back({"Bottleneck 1.0", br, 2, 2, h4, w4, scaled(128)});
    rows.push_back({"Bottleneck 1.1", br, 1, 1, h4, w4, scaled(128)});
    rows.push_back({"Bottleneck 1.2", br, 1, 1, h4, w4, scaled(128)});
  }
  rows.push_back({"Selective module", PlanBranch::Shared, 1, 1, h4, w4, scaled(128)});
  rows.push_back({"Bottleneck 2.0", PlanBranch::Shared, 2, 2, h8, w8, scaled(256)});
  for (int k = 1; k <= 7; ++k)
    rows.push_back(
        {"Bottleneck 2." + std::to_string(k), PlanBranch::Shared, 1, 1, h8, w8, scaled(256)});
  rows.push_back(
      {"Repeat bottlenecks 2.0 to 2.7", PlanBranch::Shared, 2, 2, h16, w16, scaled(256)});
  rows.push_back({"Conv 3x3", PlanBranch::Shared, 1, 2, h16, w32, scaled(128)});
  for (auto [br, out_c] : {std::pair{PlanBranch::Classification, 1}, {PlanBranch::Location, 8}}) {
    rows.push_back({"Conv 3x3", br, 1, 1, h16, w32, scaled(128)});
    rows.push_back({"Conv 1x1", br, 1, 1, h16, w32, out_c});
    rows.push_back({"Sigmoid", br, 1, 1, h16, w32, out_c});
  }
  return plan;
}

std::string check_shape_plan(const ShapePlan& plan) {
  const ShapeRow* last_rgb = nullptr;
  const ShapeRow* last_depth = nullptr;
  const ShapeRow* last_shared = nullptr;
  const ShapeRow* last_cls = nullptr;
  const ShapeRow* last_loc = nullptr;
  const ShapeRow input{"input", PlanBranch::Shared, 1, 1, plan.input_height, plan.input_width, 0};

  for (const auto& row : plan.rows) {
    const ShapeRow* prev = nullptr;
    switch (row.branch) {
      case PlanBranch::Rgb: prev = last_rgb ? last_rgb : &input; last_rgb = &row; break;
      case PlanBranch::Depth: prev = last_depth ? last_depth : &input; last_depth = &row; break;
      case PlanBranch::Shared:
        if (!last_shared) {
          if (!last_rgb || !last_depth) return "shared stream starts before both input branches";
          if (last_rgb->height != last_depth->height || last_rgb->width != last_depth->width ||
              last_rgb->channels != last_depth->channels)
            return "rgb and depth branches end with different shapes";
        }
        prev = last_shared ? last_shared : last_rgb;
        last_shared = &row;
        break;
      case PlanBranch::Classification:
      case PlanBranch::Location: {
        auto& last = row.branch == PlanBranch::Classification ? last_cls : last_loc;
        if (!last && !last_shared) return "head starts before the shared stream";
        prev = last ? last : last_shared;
        last = &row;
        break;
      }
    }
    if (row.stride_h <= 0 || row.stride_w <= 0) return row.name + ": non-positive stride";
    if (prev->height % row.stride_h != 0 || prev->width % row.stride_w != 0 ||
        prev->height / row.stride_h != row.height || prev->width / row.stride_w != row.width)
      return row.name + " (" + to_string(row.branch) + "): size does not follow from stride";
  }
  return {};
}

}  // namespace stairkit
