#include "stairkit/overlay.hpp"

#include <array>
#include <charconv>

namespace stairkit {
namespace {

constexpr std::array<const char*, 8> kPalette = {"#8e44ad", "#e84393", "#e67e22", "#f1c40f",
                                                 "#16a085", "#2980b9", "#c0392b", "#7f8c8d"};

std::string num(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 3);
  std::string s(buf, ptr);
  // Trim trailing zeros for compact, stable output.
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

std::string path(double x1, double y1, double x2, double y2) {
  return "M " + num(x1) + " " + num(y1) + " L " + num(x2) + " " + num(y2);
}

}  // namespace

std::string render_overlay_svg(ImageDims image, const std::vector<StairLineLabel>& gt,
                               const std::vector<StairLine2D>& predicted) {
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(image.width) +
         "\" height=\"" + std::to_string(image.height) + "\" viewBox=\"0 0 " +
         std::to_string(image.width) + " " + std::to_string(image.height) + "\">\n";
  out += "  <rect x=\"0\" y=\"0\" width=\"" + std::to_string(image.width) + "\" height=\"" +
         std::to_string(image.height) + "\" fill=\"#111111\"/>\n";
  out += "  <g id=\"ground-truth\" fill=\"none\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\">\n";
  for (const auto& l : gt) {
    const bool convex = l.cls == LineClass::Convex;
    out += "    <path class=\"gt " + std::string(convex ? "convex" : "concave") + "\" stroke=\"" +
           (convex ? "#2ecc71" : "#3498db") + "\" d=\"" + path(l.x1, l.y1, l.x2, l.y2) + "\"/>\n";
  }
  out += "  </g>\n";
  out += "  <g id=\"predicted\" fill=\"none\" stroke-width=\"2\">\n";
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    const auto& l = predicted[k];
    // Drawn along the fitted line between the extreme member abscissas.
    out += "    <path class=\"pred\" data-cluster=\"" + std::to_string(k) + "\" stroke=\"" +
           kPalette[k % kPalette.size()] + "\" d=\"" +
           path(l.x1, l.y_at(l.x1), l.x2, l.y_at(l.x2)) + "\"/>\n";
  }
  out += "  </g>\n</svg>\n";
  return out;
}

}  // namespace stairkit
