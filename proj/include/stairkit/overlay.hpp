#pragma once

#include <string>
#include <vector>

#include "stairkit/cluster.hpp"
#include "stairkit/grid.hpp"

namespace stairkit {

// SVG with ground-truth labels (dashed, class-coloured) under predicted lines
// (solid, one palette colour per cluster). Output bytes depend only on the input.
std::string render_overlay_svg(ImageDims image, const std::vector<StairLineLabel>& gt,
                               const std::vector<StairLine2D>& predicted);

}  // namespace stairkit
