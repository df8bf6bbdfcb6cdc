#pragma once

// File formats: grid dump JSON, FMAP1 feature maps, DPTH1 depth maps, rig JSON,
// and the JSON documents written by the command-line tool.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "stairkit/cluster.hpp"
#include "stairkit/fusion.hpp"
#include "stairkit/geom.hpp"
#include "stairkit/grid.hpp"
#include "stairkit/loss.hpp"
#include "stairkit/synth.hpp"

namespace stairkit::io {

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

// {rows, cols, image_dims:[w,h], cells:[{i,j,conf,coords:[8]}]}, cells with conf > 0 only.
std::string grid_to_json(const DetectionGrid& grid);
DetectionGrid grid_from_json(std::string_view text);

// "FMAP1", u32 height, width, channels, float32 payload; little endian.
void write_fmap(std::ostream& out, const FeatureMap& map);
FeatureMap read_fmap(std::istream& in);

// "DPTH1", u32 width, height, float32 meters row-major; 0 is a hole. Little endian.
void write_depth(std::ostream& out, const DepthMap& depth);
DepthMap read_depth(std::istream& in);
DepthMap read_depth_file(const std::filesystem::path& path);
void write_depth_file(const std::filesystem::path& path, const DepthMap& depth);

// {fx, fy, cx, cy, gravity:[gx,gy,gz], width?, height?}
std::string rig_to_json(const CameraRig& rig);
CameraRig rig_from_json(std::string_view text);

// {direction, steps:[{width_m, height_m}], yaw_deg, pitch_deg, roll_deg, ...}
std::string measurement_to_json(const StairMeasurement& m);

// [{x1,y1,x2,y2,k,b,member_count}]
std::string lines_to_json(const std::vector<StairLine2D>& lines);
std::vector<StairLine2D> lines_from_json(std::string_view text);

std::string metrics_to_json(const MetricReport& r);

std::string scene_manifest_json(const SceneSpec& spec, int label_count);

}  // namespace stairkit::io
