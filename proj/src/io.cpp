#include "stairkit/io.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "stairkit/error.hpp"

namespace stairkit::io {

using nlohmann::json;

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

float get_f32(std::istream& in) {
  const std::uint32_t bits = get_u32(in);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

void expect_magic(std::istream& in, const char (&magic)[6]) {
  char buf[5];
  if (!in.read(buf, 5) || std::memcmp(buf, magic, 5) != 0)
    throw ParseError(std::string("missing ") + magic + " header");
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string grid_to_json(const DetectionGrid& grid) {
  json j;
  j["rows"] = grid.rows();
  j["cols"] = grid.cols();
  j["image_dims"] = {grid.image_dims().width, grid.image_dims().height};
  json cells = json::array();
  for (int i = 0; i < grid.rows(); ++i)
    for (int k = 0; k < grid.cols(); ++k)
      if (const auto& c = grid.at(i, k); c.conf > 0.0)
        cells.push_back({{"i", i}, {"j", k}, {"conf", c.conf}, {"coords", c.coords}});
  j["cells"] = std::move(cells);
  return j.dump();
}

DetectionGrid grid_from_json(std::string_view text) {
  const json j = parse_json(text);
  const auto dims = field<std::vector<int>>(j, "image_dims");
  if (dims.size() != 2) throw ParseError("image_dims must hold two integers");
  DetectionGrid grid = [&] {
    try {
      return DetectionGrid({field<int>(j, "rows"), field<int>(j, "cols")}, {dims[0], dims[1]});
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what());
    }
  }();
  if (!j.contains("cells") || !j["cells"].is_array()) throw ParseError("missing cells array");
  for (const auto& c : j["cells"]) {
    const int i = field<int>(c, "i");
    const int k = field<int>(c, "j");
    if (i < 0 || i >= grid.rows() || k < 0 || k >= grid.cols())
      throw ParseError("cell index outside grid");
    CellPrediction& cell = grid.at(i, k);
    cell.conf = field<double>(c, "conf");
    const auto coords = field<std::vector<double>>(c, "coords");
    if (coords.size() != 8) throw ParseError("cell coords must hold 8 numbers");
    std::copy(coords.begin(), coords.end(), cell.coords.begin());
  }
  return grid;
}

void write_fmap(std::ostream& out, const FeatureMap& map) {
  out.write("FMAP1", 5);
  put_u32(out, static_cast<std::uint32_t>(map.height()));
  put_u32(out, static_cast<std::uint32_t>(map.width()));
  put_u32(out, static_cast<std::uint32_t>(map.channels()));
  for (double v : map.data()) put_f32(out, static_cast<float>(v));
}

FeatureMap read_fmap(std::istream& in) {
  expect_magic(in, "FMAP1");
  const auto h = get_u32(in), w = get_u32(in), c = get_u32(in);
  if (h == 0 || w == 0 || c == 0 || std::uint64_t(h) * w * c > (1ull << 31))
    throw ParseError("bad FMAP1 dims");
  std::vector<double> data(std::size_t(h) * w * c);
  for (double& v : data) {
    v = get_f32(in);
    if (!std::isfinite(v)) throw ParseError("non-finite FMAP1 entry");
  }
  return FeatureMap(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c),
                    std::move(data));
}

void write_depth(std::ostream& out, const DepthMap& depth) {
  out.write("DPTH1", 5);
  put_u32(out, static_cast<std::uint32_t>(depth.width));
  put_u32(out, static_cast<std::uint32_t>(depth.height));
  for (float v : depth.data) put_f32(out, v);
}

DepthMap read_depth(std::istream& in) {
  expect_magic(in, "DPTH1");
  const auto w = get_u32(in), h = get_u32(in);
  if (w == 0 || h == 0 || std::uint64_t(w) * h > (1ull << 28)) throw ParseError("bad DPTH1 dims");
  DepthMap d(static_cast<int>(w), static_cast<int>(h));
  for (float& v : d.data) v = get_f32(in);
  return d;
}

DepthMap read_depth_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_depth(in);
}

void write_depth_file(const std::filesystem::path& path, const DepthMap& depth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_depth(out, depth);
}

std::string rig_to_json(const CameraRig& rig) {
  json j{{"fx", rig.fx},
         {"fy", rig.fy},
         {"cx", rig.cx},
         {"cy", rig.cy},
         {"gravity", {rig.gravity.x(), rig.gravity.y(), rig.gravity.z()}},
         {"width", rig.image.width},
         {"height", rig.image.height}};
  return j.dump(2);
}

CameraRig rig_from_json(std::string_view text) {
  const json j = parse_json(text);
  CameraRig rig;
  rig.fx = field<double>(j, "fx");
  rig.fy = field<double>(j, "fy");
  rig.cx = field<double>(j, "cx");
  rig.cy = field<double>(j, "cy");
  const auto g = field<std::vector<double>>(j, "gravity");
  if (g.size() != 3) throw ParseError("gravity must hold three numbers");
  rig.gravity = Vec3(g[0], g[1], g[2]);
  if (j.contains("width")) rig.image.width = field<int>(j, "width");
  if (j.contains("height")) rig.image.height = field<int>(j, "height");
  if (!(rig.fx > 0.0) || !(rig.fy > 0.0)) throw ParseError("focal lengths must be positive");
  if (!(rig.gravity.norm() > 0.0)) throw ParseError("gravity must be nonzero");
  return rig;
}

std::string measurement_to_json(const StairMeasurement& m) {
  json steps = json::array();
  for (const auto& s : m.steps) steps.push_back({{"width_m", s.width}, {"height_m", s.height}});
  json edges = json::array();
  for (const auto& p : m.edge_points) edges.push_back({p.x(), p.y(), p.z()});
  json j{{"direction", m.direction ? to_string(*m.direction) : "unknown"},
         {"steps", std::move(steps)},
         {"yaw_deg", m.yaw * kRadToDeg},
         {"pitch_deg", m.pitch * kRadToDeg},
         {"roll_deg", m.roll * kRadToDeg},
         {"direction_heuristic", m.direction_heuristic},
         {"lines_detected", m.lines_detected},
         {"lines_used", m.lines_used},
         {"edge_points", std::move(edges)},
         {"diagnostics", m.diagnostics}};
  return j.dump(2);
}

std::string lines_to_json(const std::vector<StairLine2D>& lines) {
  json arr = json::array();
  for (const auto& l : lines)
    arr.push_back({{"x1", l.x1},
                   {"y1", l.y1},
                   {"x2", l.x2},
                   {"y2", l.y2},
                   {"k", l.k},
                   {"b", l.b},
                   {"member_count", l.members.size()}});
  return arr.dump(2);
}

std::vector<StairLine2D> lines_from_json(std::string_view text) {
  const json j = parse_json(text);
  if (!j.is_array()) throw ParseError("expected a JSON array of lines");
  std::vector<StairLine2D> out;
  for (const auto& e : j) {
    StairLine2D l;
    l.x1 = field<double>(e, "x1");
    l.y1 = field<double>(e, "y1");
    l.x2 = field<double>(e, "x2");
    l.y2 = field<double>(e, "y2");
    l.k = field<double>(e, "k");
    l.b = field<double>(e, "b");
    out.push_back(std::move(l));
  }
  return out;
}

std::string metrics_to_json(const MetricReport& r) {
  return json{{"tp", r.tp},
              {"fp", r.fp},
              {"fn", r.fn},
              {"accuracy", r.accuracy},
              {"recall", r.recall},
              {"iou", r.iou}}
      .dump();
}

std::string scene_manifest_json(const SceneSpec& s, int label_count) {
  const auto& c = s.camera_position;
  json j{{"n_steps", s.n_steps},
         {"step_width", s.step_width},
         {"step_height", s.step_height},
         {"step_span", s.step_span},
         {"landing_length", s.landing_length},
         {"camera_position", {c.x(), c.y(), c.z()}},
         {"pitch_deg", s.camera_attitude.pitch * kRadToDeg},
         {"roll_deg", s.camera_attitude.roll * kRadToDeg},
         {"yaw_deg", s.camera_attitude.yaw * kRadToDeg},
         {"direction", to_string(s.direction)},
         {"fx", s.rig.fx},
         {"fy", s.rig.fy},
         {"cx", s.rig.cx},
         {"cy", s.rig.cy},
         {"width", s.rig.image.width},
         {"height", s.rig.image.height},
         {"depth_noise_sigma", s.depth_noise_sigma},
         {"depth_quantization", s.depth_quantization},
         {"rng_seed", s.rng_seed},
         {"label_count", label_count}};
  return j.dump(2);
}

}  // namespace stairkit::io
