#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "stairkit/error.hpp"
#include "stairkit/io.hpp"
#include "stairkit/overlay.hpp"

using namespace stairkit;

TEST_CASE("grid dump round trip") {
  std::mt19937_64 rng(1);
  const DetectionGrid g = oracle::random_grid(rng);
  const DetectionGrid back = io::grid_from_json(io::grid_to_json(g));
  CHECK(back == g);

  CHECK_THROWS_AS(io::grid_from_json("{"), ParseError);
  CHECK_THROWS_AS(io::grid_from_json(R"({"rows":32,"cols":16,"image_dims":[512,512]})"), ParseError);
  CHECK_THROWS_AS(io::grid_from_json(
                      R"({"rows":32,"cols":16,"image_dims":[512,512],"cells":[{"i":40,"j":0,"conf":1,"coords":[0,0,0,0,0,0,0,0]}]})"),
                  ParseError);
  CHECK_THROWS_AS(io::grid_from_json(
                      R"({"rows":32,"cols":16,"image_dims":[512,512],"cells":[{"i":1,"j":0,"conf":1,"coords":[0,0]}]})"),
                  ParseError);
}

TEST_CASE("FMAP1 round trip") {
  FeatureMap m(3, 2, 4);
  for (std::size_t k = 0; k < m.size(); ++k) m.data()[k] = 0.25 * double(k) - 1.0;
  std::stringstream ss;
  io::write_fmap(ss, m);
  CHECK(ss.str().size() == 5 + 12 + 4 * m.size());
  CHECK(ss.str().substr(0, 5) == "FMAP1");
  CHECK(io::read_fmap(ss) == m);
  std::stringstream bad("FMAP2xxxxxxxxxxxx");
  CHECK_THROWS_AS(io::read_fmap(bad), ParseError);
  std::stringstream truncated(std::string("FMAP1\x01\x00\x00\x00", 9));
  CHECK_THROWS_AS(io::read_fmap(truncated), ParseError);
}

TEST_CASE("DPTH1 round trip and layout") {
  DepthMap d(3, 2);
  d.at(1, 0) = 1.5f;
  d.at(2, 1) = 0.25f;
  std::stringstream ss;
  io::write_depth(ss, d);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 5) == "DPTH1");
  CHECK(static_cast<unsigned char>(bytes[5]) == 3);  // width first, little endian
  CHECK(static_cast<unsigned char>(bytes[9]) == 2);
  const DepthMap back = io::read_depth(ss);
  CHECK(back.width == 3);
  CHECK(back.data == d.data);
}

TEST_CASE("rig JSON") {
  CameraRig rig;
  rig.fx = 500;
  rig.gravity = Vec3(0.1, 9.7, 1.2);
  const CameraRig back = io::rig_from_json(io::rig_to_json(rig));
  CHECK(back.fx == 500);
  CHECK(back.gravity == rig.gravity);
  const auto minimal = io::rig_from_json(R"({"fx":1,"fy":2,"cx":3,"cy":4,"gravity":[0,1,0]})");
  CHECK(minimal.image.width == 512);
  CHECK_THROWS_AS(io::rig_from_json(R"({"fx":1,"fy":2,"cx":3,"gravity":[0,1,0]})"), ParseError);
  CHECK_THROWS_AS(io::rig_from_json(R"({"fx":1,"fy":2,"cx":3,"cy":4,"gravity":[0,0,0]})"),
                  ParseError);
  CHECK_THROWS_AS(io::rig_from_json(R"({"fx":"a","fy":2,"cx":3,"cy":4,"gravity":[0,1,0]})"),
                  ParseError);
}

TEST_CASE("lines JSON round trip") {
  StairLine2D l;
  l.x1 = 1;
  l.y1 = 2;
  l.x2 = 300;
  l.y2 = 4;
  l.k = 0.5;
  l.b = -3;
  l.members.push_back({{1, 2}, {3, 4}});
  const auto back = io::lines_from_json(io::lines_to_json({l}));
  REQUIRE(back.size() == 1);
  CHECK(back[0].x2 == 300);
  CHECK(back[0].k == 0.5);
  CHECK(io::lines_to_json({l}).find("\"member_count\": 1") != std::string::npos);
}

TEST_CASE("overlay SVG") {
  const std::string empty = render_overlay_svg({512, 512}, {}, {});
  CHECK(empty.find("<svg") != std::string::npos);
  CHECK(empty.find("<path") == std::string::npos);
  CHECK(empty.find("</svg>") != std::string::npos);

  StairLine2D l;
  l.x1 = 10;
  l.x2 = 500;
  l.k = 0.5;
  l.b = 20;
  const std::string one = render_overlay_svg({512, 512}, {}, {l});
  CHECK(one.find("d=\"M 10 25 L 500 270\"") != std::string::npos);
  std::size_t paths = 0;
  for (auto pos = one.find("<path"); pos != std::string::npos; pos = one.find("<path", pos + 1))
    ++paths;
  CHECK(paths == 1);

  const std::vector<StairLineLabel> gt{{LineClass::Concave, 0, 1.25, 512, 3.5}};
  const std::string a = render_overlay_svg({512, 512}, gt, {l, l});
  CHECK(a == render_overlay_svg({512, 512}, gt, {l, l}));
  CHECK(a.find("class=\"gt concave\"") != std::string::npos);
  CHECK(a.find("data-cluster=\"1\"") != std::string::npos);
}
