#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "rawhdr/raw_io.hpp"
#include "rawhdr/util.hpp"

using namespace rawhdr;
namespace fs = std::filesystem;

namespace {

RawFrame random_frame(int w, int h, CfaPattern pattern, uint64_t seed) {
  RawFrame frame;
  frame.cfa = pattern;
  frame.data = Image<uint16_t>(w, h);
  Rng rng(seed);
  for (auto& v : frame.data.pixels()) v = static_cast<uint16_t>(rng.next_u64() & 0xffff);
  return frame;
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rawhdr_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("disassemble maps a single RGGB cell to the four planes") {
  RawFrame frame;
  frame.cfa = CfaPattern::RGGB;
  frame.data = Image<uint16_t>(2, 2);
  frame.data.at(0, 0) = 10;
  frame.data.at(1, 0) = 20;
  frame.data.at(0, 1) = 30;
  frame.data.at(1, 1) = 40;

  const QuadFrame quad = disassemble_cfa(frame, 0.01);
  CHECK(quad.width() == 1);
  CHECK(quad.channels[0].at(0, 0) == 10);  // r
  CHECK(quad.channels[1].at(0, 0) == 20);  // g1
  CHECK(quad.channels[2].at(0, 0) == 30);  // g2
  CHECK(quad.channels[3].at(0, 0) == 40);  // b
  CHECK(quad.exposure_time == 0.01);

  const RawFrame back = reassemble_cfa(quad, CfaPattern::RGGB);
  CHECK(back.data == frame.data);
}

TEST_CASE("constant frames disassemble to constant planes") {
  RawFrame frame;
  frame.data = Image<uint16_t>(4, 4, 777);
  const QuadFrame quad = disassemble_cfa(frame, 1.0);
  for (const Plane& p : quad.channels) {
    CHECK(p.width() == 2);
    for (double v : p.pixels()) CHECK(v == 777.0);
  }
  const RawFrame back = reassemble_cfa(quad, frame.cfa);
  CHECK(back.data == frame.data);
}

TEST_CASE("CFA round trip is exact for every pattern") {
  for (CfaPattern pattern : {CfaPattern::RGGB, CfaPattern::BGGR, CfaPattern::GRBG,
                             CfaPattern::GBRG}) {
    for (uint64_t seed = 0; seed < 4; ++seed) {
      const RawFrame frame = random_frame(8, 8, pattern, seed);
      const QuadFrame quad = disassemble_cfa(frame, 1.0);
      const RawFrame back = reassemble_cfa(quad, pattern);
      CHECK(back.data == frame.data);

      // And the float-plane variant used by render/sim.
      const Plane cfa = mosaic_to_plane(quad.channels, pattern);
      const auto quad2 = plane_to_quad(cfa, pattern);
      for (int c = 0; c < 4; ++c) CHECK(quad2[c] == quad.channels[c]);
    }
  }
}

TEST_CASE("disassembly is a bijection on pixel positions") {
  RawFrame frame;
  frame.data = Image<uint16_t>(8, 8);
  for (size_t i = 0; i < frame.data.size(); ++i)
    frame.data.pixels()[i] = static_cast<uint16_t>(i);
  const QuadFrame quad = disassemble_cfa(frame, 1.0);
  std::multiset<double> seen;
  for (const Plane& p : quad.channels) seen.insert(p.pixels().begin(), p.pixels().end());
  CHECK(seen.size() == 64);
  for (int i = 0; i < 64; ++i) CHECK(seen.count(i) == 1);
}

TEST_CASE("odd dimensions are a dimension error") {
  RawFrame frame;
  frame.data = Image<uint16_t>(3, 4);
  CHECK_THROWS_AS(disassemble_cfa(frame, 1.0), Error);
}

TEST_CASE("median reference picks the middle exposure") {
  CHECK(median_reference_index({1.0 / 100, 1.0 / 25, 1.0 / 400}) == 0);
  CHECK(median_reference_index({1.0 / 50, 1.0 / 200}) == 0);  // tie -> longer
  CHECK(median_reference_index({0.1, 0.2, 0.4, 0.8}) == 2);   // even N, upper middle
  CHECK(median_reference_index({2.0, 1.0, 2.0}) == 0);        // duplicate median
}

TEST_CASE("stack save/load preserves metadata exactly") {
  const fs::path dir = temp_dir("stack_roundtrip");
  RawStack stack;
  stack.black_offset = 203;
  stack.white_level = 4095;
  stack.cfa = CfaPattern::GRBG;
  stack.wb_gains = {2.0, 1.0, 1.5};
  stack.srgb_matrix = {1.1, -0.1, 0, 0, 1, 0, 0.05, -0.05, 1};
  for (double tau : {0.0125, 0.05, 0.2}) {
    const RawFrame frame = random_frame(16, 12, stack.cfa, static_cast<uint64_t>(tau * 1e6));
    stack.frames.push_back(disassemble_cfa(frame, tau));
  }
  stack.reference_index = 1;
  save_stack(stack, dir.string());

  const RawStack loaded = load_stack((dir / "stack.meta").string());
  REQUIRE(loaded.size() == 3);
  CHECK(loaded.black_offset == stack.black_offset);
  CHECK(loaded.white_level == stack.white_level);
  CHECK(loaded.cfa == stack.cfa);
  CHECK(loaded.wb_gains == stack.wb_gains);
  CHECK(loaded.srgb_matrix == stack.srgb_matrix);
  CHECK(loaded.reference_index == 1);
  for (int i = 0; i < 3; ++i) {
    CHECK(loaded.exposure(i) == stack.exposure(i));
    for (int c = 0; c < 4; ++c)
      CHECK(loaded.frames[i].channels[c] == stack.frames[i].channels[c]);
  }
  fs::remove_all(dir);
}

TEST_CASE("load errors name the problem") {
  const fs::path dir = temp_dir("stack_errors");
  {
    std::ofstream meta(dir / "missing.meta");
    meta << "black_offset 100\nwhite_level 4000\ncfa_pattern RGGB\n";
    meta << "nonexistent.pgm 0.1\nother.pgm 0.2\n";
  }
  CHECK_THROWS_WITH_AS(load_stack((dir / "missing.meta").string()),
                       doctest::Contains("nonexistent.pgm"), Error);
  {
    std::ofstream meta(dir / "malformed.meta");
    meta << "black_offset 100\nwhite_level 4000\ncfa_pattern RGGB\n";
    meta << "frame.pgm not_a_number\nother.pgm 0.2\n";
  }
  CHECK_THROWS_AS(load_stack((dir / "malformed.meta").string()), Error);
  {
    std::ofstream meta(dir / "single.meta");
    meta << "black_offset 100\nwhite_level 4000\ncfa_pattern RGGB\nframe.pgm 0.1\n";
  }
  CHECK_THROWS_AS(load_stack((dir / "single.meta").string()), Error);
  CHECK_THROWS_AS(load_stack((dir / "absent.meta").string()), Error);
  fs::remove_all(dir);
}

TEST_CASE("pgm16 round trip is exact") {
  const fs::path dir = temp_dir("pgm");
  const RawFrame frame = random_frame(9, 5, CfaPattern::RGGB, 3);
  save_pgm16(frame.data, (dir / "img.pgm").string());
  const auto loaded = load_pgm16((dir / "img.pgm").string());
  CHECK(loaded == frame.data);
  fs::remove_all(dir);
}

TEST_CASE("hdr pfm round trip is exact for float32 data") {
  const fs::path dir = temp_dir("pfm");
  HdrImage hdr;
  Rng rng(11);
  for (int c = 0; c < 4; ++c) {
    hdr.channels[c] = Plane(7, 5);
    for (double& v : hdr.channels[c].pixels())
      v = static_cast<float>(2000.0 * rng.normal());  // float-representable
  }
  save_hdr_pfm(hdr, (dir / "img.pfm").string());
  const HdrImage loaded = load_hdr_pfm((dir / "img.pfm").string());
  for (int c = 0; c < 4; ++c) CHECK(loaded.channels[c] == hdr.channels[c]);
  fs::remove_all(dir);
}

TEST_CASE("8-bit save clamps out-of-range values") {
  const fs::path dir = temp_dir("ppm");
  std::array<Plane, 3> rgb = {Plane(2, 1), Plane(2, 1), Plane(2, 1)};
  rgb[0].at(0, 0) = -40.0;
  rgb[0].at(1, 0) = 300.0;
  rgb[1].at(0, 0) = 99.6;
  rgb[2].at(1, 0) = 255.0;
  save_ppm8(rgb, (dir / "img.ppm").string());
  const Rgb8 loaded = load_ppm8((dir / "img.ppm").string());
  CHECK(loaded.r.at(0, 0) == 0);
  CHECK(loaded.r.at(1, 0) == 255);
  CHECK(loaded.g.at(0, 0) == 100);
  CHECK(loaded.b.at(1, 0) == 255);
  fs::remove_all(dir);
}

TEST_CASE("unknown format tag is a format error") {
  CHECK_THROWS_AS(parse_image_format("jpeg2000"), Error);
  CHECK(parse_image_format("pfm") == ImageFormat::Pfm);
  CHECK(parse_image_format("pgm16") == ImageFormat::Pgm16);
  CHECK(parse_image_format("ppm8") == ImageFormat::Tonemapped8);
}

TEST_CASE("unwritable path is an I/O error") {
  HdrImage hdr;
  for (int c = 0; c < 4; ++c) hdr.channels[c] = Plane(2, 2, 1.0);
  CHECK_THROWS_AS(save_hdr_pfm(hdr, "/nonexistent_dir_xyz/img.pfm"), Error);
}
