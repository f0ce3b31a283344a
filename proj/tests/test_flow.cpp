#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rawhdr/flow.hpp"
#include "rawhdr/util.hpp"

using namespace rawhdr;

namespace {

// Smooth random texture, generated independently of the simulator.
Plane test_texture(int w, int h, uint64_t seed) {
  Plane img(w, h);
  Rng rng(seed);
  for (double& v : img.pixels()) v = rng.uniform();
  Plane blurred(w, h);
  for (int pass = 0; pass < 2; ++pass) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        int cnt = 0;
        for (int dy = -3; dy <= 3; ++dy)
          for (int dx = -3; dx <= 3; ++dx) {
            const int xx = std::clamp(x + dx, 0, w - 1);
            const int yy = std::clamp(y + dy, 0, h - 1);
            acc += img.at(xx, yy);
            ++cnt;
          }
        blurred.at(x, y) = acc / cnt;
      }
    img = blurred;
  }
  double mn = img.at(0, 0), mx = mn;
  for (double v : img.pixels()) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  for (double& v : img.pixels()) v = (v - mn) / (mx - mn);
  return img;
}

// Integer shift with border replication: shifted(x) = src(x - dx, y - dy).
Plane shift_image(const Plane& src, int dx, int dy) {
  Plane out(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) {
      const int sx = std::clamp(x - dx, 0, src.width() - 1);
      const int sy = std::clamp(y - dy, 0, src.height() - 1);
      out.at(x, y) = src.at(sx, sy);
    }
  return out;
}

// Fraction of interior pixels whose endpoint error stays under `tol`.
double translation_inlier_fraction(const FlowField& flow, double dx, double dy, double tol,
                                   int margin) {
  int good = 0, total = 0;
  for (int y = margin; y < flow.height() - margin; ++y)
    for (int x = margin; x < flow.width() - margin; ++x) {
      const double err = std::hypot(flow.u.at(x, y) - dx, flow.v.at(x, y) - dy);
      good += err <= tol ? 1 : 0;
      ++total;
    }
  return static_cast<double>(good) / total;
}

FlowField constant_flow(int w, int h, double u, double v) {
  FlowField flow;
  flow.u = Plane(w, h, u);
  flow.v = Plane(w, h, v);
  return flow;
}

}  // namespace

TEST_CASE("identical planes give near-zero flow") {
  const Plane tex = test_texture(64, 64, 1);
  const FlowField flow = estimate_flow(tex, tex);
  for (size_t i = 0; i < flow.u.size(); ++i) {
    CHECK(std::abs(flow.u.pixels()[i]) <= 0.1);
    CHECK(std::abs(flow.v.pixels()[i]) <= 0.1);
  }
}

TEST_CASE("integer translations are recovered") {
  const Plane tex = test_texture(96, 96, 2);

  // target(x) = source(x + flow): estimating from the shifted source back to
  // the original recovers the shift itself.
  const FlowField flow_x = estimate_flow(shift_image(tex, 2, 0), tex);
  CHECK(translation_inlier_fraction(flow_x, 2.0, 0.0, 0.5, 12) >= 0.90);

  const FlowField flow_y = estimate_flow(shift_image(tex, 0, 3), tex);
  CHECK(translation_inlier_fraction(flow_y, 0.0, 3.0, 0.5, 12) >= 0.90);
}

TEST_CASE("reciprocity mask on constructed fields") {
  const int w = 32, h = 24;
  SUBCASE("exactly reciprocal pair is valid in the interior") {
    const Mask mask = consistency_mask(constant_flow(w, h, 2, 0), constant_flow(w, h, -2, 0),
                                       1.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const bool in = x + 2 <= w - 1;
        CHECK(static_cast<bool>(mask.at(x, y)) == in);
      }
  }
  SUBCASE("violated reciprocity is invalid everywhere") {
    const Mask mask =
        consistency_mask(constant_flow(w, h, 2, 0), constant_flow(w, h, 0, 0), 1.0);
    for (auto v : mask.pixels()) CHECK(v == 0);
  }
  SUBCASE("out-of-bounds forward targets are invalid") {
    const Mask mask = consistency_mask(constant_flow(w, h, 5, 0), constant_flow(w, h, -5, 0),
                                       1.0);
    for (int y = 0; y < h; ++y) {
      CHECK(!mask.at(w - 3, y));
      CHECK(mask.at(w - 6, y));
    }
  }
}

TEST_CASE("warping") {
  SUBCASE("zero flow is the identity") {
    const Plane tex = test_texture(20, 20, 3);
    const WarpResult out = warp_frame({&tex}, constant_flow(20, 20, 0, 0));
    CHECK(out.planes[0] == tex);
    for (auto v : out.valid.pixels()) CHECK(v == 1);
  }
  SUBCASE("bilinear warp is exact on a linear ramp") {
    Plane ramp(16, 16);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) ramp.at(x, y) = x;
    const WarpResult out = warp_frame({&ramp}, constant_flow(16, 16, 1.0, 0.0));
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 15; ++x) {
        CHECK(out.valid.at(x, y));
        CHECK(out.planes[0].at(x, y) == doctest::Approx(x + 1.0));
      }
    for (int y = 0; y < 16; ++y) CHECK(!out.valid.at(15, y));
  }
  SUBCASE("forward then backward warp is near identity") {
    const Plane tex = test_texture(48, 48, 4);
    const FlowField fwd = constant_flow(48, 48, 1.5, -0.75);
    const FlowField bwd = constant_flow(48, 48, -1.5, 0.75);
    const WarpResult once = warp_frame({&tex}, fwd);
    const WarpResult back = warp_frame({&once.planes[0]}, bwd);
    for (int y = 4; y < 44; ++y)
      for (int x = 4; x < 44; ++x)
        CHECK(back.planes[0].at(x, y) == doctest::Approx(tex.at(x, y)).epsilon(1e-2));
  }
}

namespace {

std::vector<StabilizedFrame> stabilized_from_planes(const std::vector<Plane>& planes) {
  std::vector<StabilizedFrame> frames;
  for (const Plane& p : planes) {
    StabilizedFrame f;
    for (int c = 0; c < 4; ++c) f.channels[c] = p;
    f.exposure_time = 0.1;
    f.stabilized_sigma = 1.0;
    frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<QuadFrame> quads_from_planes(const std::vector<Plane>& planes) {
  std::vector<QuadFrame> frames;
  for (const Plane& p : planes) {
    QuadFrame f;
    for (int c = 0; c < 4; ++c) f.channels[c] = p;
    f.exposure_time = 0.1;
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace

TEST_CASE("static stacks align to themselves") {
  Plane tex = test_texture(64, 64, 5);
  for (double& v : tex.pixels()) v = 100.0 + 900.0 * v;
  const std::vector<Plane> planes = {tex, tex, tex};
  const AlignedStack aligned = align_stack(stabilized_from_planes(planes),
                                           quads_from_planes(planes), 1, 100.0, 4095.0, {});

  // Reference passes through bitwise, mask all-valid.
  CHECK(aligned.frames[1].channels[0] == tex);
  for (auto v : aligned.masks[1].pixels()) CHECK(v == 1);

  for (int i : {0, 2}) {
    size_t valid = 0;
    for (auto v : aligned.masks[i].pixels()) valid += v;
    CHECK(static_cast<double>(valid) / aligned.masks[i].size() >= 0.99);
    double max_dev = 0.0;
    for (size_t px = 0; px < tex.size(); ++px)
      if (aligned.masks[i].pixels()[px])
        max_dev = std::max(max_dev, std::abs(aligned.frames[i].channels[0].pixels()[px] -
                                             tex.pixels()[px]));
    CHECK(max_dev <= 0.01 * 900.0);
  }
}

TEST_CASE("globally translated stacks align to the reference") {
  Plane tex = test_texture(80, 80, 6);
  for (double& v : tex.pixels()) v = 100.0 + 900.0 * v;
  const std::vector<Plane> planes = {shift_image(tex, -2, 0), tex, shift_image(tex, 2, 0)};
  const AlignedStack aligned = align_stack(stabilized_from_planes(planes),
                                           quads_from_planes(planes), 1, 100.0, 4095.0, {});
  for (int i : {0, 2}) {
    double acc = 0.0;
    size_t count = 0;
    for (size_t px = 0; px < tex.size(); ++px) {
      if (!aligned.masks[i].pixels()[px]) continue;
      const double d = aligned.frames[i].channels[0].pixels()[px] - tex.pixels()[px];
      acc += d * d;
      ++count;
    }
    REQUIRE(count > tex.size() / 2);
    CHECK(std::sqrt(acc / count) <= 0.02 * 900.0);
  }
}
