#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "rawhdr/noise_model.hpp"
#include "rawhdr/util.hpp"

using namespace rawhdr;

namespace {

NoiseCurve make_curve(double a, double b) {
  NoiseCurve curve;
  for (auto& m : curve.channels) {
    m.a = a;
    m.b = b;
  }
  return curve;
}

// Flat frames at a given level with additive Gaussian noise of std sigma(x).
RawStack flat_noisy_stack(int frames, int size, double level, double noise_a, double noise_b,
                          uint64_t seed) {
  RawStack stack;
  stack.black_offset = 100;
  stack.white_level = 4095;
  for (int f = 0; f < frames; ++f) {
    QuadFrame quad;
    quad.exposure_time = 0.1 * (f + 1);
    Rng rng(mix_seed(seed, f));
    for (int c = 0; c < 4; ++c) {
      quad.channels[c] = Plane(size, size, level);
      for (double& v : quad.channels[c].pixels())
        v += std::sqrt(noise_a * v + noise_b) * rng.normal();
    }
    stack.frames.push_back(std::move(quad));
  }
  stack.reference_index = static_cast<int>(stack.frames.size()) - 1;
  return stack;
}

}  // namespace

TEST_CASE("eval_sigma follows the fitted linear model") {
  CHECK(eval_sigma(make_curve(1.0, 0.0), 0, 25.0) == doctest::Approx(5.0));
  CHECK(eval_sigma(make_curve(0.0, 4.0), 2, 123.0) == doctest::Approx(2.0));
  CHECK(eval_sigma(make_curve(0.0, 4.0), 2, -50.0) == doctest::Approx(2.0));
  // Below the floor the clamp takes over.
  const NoiseCurve curve = make_curve(1.0, 0.0);
  CHECK(eval_sigma(curve, 0, -10.0) == doctest::Approx(curve.sigma_floor));
}

TEST_CASE("scale_noise_curve applies the exposure rescaling") {
  const NoiseCurve identity = scale_noise_curve(make_curve(1.5, 7.0), 0.2, 0.2);
  CHECK(identity.channels[0].a == doctest::Approx(1.5));
  CHECK(identity.channels[0].b == doctest::Approx(7.0));

  const NoiseCurve doubled = scale_noise_curve(make_curve(1.0, 0.0), 0.2, 0.1);
  CHECK(doubled.channels[0].a == doctest::Approx(2.0));
  CHECK(doubled.channels[0].b == doctest::Approx(0.0));

  const NoiseCurve offset = scale_noise_curve(make_curve(0.0, 1.0), 0.2, 0.1);
  CHECK(offset.channels[0].b == doctest::Approx(4.0));

  CHECK_THROWS_AS(scale_noise_curve(make_curve(1, 1), -0.1, 0.2), Error);
}

TEST_CASE("scale_noise_curve is invertible") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    NoiseCurve curve = make_curve(0.1 + rng.uniform(), 20.0 * rng.uniform());
    curve.channels[0].control_points = {{100.0, 8.0}, {900.0, 22.0}};
    const double tau_r = 0.05 + rng.uniform();
    const double tau_i = 0.05 + rng.uniform();
    const NoiseCurve back =
        scale_noise_curve(scale_noise_curve(curve, tau_r, tau_i), tau_i, tau_r);
    for (int c = 0; c < 4; ++c) {
      CHECK(back.channels[c].a == doctest::Approx(curve.channels[c].a).epsilon(1e-12));
      CHECK(back.channels[c].b == doctest::Approx(curve.channels[c].b).epsilon(1e-12));
    }
    CHECK(back.channels[0].control_points[1][0] == doctest::Approx(900.0).epsilon(1e-12));
    CHECK(back.channels[0].control_points[1][1] == doctest::Approx(22.0).epsilon(1e-12));
  }
}

TEST_CASE("constant-noise stack estimates a flat curve") {
  // sigma = 5 everywhere: a ~ 0, b ~ 25, and sigma(x) within 15% of 5.
  const RawStack stack = flat_noisy_stack(2, 128, 1800.0, 0.0, 25.0, 99);
  const NoiseCurve curve = estimate_noise_curve(stack);
  for (int c = 0; c < 4; ++c) {
    for (double x : {0.0, 1800.0, 4095.0}) {
      CHECK(eval_sigma(curve, c, x) == doctest::Approx(5.0).epsilon(0.15));
    }
  }
}

TEST_CASE("linear-variance stack recovers the slope") {
  // sigma^2(x) = 0.5 x: a ramp spanning the range, Monte-Carlo oracle.
  RawStack stack;
  stack.black_offset = 0;
  stack.white_level = 4095;
  for (int f = 0; f < 2; ++f) {
    QuadFrame quad;
    quad.exposure_time = 0.1 * (f + 1);
    Rng rng(mix_seed(31, f));
    for (int c = 0; c < 4; ++c) {
      quad.channels[c] = Plane(256, 256);
      for (int y = 0; y < 256; ++y)
        for (int x = 0; x < 256; ++x) {
          const double clean = 100.0 + 3500.0 * x / 255.0;
          quad.channels[c].at(x, y) = clean + std::sqrt(0.5 * clean) * rng.normal();
        }
    }
    stack.frames.push_back(std::move(quad));
  }
  stack.reference_index = 1;

  const NoiseCurve curve = estimate_noise_curve(stack);
  for (int c = 0; c < 4; ++c) {
    CHECK(curve.channels[c].a == doctest::Approx(0.5).epsilon(0.15));
    CHECK(std::abs(curve.channels[c].b) < 25.0);  // near zero on the sigma^2 scale
  }
}

TEST_CASE("noise-free input clamps at the sigma floor") {
  const RawStack stack = flat_noisy_stack(1, 64, 500.0, 0.0, 0.0, 1);
  const NoiseCurve curve = estimate_noise_curve(stack);
  for (int c = 0; c < 4; ++c) {
    for (const auto& p : curve.channels[c].control_points)
      CHECK(p[1] == doctest::Approx(curve.sigma_floor));
    CHECK(eval_sigma(curve, c, 500.0) == doctest::Approx(curve.sigma_floor));
  }
}

TEST_CASE("too few patches for the bin count is an estimation error") {
  const RawStack stack = flat_noisy_stack(1, 16, 500.0, 0.0, 25.0, 1);
  CHECK_THROWS_WITH_AS(estimate_noise_curve(stack), doctest::Contains("bins"), Error);
}

TEST_CASE("estimation is channel-independent") {
  RawStack stack = flat_noisy_stack(1, 96, 1000.0, 0.0, 9.0, 17);
  // Give channel 3 a distinct noise level, then swap with channel 0.
  Rng rng(404);
  for (double& v : stack.frames[0].channels[3].pixels())
    v = 1000.0 + 12.0 * rng.normal();
  const NoiseCurve before = estimate_noise_curve(stack);
  std::swap(stack.frames[0].channels[0], stack.frames[0].channels[3]);
  const NoiseCurve after = estimate_noise_curve(stack);
  CHECK(after.channels[0].b == before.channels[3].b);
  CHECK(after.channels[3].b == before.channels[0].b);
  CHECK(after.channels[1].b == before.channels[1].b);
}

TEST_CASE("noise curve file round trip") {
  namespace fs = std::filesystem;
  NoiseCurve curve = make_curve(0.47, 11.25);
  curve.channels[2].control_points = {{120.5, 7.75}, {900.25, 21.5}};
  curve.sigma_floor = 2e-3;
  const fs::path path = fs::temp_directory_path() / "rawhdr_test_curve.txt";
  save_noise_curve(curve, path.string());
  const NoiseCurve loaded = load_noise_curve(path.string());
  for (int c = 0; c < 4; ++c) {
    CHECK(loaded.channels[c].a == curve.channels[c].a);
    CHECK(loaded.channels[c].b == curve.channels[c].b);
  }
  CHECK(loaded.sigma_floor == curve.sigma_floor);
  REQUIRE(loaded.channels[2].control_points.size() == 2);
  CHECK(loaded.channels[2].control_points[1][0] == 900.25);
  fs::remove(path);
}
