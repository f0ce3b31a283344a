#include <doctest.h>

#include <cmath>

#include "rawhdr/colorspace.hpp"
#include "rawhdr/util.hpp"

using namespace rawhdr;

namespace {

std::array<Plane, 4> constant_quad(double r, double g1, double g2, double b) {
  std::array<Plane, 4> quad;
  const double values[4] = {r, g1, g2, b};
  for (int c = 0; c < 4; ++c) quad[c] = Plane(2, 2, values[c]);
  return quad;
}

}  // namespace

TEST_CASE("forward transform matches the matrix columns") {
  const auto out = yuvw_forward(constant_quad(1, 0, 0, 0));
  CHECK(out[0].at(0, 0) == doctest::Approx(0.5));
  CHECK(out[1].at(0, 0) == doctest::Approx(-0.5));
  CHECK(out[2].at(0, 0) == doctest::Approx(0.65));
  CHECK(out[3].at(0, 0) == doctest::Approx(-0.2784));
}

TEST_CASE("gray maps to luminance only") {
  const double c = 123.456;
  const auto out = yuvw_forward(constant_quad(c, c, c, c));
  CHECK(out[0].at(1, 1) == doctest::Approx(2.0 * c));
  for (int ch = 1; ch < 4; ++ch) CHECK(out[ch].at(1, 1) == doctest::Approx(0.0));

  const auto back = yuvw_inverse(out);
  for (int ch = 0; ch < 4; ++ch)
    CHECK(back[ch].at(0, 0) == doctest::Approx(c).epsilon(2e-3));
}

TEST_CASE("inverse applies the transpose") {
  const auto out = yuvw_inverse(constant_quad(1, 0, 0, 0));
  CHECK(out[0].at(0, 0) == doctest::Approx(0.5));
  CHECK(out[1].at(0, 0) == doctest::Approx(-0.5));
  CHECK(out[2].at(0, 0) == doctest::Approx(0.65));
  CHECK(out[3].at(0, 0) == doctest::Approx(-0.2784));
}

TEST_CASE("matrix is orthonormal within the printed precision") {
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 4; ++k) dot += kYuvwMatrix[i][k] * kYuvwMatrix[j][k];
      CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 2e-3);
    }
}

TEST_CASE("round trip and norm preservation on random data") {
  Rng rng(9);
  std::array<Plane, 4> quad;
  for (auto& p : quad) {
    p = Plane(16, 16);
    for (double& v : p.pixels()) v = 100.0 * rng.normal();
  }
  const auto back = yuvw_inverse(yuvw_forward(quad));
  for (int c = 0; c < 4; ++c)
    for (size_t i = 0; i < quad[c].size(); ++i) {
      const double x = quad[c].pixels()[i];
      CHECK(std::abs(back[c].pixels()[i] - x) <= 2e-3 * std::max(1.0, std::abs(x)));
    }

  for (int trial = 0; trial < 50; ++trial) {
    double v[4], out[4] = {0, 0, 0, 0};
    for (double& x : v) x = rng.normal();
    for (int r = 0; r < 4; ++r)
      for (int k = 0; k < 4; ++k) out[r] += kYuvwMatrix[r][k] * v[k];
    const double n_in = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
    const double n_out =
        std::sqrt(out[0] * out[0] + out[1] * out[1] + out[2] * out[2] + out[3] * out[3]);
    CHECK(std::abs(n_out - n_in) <= 2e-3 * std::max(1.0, n_in));
  }
}

TEST_CASE("luminance row keeps unit variance for white noise") {
  Rng rng(41);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double y = 0.0;
    for (int k = 0; k < 4; ++k) y += kYuvwMatrix[0][k] * rng.normal();
    sum += y;
    sum_sq += y * y;
  }
  const double var = sum_sq / n - (sum / n) * (sum / n);
  CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("camera to sRGB conversion") {
  std::array<Plane, 3> rgb = {Plane(2, 2, 0.1), Plane(2, 2, 0.2), Plane(2, 2, 0.3)};

  const std::array<double, 9> identity = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  const auto same = camera_to_srgb(rgb, identity);
  for (int c = 0; c < 3; ++c) CHECK(same[c].at(0, 0) == rgb[c].at(0, 0));

  const std::array<double, 9> diag2 = {2, 0, 0, 0, 1, 0, 0, 0, 1};
  const auto scaled = camera_to_srgb(rgb, diag2);
  CHECK(scaled[0].at(1, 1) == doctest::Approx(0.2));
  CHECK(scaled[1].at(1, 1) == doctest::Approx(0.2));
  CHECK(scaled[2].at(1, 1) == doctest::Approx(0.3));

  // Random matrix against a per-pixel dot-product oracle.
  Rng rng(13);
  std::array<double, 9> m;
  for (double& v : m) v = rng.normal();
  for (auto& p : rgb)
    for (double& v : p.pixels()) v = rng.normal();
  const auto out = camera_to_srgb(rgb, m);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x)
      for (int k = 0; k < 3; ++k) {
        const double expect = m[3 * k] * rgb[0].at(x, y) + m[3 * k + 1] * rgb[1].at(x, y) +
                              m[3 * k + 2] * rgb[2].at(x, y);
        CHECK(out[k].at(x, y) == doctest::Approx(expect).epsilon(1e-6));
      }
}

TEST_CASE("white balance gains") {
  std::array<Plane, 3> rgb = {Plane(1, 1, 1.0), Plane(1, 1, 1.0), Plane(1, 1, 1.0)};
  const auto same = white_balance(rgb, {1, 1, 1});
  CHECK(same[0].at(0, 0) == 1.0);

  const auto scaled = white_balance(rgb, {2.0, 1.0, 0.5});
  CHECK(scaled[0].at(0, 0) == doctest::Approx(2.0));
  CHECK(scaled[1].at(0, 0) == doctest::Approx(1.0));
  CHECK(scaled[2].at(0, 0) == doctest::Approx(0.5));

  CHECK_THROWS_AS(white_balance(rgb, {0.0, 1.0, 1.0}), Error);

  // Diagonal operations commute.
  const std::array<double, 9> diag = {0.5, 0, 0, 0, 2.0, 0, 0, 0, 1.5};
  const auto ab = camera_to_srgb(white_balance(rgb, {2.0, 1.0, 0.5}), diag);
  const auto ba = white_balance(camera_to_srgb(rgb, diag), {2.0, 1.0, 0.5});
  for (int c = 0; c < 3; ++c)
    CHECK(ab[c].at(0, 0) == doctest::Approx(ba[c].at(0, 0)).epsilon(1e-12));
}
