#include <doctest.h>

#include <cmath>

#include "rawhdr/stabilize.hpp"
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

QuadFrame constant_frame(int size, double value, double tau) {
  QuadFrame quad;
  quad.exposure_time = tau;
  for (auto& p : quad.channels) p = Plane(size, size, value);
  return quad;
}

}  // namespace

TEST_CASE("exposure normalization follows Eq-style scaling") {
  QuadFrame frame = constant_frame(2, 1000.0, 0.02);

  const QuadFrame same = normalize_exposure(frame, 0.02, 200.0);
  CHECK(same.channels[0].at(0, 0) == 1000.0);
  CHECK(same.exposure_time == 0.02);

  const QuadFrame doubled = normalize_exposure(frame, 0.04, 200.0);
  CHECK(doubled.channels[0].at(0, 0) == doctest::Approx(1800.0));
  CHECK(doubled.exposure_time == 0.02);  // metadata keeps tau_i

  QuadFrame black = constant_frame(2, 200.0, 0.02);
  const QuadFrame still_black = normalize_exposure(black, 0.17, 200.0);
  CHECK(still_black.channels[0].at(0, 0) == doctest::Approx(200.0));
}

TEST_CASE("normalization is linear in the offset-subtracted signal") {
  Rng rng(7);
  const double offset = 150.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double signal = 3000.0 * rng.uniform();
    const double alpha = 2.0 * rng.uniform();
    QuadFrame frame = constant_frame(1, offset + signal, 0.01);
    QuadFrame scaled = constant_frame(1, offset + alpha * signal, 0.01);
    const double gain = 3.0;
    const QuadFrame a = normalize_exposure(frame, gain * 0.01, offset);
    const QuadFrame b = normalize_exposure(scaled, gain * 0.01, offset);
    CHECK(b.channels[0].at(0, 0) - offset ==
          doctest::Approx(alpha * (a.channels[0].at(0, 0) - offset)).epsilon(1e-12));
  }
}

TEST_CASE("stabilizer closed forms") {
  NoiseChannelModel poisson{1.0, 0.0, {}};
  CHECK(vst_value(poisson, 1.0, 1e-3, 4.0) == doctest::Approx(4.0));
  CHECK(vst_value(poisson, 1.0, 1e-3, 0.0) == doctest::Approx(0.0));
  CHECK(vst_value_inverse(poisson, 1.0, 1e-3, 4.0) == doctest::Approx(4.0));

  NoiseChannelModel constant{0.0, 4.0, {}};
  for (double x : {-3.0, 0.0, 17.5}) {
    CHECK(vst_value(constant, 2.0, 1e-3, x) == doctest::Approx(x));
    CHECK(vst_value_inverse(constant, 2.0, 1e-3, x) == doctest::Approx(x));
  }
}

TEST_CASE("stabilizer round trip within 1e-6 relative") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    NoiseChannelModel model;
    model.a = trial % 4 == 0 ? 0.0 : 2.0 * rng.uniform();
    model.b = trial % 3 == 0 ? 0.0 : 50.0 * rng.uniform();
    if (model.a == 0.0 && model.b == 0.0) model.b = 1.0;
    const double x = -100.0 + 65635.0 * rng.uniform();
    const double y = vst_value(model, 1.0, 1e-3, x);
    const double back = vst_value_inverse(model, 1.0, 1e-3, y);
    CHECK(std::abs(back - x) <= 1e-6 * std::max(1.0, std::abs(x)));
  }
}

TEST_CASE("stabilizer is strictly increasing") {
  NoiseChannelModel model{0.8, 12.0, {}};
  double prev = vst_value(model, 1.0, 1e-3, -200.0);
  for (double x = -199.0; x < 4200.0; x += 7.3) {
    const double y = vst_value(model, 1.0, 1e-3, x);
    CHECK(y > prev);
    prev = y;
  }
}

TEST_CASE("vst_forward records the stabilized sigma scaling") {
  const NoiseCurve curve = make_curve(1.0, 5.0);
  QuadFrame frame = constant_frame(2, 900.0, 0.05);
  const StabilizedFrame stabilized = vst_forward(frame, curve, 1.0, 0.2);
  CHECK(stabilized.stabilized_sigma == doctest::Approx(std::sqrt(0.2 / 0.05)).epsilon(1e-12));
  CHECK(stabilized.exposure_time == 0.05);
  CHECK_THROWS_AS(vst_forward(frame, curve, -1.0, 0.2), Error);
}

TEST_CASE("frame-level round trip") {
  const NoiseCurve curve = make_curve(0.5, 10.0);
  QuadFrame frame = constant_frame(8, 0.0, 0.1);
  Rng rng(3);
  for (auto& p : frame.channels)
    for (double& v : p.pixels()) v = -50.0 + 4200.0 * rng.uniform();
  const StabilizedFrame fwd = vst_forward(frame, curve, 1.0, 0.1);
  const QuadFrame back = vst_inverse(fwd, curve, 1.0);
  for (int c = 0; c < 4; ++c)
    for (size_t i = 0; i < back.channels[c].size(); ++i) {
      const double x = frame.channels[c].pixels()[i];
      CHECK(std::abs(back.channels[c].pixels()[i] - x) <= 1e-6 * std::max(1.0, std::abs(x)));
    }
}

TEST_CASE("stabilized noise is flat across intensity levels") {
  // sigma^2(x) = x; four flat bands, post-transform std within 10% of sigma0.
  const NoiseCurve curve = make_curve(1.0, 0.0);
  const int size = 128;
  Plane band(size, size);
  Rng rng(77);
  const double levels[4] = {100.0, 400.0, 1600.0, 3600.0};
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double clean = levels[y / (size / 4)];
      band.at(x, y) = clean + std::sqrt(clean) * rng.normal();
    }
  for (double& v : band.pixels()) v = vst_value(curve.channels[0], 1.0, 1e-3, v);
  for (int quarter = 0; quarter < 4; ++quarter) {
    double mean = 0.0;
    const int y0 = quarter * (size / 4), y1 = y0 + size / 4;
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < size; ++x) mean += band.at(x, y);
    mean /= size * (size / 4);
    double var = 0.0;
    for (int y = y0; y < y1; ++y)
      for (int x = 0; x < size; ++x) {
        const double d = band.at(x, y) - mean;
        var += d * d;
      }
    var /= size * (size / 4) - 1;
    CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(0.10));
  }
}
