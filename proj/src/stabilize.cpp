#include "rawhdr/stabilize.hpp"

#include <cmath>

namespace rawhdr {

namespace {
constexpr double kLinearBranchEps = 1e-12;

double forward_nonneg(const NoiseChannelModel& m, double sigma0, double sigma_floor, double x) {
  if (m.a > kLinearBranchEps) {
    const double b = std::max(m.b, 0.0);
    return 2.0 * sigma0 / m.a * (std::sqrt(m.a * x + b) - std::sqrt(b));
  }
  const double sigma = std::max(std::sqrt(std::max(m.b, 0.0)), sigma_floor);
  return sigma0 * x / sigma;
}

double inverse_nonneg(const NoiseChannelModel& m, double sigma0, double sigma_floor, double y) {
  if (m.a > kLinearBranchEps) {
    const double b = std::max(m.b, 0.0);
    const double t = m.a * y / (2.0 * sigma0) + std::sqrt(b);
    return (t * t - b) / m.a;
  }
  const double sigma = std::max(std::sqrt(std::max(m.b, 0.0)), sigma_floor);
  return y * sigma / sigma0;
}
}  // namespace

QuadFrame normalize_exposure(const QuadFrame& frame, double tau_ref, double black_offset) {
  if (tau_ref <= 0.0 || frame.exposure_time <= 0.0)
    throw Error("exposure times must be positive");
  const double gain = tau_ref / frame.exposure_time;
  QuadFrame out = frame;
  for (auto& plane : out.channels)
    for (double& v : plane.pixels()) v = black_offset + gain * (v - black_offset);
  return out;
}

double vst_value(const NoiseChannelModel& model, double sigma0, double sigma_floor, double x) {
  // Odd extension keeps sub-black noise zero-mean instead of clipping it.
  return x >= 0.0 ? forward_nonneg(model, sigma0, sigma_floor, x)
                  : -forward_nonneg(model, sigma0, sigma_floor, -x);
}

double vst_value_inverse(const NoiseChannelModel& model, double sigma0, double sigma_floor,
                         double y) {
  return y >= 0.0 ? inverse_nonneg(model, sigma0, sigma_floor, y)
                  : -inverse_nonneg(model, sigma0, sigma_floor, -y);
}

StabilizedFrame vst_forward(const QuadFrame& frame, const NoiseCurve& curve, double sigma0,
                            double tau_ref) {
  if (sigma0 <= 0.0) throw Error("sigma0 must be positive");
  if (frame.exposure_time <= 0.0 || tau_ref <= 0.0)
    throw Error("exposure times must be positive");
  StabilizedFrame out;
  out.exposure_time = frame.exposure_time;
  out.stabilized_sigma = sigma0 * std::sqrt(tau_ref / frame.exposure_time);
  for (int c = 0; c < 4; ++c) {
    out.channels[c] = frame.channels[c];
    const NoiseChannelModel& m = curve.channels[c];
    for (double& v : out.channels[c].pixels()) v = vst_value(m, sigma0, curve.sigma_floor, v);
  }
  return out;
}

QuadFrame vst_inverse(const StabilizedFrame& frame, const NoiseCurve& curve, double sigma0) {
  if (sigma0 <= 0.0) throw Error("sigma0 must be positive");
  QuadFrame out;
  out.exposure_time = frame.exposure_time;
  for (int c = 0; c < 4; ++c) {
    out.channels[c] = frame.channels[c];
    const NoiseChannelModel& m = curve.channels[c];
    for (double& v : out.channels[c].pixels())
      v = vst_value_inverse(m, sigma0, curve.sigma_floor, v);
  }
  return out;
}

}  // namespace rawhdr
