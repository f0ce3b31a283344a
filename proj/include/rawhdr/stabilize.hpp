#pragma once

#include "rawhdr/noise_model.hpp"
#include "rawhdr/raw_io.hpp"

namespace rawhdr {

/// Exposure-normalized, variance-stabilized 4-channel frame.
/// stabilized_sigma is the uniform noise level after the transform,
/// sigma0 * sqrt(tau_ref / tau_i).
struct StabilizedFrame {
  std::array<Plane, 4> channels;
  double exposure_time = 0.0;
  double stabilized_sigma = 0.0;

  int width() const { return channels[0].width(); }
  int height() const { return channels[0].height(); }
};

/// I_hat = O + (tau_ref/tau_i) * (I - O), per pixel. The exposure_time
/// metadata keeps recording tau_i.
QuadFrame normalize_exposure(const QuadFrame& frame, double tau_ref, double black_offset);

// Scalar stabilizer for one channel model. Closed form of the integral
// of sigma0/sigma(t): for a > 0, f(x) = (2*sigma0/a) * (sqrt(a*x+b) - sqrt(b));
// for a == 0, f(x) = sigma0 * x / sqrt(b). Negative inputs pass through the
// odd extension f(-x) = -f(x) so sub-black noise keeps zero mean.
double vst_value(const NoiseChannelModel& model, double sigma0, double sigma_floor, double x);
double vst_value_inverse(const NoiseChannelModel& model, double sigma0, double sigma_floor,
                         double y);

/// Applies the per-channel stabilizer built from `curve` (the reference-frame
/// curve; the same curve is used for every frame of the stack).
StabilizedFrame vst_forward(const QuadFrame& frame, const NoiseCurve& curve, double sigma0,
                            double tau_ref);

/// Algebraic inverse of vst_forward.
QuadFrame vst_inverse(const StabilizedFrame& frame, const NoiseCurve& curve, double sigma0);

}  // namespace rawhdr
