#pragma once

#include <array>
#include <string>
#include <vector>

#include "rawhdr/raw_io.hpp"

namespace rawhdr {

/// Signal-dependent noise model for one channel: control points (x, sigma)
/// plus the fitted linear-variance parameters sigma^2(x) = a*x + b.
struct NoiseChannelModel {
  double a = 0.0;
  double b = 1.0;
  std::vector<std::array<double, 2>> control_points;  // (intensity, sigma)
};

struct NoiseCurve {
  std::array<NoiseChannelModel, 4> channels;
  double sigma_floor = 1e-3;  // counts; keeps the stabilizer away from 1/0
};

struct NoiseEstimationParams {
  int bins = 8;
  int patch_size = 8;
  double flat_quantile = 0.10;    // keep this fraction of flattest patches per bin
  double saturation_margin = 0.98;  // drop patches whose mean exceeds this * white_level
};

/// DCT flat-patch noise estimation over every frame of the stack, one curve
/// shared by all frames. Channels are processed independently.
NoiseCurve estimate_noise_curve(const RawStack& stack, const NoiseEstimationParams& params = {});

/// sqrt(max(a*x + b, sigma_floor^2)) from the fitted linear model.
double eval_sigma(const NoiseCurve& curve, int channel, double x);

/// Exposure rescaling of the model: (a, b) -> (a*r, b*r^2) with r = tau_ref/tau_i.
/// Control points map as (x, s) -> (r*x, r*s).
NoiseCurve scale_noise_curve(const NoiseCurve& curve, double tau_ref, double tau_i);

void save_noise_curve(const NoiseCurve& curve, const std::string& path);
NoiseCurve load_noise_curve(const std::string& path);

}  // namespace rawhdr
