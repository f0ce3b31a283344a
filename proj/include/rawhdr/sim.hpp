#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rawhdr/fusion.hpp"
#include "rawhdr/raw_io.hpp"

namespace rawhdr {

/// Ground-truth linear irradiance plus per-frame motion. The irradiance image
/// lives at full CFA resolution with values in [0, 1] per channel before
/// channel_gains.
struct SceneSpec {
  enum class Texture { Ramps, Checkers, NoiseTexture, LoadedImage };
  Texture texture = Texture::Ramps;
  std::string image_path;  // LoadedImage: PGM16 normalized by its max
  int width = 256;         // full CFA resolution, even
  int height = 256;
  std::array<double, 3> channel_gains = {1.0, 0.85, 0.7};
  double min_level = 0.05;  // irradiance floor keeps relative-error checks sane
  double max_level = 1.0;
  double cell_jitter = 0.035;  // Checkers: per-cell, per-channel level spread
  uint64_t texture_seed = 7;

  /// Global translation per frame in quad pixels (empty = static).
  std::vector<std::array<double, 2>> frame_translation;

  /// Optional moving square: center (quad px) in the reference frame,
  /// per-frame velocity (quad px/frame), painted over the background.
  bool moving_rect = false;
  int rect_size = 32;  // quad px
  std::array<double, 2> rect_center = {0, 0};
  std::array<double, 2> rect_velocity = {0, 0};
  double rect_level = 0.9;
};

struct CaptureSpec {
  std::vector<double> exposure_times;
  double black_offset = 200.0;
  double white_level = 4095.0;
  double noise_a = 0.5;  // sigma^2(x) = a*x + b, in counts
  double noise_b = 10.0;
  double gain = 3500.0;  // counts per unit irradiance per second
  CfaPattern cfa = CfaPattern::RGGB;
  uint64_t seed = 0;
};

struct SimulatedCapture {
  RawStack stack;          // float quad frames (no quantization)
  HdrImage ground_truth;   // clean reference-exposure image, offset-free
  std::vector<Plane> cfa;  // noisy full-resolution CFA planes, float counts
};

/// Forward model: translate scene, expose and clip, add heteroscedastic
/// Gaussian noise evaluated at the clean count, re-clip, mosaick, disassemble.
/// Deterministic for a given seed (per-frame streams).
SimulatedCapture simulate_capture(const SceneSpec& scene, const CaptureSpec& cap);

/// 10*log10(peak^2 / MSE), pooled over the 4 channels. Equal images report
/// the sentinel cap 999 dB.
double psnr(const HdrImage& a, const HdrImage& b, double peak);
double psnr_plane(const Plane& a, const Plane& b, double peak);

/// MSE restricted to masked pixels, pooled over channels. Empty mask is an error.
double region_mse(const HdrImage& a, const HdrImage& b, const Mask& mask);

struct ExperimentCheck {
  std::string metric;
  double value = 0.0;
  double threshold = 0.0;
  bool less_is_pass = false;  // pass = value < threshold (else value >= threshold)
  bool pass = false;
};

struct ExperimentReport {
  std::string name;
  std::vector<ExperimentCheck> checks;
  bool pass = true;

  void add(const std::string& metric, double value, double threshold, bool less_is_pass);
};

/// One metric per line: name value threshold PASS|FAIL, then a summary line.
std::string report_to_text(const ExperimentReport& report);

/// Acceptance scenarios: classic-equivalence, vst-flatness, noise-estimation,
/// denoise-gain, deghost, coeff-sweep. Unknown names are an error.
ExperimentReport run_experiment(const std::string& name, uint64_t seed);

std::vector<std::string> experiment_names();

}  // namespace rawhdr
