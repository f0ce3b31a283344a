#include <algorithm>
#include <cmath>

#include "rawhdr/pipeline.hpp"
#include "rawhdr/sim.hpp"
#include "rawhdr/stabilize.hpp"
#include "rawhdr/util.hpp"

namespace rawhdr {

namespace {

// Clean counterpart of a capture: same scene, zero noise.
SimulatedCapture clean_capture(const SceneSpec& scene, CaptureSpec cap) {
  cap.noise_a = 0.0;
  cap.noise_b = 0.0;
  return simulate_capture(scene, cap);
}

NoiseCurve manual_curve(double a, double b) {
  NoiseCurve curve;
  for (auto& m : curve.channels) {
    m.a = a;
    m.b = b;
  }
  return curve;
}

HdrImage reference_as_hdr(const RawStack& stack) {
  HdrImage out;
  const QuadFrame& ref = stack.frames[stack.reference_index];
  for (int c = 0; c < 4; ++c) {
    out.channels[c] = ref.channels[c];
    for (double& v : out.channels[c].pixels()) v -= stack.black_offset;
  }
  return out;
}

// The fusion degeneracy: k=1, K=1, barycenter only, similarity and SNR
// weights forced to 1 must reproduce the classical weighted average.
ExperimentReport experiment_classic_equivalence(uint64_t seed) {
  ExperimentReport report;
  report.name = "classic-equivalence";

  SceneSpec scene;
  scene.texture = SceneSpec::Texture::Ramps;
  scene.width = 128;
  scene.height = 128;
  CaptureSpec cap;
  cap.exposure_times = {0.25, 1.0, 4.0};
  cap.gain = 900.0;  // longest exposure stays below the white level
  cap.noise_a = 0.0;
  cap.noise_b = 0.0;
  cap.seed = seed;
  const SimulatedCapture sim = simulate_capture(scene, cap);

  const NoiseCurve curve = manual_curve(0.0, 1.0);  // identity stabilizer
  FusionParams params;
  params.patch_size = 1;
  params.stride = 1;
  params.match_count = 1;
  params.search_radius = 4;
  params.max_coeffs = 0;
  params.sim_weight = false;
  params.snr_weight = false;

  const AlignedStack aligned = stabilize_and_align(sim.stack, curve, params.sigma0, {});
  const HdrImage fused = fuse_stack(aligned, curve, params);
  const HdrImage classic = classic_hdr(sim.stack, params.hdr_exponent);

  // All clean counts stay unsaturated by construction; compare everywhere.
  double max_rel = 0.0;
  for (int c = 0; c < 4; ++c)
    for (size_t i = 0; i < classic.channels[c].size(); ++i) {
      const double ref = classic.channels[c].pixels()[i];
      const double dev = std::abs(fused.channels[c].pixels()[i] - ref);
      max_rel = std::max(max_rel, dev / std::max(std::abs(ref), 1.0));
    }
  report.add("classic_equivalence_max_rel_dev", max_rel, 1e-3, true);
  return report;
}

// Stabilizer flatness and the per-frame sigma0*sqrt(tau_ref/tau_i) scaling,
// measured on residuals against the clean capture. Per-frame stds are taken
// where that frame is well exposed (clean count in [0.80, 0.95] of the white
// level), the regime the SNR weighting targets; the scaling law is exact
// only for variance linear through the black point, so the capture keeps a
// small offset.
ExperimentReport experiment_vst_flatness(uint64_t seed) {
  ExperimentReport report;
  report.name = "vst-flatness";

  SceneSpec scene;
  scene.texture = SceneSpec::Texture::Ramps;
  scene.width = 512;
  scene.height = 512;
  scene.min_level = 0.03;
  CaptureSpec cap;
  cap.exposure_times = {0.25, 1.0, 4.0};
  cap.black_offset = 50.0;
  cap.noise_a = 0.5;
  cap.noise_b = 10.0;
  cap.seed = seed;

  const NoiseCurve curve = manual_curve(cap.noise_a, cap.noise_b);
  const double sigma0 = 1.0;

  // Part 1: per-bin flatness on the reference frame, capture spanning the
  // whole unclipped range.
  {
    CaptureSpec flat_cap = cap;
    flat_cap.gain = 3840.0;
    const SimulatedCapture noisy = simulate_capture(scene, flat_cap);
    const SimulatedCapture clean = clean_capture(scene, flat_cap);
    const int ref = noisy.stack.reference_index;

    double min_count = flat_cap.white_level;
    for (int c = 0; c < 4; ++c)
      min_count = std::min(min_count, plane_min(clean.stack.frames[ref].channels[c]));
    const int bins = 8;
    const double lo = min_count, hi = 0.95 * flat_cap.white_level;
    std::vector<std::vector<double>> residuals(bins);
    for (int c = 0; c < 4; ++c) {
      const NoiseChannelModel& m = curve.channels[c];
      const Plane& noisy_p = noisy.stack.frames[ref].channels[c];
      const Plane& clean_p = clean.stack.frames[ref].channels[c];
      for (size_t i = 0; i < noisy_p.size(); ++i) {
        const double x = clean_p.pixels()[i];
        if (x < lo || x >= hi) continue;
        const int bin = std::min(bins - 1, static_cast<int>((x - lo) / (hi - lo) * bins));
        residuals[bin].push_back(
            vst_value(m, sigma0, curve.sigma_floor, noisy_p.pixels()[i]) -
            vst_value(m, sigma0, curve.sigma_floor, x));
      }
    }
    for (int bin = 0; bin < bins; ++bin) {
      double acc = 0.0;
      for (double r : residuals[bin]) acc += r * r;
      const double std_bin =
          residuals[bin].size() > 1 ? std::sqrt(acc / residuals[bin].size()) : 0.0;
      report.add("vst_bin" + std::to_string(bin) + "_std_rel_dev",
                 std::abs(std_bin / sigma0 - 1.0), 0.10, true);
    }
  }

  // Part 2: post-normalization stabilized std per exposure ratio. A larger
  // gain puts bright content into the short exposure's well-exposed band.
  {
    CaptureSpec scale_cap = cap;
    scale_cap.gain = 15500.0;
    const SimulatedCapture noisy = simulate_capture(scene, scale_cap);
    const SimulatedCapture clean = clean_capture(scene, scale_cap);
    const double tau_ref = noisy.stack.tau_ref();

    for (size_t i = 0; i < noisy.stack.size(); ++i) {
      const double tau_i = noisy.stack.exposure(static_cast<int>(i));
      const QuadFrame noisy_n =
          normalize_exposure(noisy.stack.frames[i], tau_ref, scale_cap.black_offset);
      const QuadFrame clean_n =
          normalize_exposure(clean.stack.frames[i], tau_ref, scale_cap.black_offset);
      std::vector<double> residuals;
      for (int c = 0; c < 4; ++c) {
        const NoiseChannelModel& m = curve.channels[c];
        const Plane& clean_orig = clean.stack.frames[i].channels[c];
        for (size_t px = 0; px < clean_orig.size(); ++px) {
          const double original = clean_orig.pixels()[px];
          if (original < 0.80 * scale_cap.white_level ||
              original > 0.95 * scale_cap.white_level)
            continue;
          residuals.push_back(
              vst_value(m, sigma0, curve.sigma_floor, noisy_n.channels[c].pixels()[px]) -
              vst_value(m, sigma0, curve.sigma_floor, clean_n.channels[c].pixels()[px]));
        }
      }
      double acc = 0.0;
      for (double r : residuals) acc += r * r;
      const double measured = residuals.size() > 1 ? std::sqrt(acc / residuals.size()) : 0.0;
      const double target = sigma0 * std::sqrt(tau_ref / tau_i);
      report.add("stabilized_std_rel_dev_ratio_" + std::to_string(tau_ref / tau_i),
                 std::abs(measured / target - 1.0), 0.10, true);
    }
  }
  return report;
}

ExperimentReport experiment_noise_estimation(uint64_t seed) {
  ExperimentReport report;
  report.name = "noise-estimation";

  const double true_a = 0.5, true_b = 10.0;
  const int seeds = 10;
  double mean_a = 0.0, mean_b = 0.0;
  for (int s = 0; s < seeds; ++s) {
    SceneSpec scene;
    scene.texture = SceneSpec::Texture::Ramps;
    scene.width = 512;
    scene.height = 512;
    // Content reaching near-black anchors the variance intercept; without
    // dark pixels b is an extrapolation and its fit variance blows past the
    // tolerance.
    scene.min_level = 0.005;
    CaptureSpec cap;
    cap.exposure_times = {0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
    cap.black_offset = 50.0;
    cap.gain = 1500.0;  // unsaturated in every frame
    cap.noise_a = true_a;
    cap.noise_b = true_b;
    cap.seed = mix_seed(seed, static_cast<uint64_t>(s) + 1000);
    const SimulatedCapture sim = simulate_capture(scene, cap);
    // Narrow bins keep the within-bin sigma spread small; a wide dark bin
    // would bias the MAD estimate below the mean variance.
    NoiseEstimationParams est;
    est.bins = 16;
    const NoiseCurve curve = estimate_noise_curve(sim.stack, est);
    for (int c = 0; c < 4; ++c) {
      mean_a += curve.channels[c].a;
      mean_b += curve.channels[c].b;
    }
  }
  mean_a /= 4.0 * seeds;
  mean_b /= 4.0 * seeds;
  report.add("fitted_a_rel_err", std::abs(mean_a - true_a) / true_a, 0.15, true);
  report.add("fitted_b_rel_err", std::abs(mean_b - true_b) / true_b, 0.15, true);
  return report;
}

struct DenoiseSetup {
  SimulatedCapture sim;
  AlignedStack aligned;
  NoiseCurve curve;
  double peak = 0.0;
};

DenoiseSetup denoise_setup(uint64_t seed, int size) {
  DenoiseSetup setup;
  SceneSpec scene;
  scene.texture = SceneSpec::Texture::Checkers;
  scene.width = size;
  scene.height = size;
  scene.texture_seed = mix_seed(seed, 0xabcd);
  CaptureSpec cap;
  cap.exposure_times = {0.5, 1.0, 2.0};
  cap.gain = 1500.0;
  cap.noise_a = 0.5;
  cap.noise_b = 10.0;
  cap.seed = seed;
  setup.sim = simulate_capture(scene, cap);
  setup.curve = estimate_noise_curve(setup.sim.stack);
  setup.aligned = stabilize_and_align(setup.sim.stack, setup.curve, 1.0, {});
  setup.peak = plane_max(setup.sim.ground_truth.channels[0]);
  for (int c = 1; c < 4; ++c)
    setup.peak = std::max(setup.peak, plane_max(setup.sim.ground_truth.channels[c]));
  return setup;
}

ExperimentReport experiment_denoise_gain(uint64_t seed) {
  ExperimentReport report;
  report.name = "denoise-gain";

  DenoiseSetup setup = denoise_setup(seed, 256);
  const double psnr_ref = psnr(reference_as_hdr(setup.sim.stack), setup.sim.ground_truth,
                               setup.peak);

  FusionParams params;  // paper parameters k, h, tau; max_coeffs = 3
  params.search_radius = 20;  // several texture repeats: keeps groups well
  params.match_count = 32;    // conditioned so noise eigenvalues stay below tau
  const HdrImage fused = fuse_stack(setup.aligned, setup.curve, params);
  const double psnr_fused = psnr(fused, setup.sim.ground_truth, setup.peak);

  FusionParams barycenter = params;
  barycenter.max_coeffs = 0;
  const HdrImage fused_mc0 = fuse_stack(setup.aligned, setup.curve, barycenter);
  const double psnr_mc0 = psnr(fused_mc0, setup.sim.ground_truth, setup.peak);

  report.add("psnr_reference_db", psnr_ref, 0.0, false);
  report.add("psnr_fused_db", psnr_fused, 0.0, false);
  report.add("psnr_gain_db", psnr_fused - psnr_ref, 5.0, false);
  report.add("psnr_mc3_minus_mc0_db", psnr_fused - psnr_mc0, 0.0, false);
  return report;
}

ExperimentReport experiment_coeff_sweep(uint64_t seed) {
  ExperimentReport report;
  report.name = "coeff-sweep";

  DenoiseSetup setup = denoise_setup(seed, 256);
  FusionParams params;
  params.search_radius = 20;
  params.match_count = 32;
  double values[3];
  const int sweeps[3] = {0, 3, -1};
  for (int s = 0; s < 3; ++s) {
    params.max_coeffs = sweeps[s];
    const HdrImage fused = fuse_stack(setup.aligned, setup.curve, params);
    values[s] = psnr(fused, setup.sim.ground_truth, setup.peak);
  }
  report.add("psnr_mc0_db", values[0], 0.0, false);
  report.add("psnr_mc3_db", values[1], 0.0, false);
  report.add("psnr_unlimited_db", values[2], 0.0, false);
  report.add("psnr_mc3_minus_mc0_db", values[1] - values[0], 0.0, false);
  return report;
}

// Moving square over a static background, aligned with identity flow so the
// mismatched content reaches the grouping stage: the similarity weight alone
// must suppress the ghost.
ExperimentReport experiment_deghost(uint64_t seed) {
  ExperimentReport report;
  report.name = "deghost";

  SceneSpec scene;
  scene.texture = SceneSpec::Texture::NoiseTexture;
  scene.width = 256;
  scene.height = 256;
  scene.min_level = 0.03;
  scene.max_level = 0.5;
  scene.texture_seed = mix_seed(seed, 0x9e);
  scene.moving_rect = true;
  scene.rect_size = 32;
  scene.rect_center = {64.0, 64.0};
  scene.rect_velocity = {6.0, 0.0};
  scene.rect_level = 1.0;

  CaptureSpec cap;
  cap.exposure_times = {0.5, 1.0, 2.0};
  cap.gain = 1500.0;
  cap.noise_a = 0.5;
  cap.noise_b = 10.0;
  cap.seed = seed;
  const SimulatedCapture sim = simulate_capture(scene, cap);
  const NoiseCurve curve = estimate_noise_curve(sim.stack);

  FlowParams identity;
  identity.identity = true;
  const AlignedStack aligned = stabilize_and_align(sim.stack, curve, 1.0, identity);

  // Motion trail: union of the square's footprint across frames, quad coords.
  Mask trail(sim.stack.frames[0].width(), sim.stack.frames[0].height(), 0);
  const int half = scene.rect_size / 2;
  for (int i = 0; i < static_cast<int>(sim.stack.size()); ++i) {
    const int cx =
        static_cast<int>(scene.rect_center[0] +
                         scene.rect_velocity[0] * (i - sim.stack.reference_index));
    const int cy =
        static_cast<int>(scene.rect_center[1] +
                         scene.rect_velocity[1] * (i - sim.stack.reference_index));
    for (int y = std::max(0, cy - half); y < std::min(trail.height(), cy + half); ++y)
      for (int x = std::max(0, cx - half); x < std::min(trail.width(), cx + half); ++x)
        trail.at(x, y) = 1;
  }

  FusionParams params;
  params.max_coeffs = 0;  // barycenter only, the paper's weight-study setting
  params.sim_weight = true;
  const HdrImage with_sim = fuse_stack(aligned, curve, params);
  params.sim_weight = false;
  const HdrImage without_sim = fuse_stack(aligned, curve, params);

  const double mse_with = region_mse(with_sim, sim.ground_truth, trail);
  const double mse_without = region_mse(without_sim, sim.ground_truth, trail);
  report.add("trail_mse_with_sim", mse_with, mse_without, true);
  report.add("deghost_mse_ratio", mse_with / mse_without, 1.0, true);
  return report;
}

}  // namespace

std::vector<std::string> experiment_names() {
  return {"classic-equivalence", "vst-flatness", "noise-estimation",
          "denoise-gain",        "deghost",      "coeff-sweep"};
}

ExperimentReport run_experiment(const std::string& name, uint64_t seed) {
  if (name == "classic-equivalence") return experiment_classic_equivalence(seed);
  if (name == "vst-flatness") return experiment_vst_flatness(seed);
  if (name == "noise-estimation") return experiment_noise_estimation(seed);
  if (name == "denoise-gain") return experiment_denoise_gain(seed);
  if (name == "deghost") return experiment_deghost(seed);
  if (name == "coeff-sweep") return experiment_coeff_sweep(seed);
  throw Error("unknown experiment '" + name + "'");
}

}  // namespace rawhdr
