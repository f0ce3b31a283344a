#pragma once

#include <array>
#include <string>

#include "rawhdr/raw_io.hpp"

namespace rawhdr {

struct RenderParams {
  std::array<double, 3> wb_gains = {1.0, 1.0, 1.0};
  std::array<double, 9> srgb_matrix = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  enum class ToneMap { Gamma, Reinhard } tonemap = ToneMap::Gamma;
  double gamma = 1.0 / 2.2;
  double reinhard_key = 0.18;
  double output_white = 99.5;  // percentile mapped to 1.0 before gamma
};

RenderParams::ToneMap parse_tonemap(const std::string& name);

/// Remosaic the 4 planes onto the CFA grid and bilinearly interpolate the
/// missing samples (greens from the quincunx). Output is full resolution.
std::array<Plane, 3> demosaick(const HdrImage& hdr, CfaPattern pattern);

/// Range compression to 8 bits. Gamma mode scales the output_white percentile
/// to 1.0, clamps and applies the power curve; Reinhard applies the global
/// L/(1+L) operator on luminance with key scaling before the same curve.
Rgb8 tone_map(const std::array<Plane, 3>& rgb, const RenderParams& params);

/// demosaick -> white balance -> camera-to-sRGB -> tone map.
Rgb8 render_hdr(const HdrImage& hdr, CfaPattern pattern, const RenderParams& params);

/// Format-dispatched save: pgm16 quantizes the planes into one stacked
/// graymap, pfm is bit-exact, tonemapped8 runs render_hdr and writes a PPM.
void save_image(const HdrImage& hdr, const std::string& path, ImageFormat format,
                CfaPattern pattern = CfaPattern::RGGB, const RenderParams& params = {});

}  // namespace rawhdr
