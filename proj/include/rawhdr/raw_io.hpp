#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rawhdr/image.hpp"

namespace rawhdr {

enum class CfaPattern { RGGB, BGGR, GRBG, GBRG };

CfaPattern parse_cfa_pattern(const std::string& name);
std::string to_string(CfaPattern pattern);

/// Position (dx, dy) of each quad channel (r, g1, g2, b) inside the 2x2 CFA cell.
std::array<std::array<int, 2>, 4> cfa_channel_offsets(CfaPattern pattern);

/// RGB color (0=R, 1=G, 2=B) recorded at CFA position (x, y).
int cfa_rgb_color_at(CfaPattern pattern, int x, int y);

/// Full-resolution single-channel sensor image.
struct RawFrame {
  Image<uint16_t> data;
  CfaPattern cfa = CfaPattern::RGGB;

  int width() const { return data.width(); }
  int height() const { return data.height(); }
};

/// Half-resolution 4-channel (r, g1, g2, b) image with its exposure time.
struct QuadFrame {
  std::array<Plane, 4> channels;
  double exposure_time = 0.0;

  int width() const { return channels[0].width(); }
  int height() const { return channels[0].height(); }
};

/// Ordered multi-exposure bracket plus sensor metadata.
struct RawStack {
  std::vector<QuadFrame> frames;
  double black_offset = 0.0;
  double white_level = 65535.0;
  CfaPattern cfa = CfaPattern::RGGB;
  int reference_index = 0;
  std::array<double, 3> wb_gains = {1.0, 1.0, 1.0};
  std::array<double, 9> srgb_matrix = {1, 0, 0, 0, 1, 0, 0, 0, 1};

  size_t size() const { return frames.size(); }
  double exposure(int i) const { return frames[i].exposure_time; }
  double tau_ref() const { return frames[reference_index].exposure_time; }
};

/// Index of the median exposure; for an even count the longer of the middle
/// pair wins. Duplicates resolve to the first frame listed with that exposure.
int median_reference_index(const std::vector<double>& exposures);

/// Splits the CFA mosaic into 4 half-resolution planes. Values are copied
/// unmodified; the black offset stays in the data until exposure normalization.
QuadFrame disassemble_cfa(const RawFrame& frame, double exposure_time);

/// Exact inverse of disassemble_cfa (values rounded back to 16-bit counts).
RawFrame reassemble_cfa(const QuadFrame& quad, CfaPattern pattern);

/// Interleaves 4 planes onto the full-resolution CFA grid without quantization.
Plane mosaic_to_plane(const std::array<Plane, 4>& channels, CfaPattern pattern);
std::array<Plane, 4> plane_to_quad(const Plane& cfa, CfaPattern pattern);

/// Loads a bracket from a metadata file; image paths resolve relative to it.
RawStack load_stack(const std::string& metadata_path);

/// Writes the stack as 16-bit graymaps plus a metadata file into `directory`.
void save_stack(const RawStack& stack, const std::string& directory,
                const std::string& metadata_name = "stack.meta");

// Image containers. PGM: binary P5, maxval 65535, big-endian samples.
// PFM: grayscale "Pf", scale -1 (little-endian), rows bottom-to-top.
void save_pgm16(const Image<uint16_t>& img, const std::string& path);
Image<uint16_t> load_pgm16(const std::string& path);

void save_pfm(const std::vector<const Plane*>& planes, const std::string& path);
std::vector<Plane> load_pfm(const std::string& path);

/// HdrImage as a single PFM with the 4 planes stacked vertically (r, g1, g2, b).
void save_hdr_pfm(const HdrImage& image, const std::string& path);
HdrImage load_hdr_pfm(const std::string& path);

/// 8-bit RGB image (one byte plane per channel).
struct Rgb8 {
  Image<uint8_t> r, g, b;

  int width() const { return r.width(); }
  int height() const { return r.height(); }
};

void save_ppm8(const Rgb8& image, const std::string& path);
/// Float RGB variant: values rounded and clamped to [0, 255].
void save_ppm8(const std::array<Plane, 3>& rgb, const std::string& path);
Rgb8 load_ppm8(const std::string& path);

enum class ImageFormat { Pgm16, Pfm, Tonemapped8 };
/// Accepts "pgm16", "pfm", "ppm8"; anything else is a format error.
ImageFormat parse_image_format(const std::string& tag);

}  // namespace rawhdr
