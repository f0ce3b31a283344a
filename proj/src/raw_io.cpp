#include "rawhdr/raw_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fs = std::filesystem;

namespace rawhdr {

namespace {

constexpr bool kLittleEndianHost = (std::endian::native == std::endian::little);

uint16_t swap16(uint16_t v) { return static_cast<uint16_t>((v >> 8) | (v << 8)); }

float swap32(float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  bits = ((bits >> 24) & 0xff) | ((bits >> 8) & 0xff00) | ((bits << 8) & 0xff0000) |
         (bits << 24);
  std::memcpy(&v, &bits, 4);
  return v;
}

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_pnm_token(std::istream& in) {
  std::string tok;
  while (in) {
    const int c = in.peek();
    if (c == EOF) break;
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    in >> tok;
    return tok;
  }
  throw Error("unexpected end of header in image file");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace

CfaPattern parse_cfa_pattern(const std::string& name) {
  std::string up = name;
  std::transform(up.begin(), up.end(), up.begin(), ::toupper);
  if (up == "RGGB") return CfaPattern::RGGB;
  if (up == "BGGR") return CfaPattern::BGGR;
  if (up == "GRBG") return CfaPattern::GRBG;
  if (up == "GBRG") return CfaPattern::GBRG;
  throw Error("unknown CFA pattern '" + name + "' (expected RGGB, BGGR, GRBG or GBRG)");
}

std::string to_string(CfaPattern pattern) {
  switch (pattern) {
    case CfaPattern::RGGB: return "RGGB";
    case CfaPattern::BGGR: return "BGGR";
    case CfaPattern::GRBG: return "GRBG";
    case CfaPattern::GBRG: return "GBRG";
  }
  return "RGGB";
}

std::array<std::array<int, 2>, 4> cfa_channel_offsets(CfaPattern pattern) {
  // (dx, dy) of r, g1, g2, b inside the 2x2 cell; g1 is the green sharing the
  // red row, g2 the green sharing the blue row.
  switch (pattern) {
    case CfaPattern::RGGB: return {{{0, 0}, {1, 0}, {0, 1}, {1, 1}}};
    case CfaPattern::BGGR: return {{{1, 1}, {1, 0}, {0, 1}, {0, 0}}};
    case CfaPattern::GRBG: return {{{1, 0}, {0, 0}, {1, 1}, {0, 1}}};
    case CfaPattern::GBRG: return {{{0, 1}, {0, 0}, {1, 1}, {1, 0}}};
  }
  throw Error("invalid CFA pattern");
}

int cfa_rgb_color_at(CfaPattern pattern, int x, int y) {
  const auto off = cfa_channel_offsets(pattern);
  const int dx = x & 1, dy = y & 1;
  for (int c = 0; c < 4; ++c)
    if (off[c][0] == dx && off[c][1] == dy) return c == 0 ? 0 : (c == 3 ? 2 : 1);
  return 1;
}

int median_reference_index(const std::vector<double>& exposures) {
  if (exposures.empty()) throw Error("empty exposure list");
  std::vector<double> sorted = exposures;
  std::sort(sorted.begin(), sorted.end());
  // Upper median: for even N this is the longer of the middle pair.
  const double tau_med = sorted[sorted.size() / 2];
  for (size_t i = 0; i < exposures.size(); ++i)
    if (exposures[i] == tau_med) return static_cast<int>(i);
  throw Error("median exposure lookup failed");
}

QuadFrame disassemble_cfa(const RawFrame& frame, double exposure_time) {
  const int w = frame.width(), h = frame.height();
  if (w % 2 != 0 || h % 2 != 0)
    throw Error("CFA dimensions must be even, got " + std::to_string(w) + "x" +
                std::to_string(h));
  QuadFrame quad;
  quad.exposure_time = exposure_time;
  const auto off = cfa_channel_offsets(frame.cfa);
  for (int c = 0; c < 4; ++c) {
    Plane plane(w / 2, h / 2);
    const int dx = off[c][0], dy = off[c][1];
    for (int y = 0; y < h / 2; ++y)
      for (int x = 0; x < w / 2; ++x)
        plane.at(x, y) = static_cast<double>(frame.data.at(2 * x + dx, 2 * y + dy));
    quad.channels[c] = std::move(plane);
  }
  return quad;
}

RawFrame reassemble_cfa(const QuadFrame& quad, CfaPattern pattern) {
  const int qw = quad.width(), qh = quad.height();
  for (int c = 1; c < 4; ++c)
    if (!quad.channels[c].same_size(quad.channels[0]))
      throw Error("quad planes differ in size");
  RawFrame frame;
  frame.cfa = pattern;
  frame.data = Image<uint16_t>(2 * qw, 2 * qh);
  const auto off = cfa_channel_offsets(pattern);
  for (int c = 0; c < 4; ++c) {
    const int dx = off[c][0], dy = off[c][1];
    for (int y = 0; y < qh; ++y)
      for (int x = 0; x < qw; ++x) {
        const double v = std::clamp(std::round(quad.channels[c].at(x, y)), 0.0, 65535.0);
        frame.data.at(2 * x + dx, 2 * y + dy) = static_cast<uint16_t>(v);
      }
  }
  return frame;
}

Plane mosaic_to_plane(const std::array<Plane, 4>& channels, CfaPattern pattern) {
  const int qw = channels[0].width(), qh = channels[0].height();
  Plane cfa(2 * qw, 2 * qh);
  const auto off = cfa_channel_offsets(pattern);
  for (int c = 0; c < 4; ++c)
    for (int y = 0; y < qh; ++y)
      for (int x = 0; x < qw; ++x)
        cfa.at(2 * x + off[c][0], 2 * y + off[c][1]) = channels[c].at(x, y);
  return cfa;
}

std::array<Plane, 4> plane_to_quad(const Plane& cfa, CfaPattern pattern) {
  const int w = cfa.width(), h = cfa.height();
  if (w % 2 != 0 || h % 2 != 0) throw Error("CFA dimensions must be even");
  std::array<Plane, 4> channels;
  const auto off = cfa_channel_offsets(pattern);
  for (int c = 0; c < 4; ++c) {
    Plane plane(w / 2, h / 2);
    for (int y = 0; y < h / 2; ++y)
      for (int x = 0; x < w / 2; ++x)
        plane.at(x, y) = cfa.at(2 * x + off[c][0], 2 * y + off[c][1]);
    channels[c] = std::move(plane);
  }
  return channels;
}

RawStack load_stack(const std::string& metadata_path) {
  std::ifstream meta(metadata_path);
  if (!meta) throw Error("cannot open stack metadata '" + metadata_path + "'");
  const fs::path base = fs::path(metadata_path).parent_path();

  RawStack stack;
  bool have_black = false, have_white = false, have_cfa = false;
  std::vector<std::pair<std::string, double>> frame_list;

  std::string line;
  int line_no = 0;
  while (std::getline(meta, line)) {
    ++line_no;
    const auto pos = line.find('#');
    if (pos != std::string::npos) line.erase(pos);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;

    auto want = [&](int n, std::vector<double>& out) {
      out.resize(n);
      for (int i = 0; i < n; ++i)
        if (!(ss >> out[i]))
          throw Error("malformed metadata at line " + std::to_string(line_no) + ": key '" +
                      key + "' needs " + std::to_string(n) + " numbers");
    };

    std::vector<double> vals;
    if (key == "black_offset") {
      want(1, vals);
      stack.black_offset = vals[0];
      have_black = true;
    } else if (key == "white_level") {
      want(1, vals);
      stack.white_level = vals[0];
      have_white = true;
    } else if (key == "cfa_pattern") {
      std::string name;
      if (!(ss >> name)) throw Error("malformed cfa_pattern at line " + std::to_string(line_no));
      stack.cfa = parse_cfa_pattern(name);
      have_cfa = true;
    } else if (key == "wb_gains") {
      want(3, vals);
      stack.wb_gains = {vals[0], vals[1], vals[2]};
    } else if (key == "srgb_matrix") {
      want(9, vals);
      std::copy(vals.begin(), vals.end(), stack.srgb_matrix.begin());
    } else {
      double exposure;
      if (!(ss >> exposure))
        throw Error("malformed frame line " + std::to_string(line_no) +
                    " (expected 'filename exposure_seconds'): " + line);
      if (exposure <= 0.0)
        throw Error("frame '" + key + "' has nonpositive exposure time");
      frame_list.emplace_back(key, exposure);
    }
  }

  if (!have_black || !have_white || !have_cfa)
    throw Error("stack metadata must define black_offset, white_level and cfa_pattern");
  if (stack.black_offset >= stack.white_level)
    throw Error("black_offset must be below white_level");
  if (frame_list.size() < 2)
    throw Error("stack needs at least 2 frames, metadata lists " +
                std::to_string(frame_list.size()));

  std::vector<double> exposures;
  for (const auto& [name, exposure] : frame_list) {
    const fs::path img_path = base / name;
    if (!fs::exists(img_path))
      throw Error("stack metadata references missing file '" + img_path.string() + "'");
    RawFrame frame;
    frame.data = load_pgm16(img_path.string());
    frame.cfa = stack.cfa;
    QuadFrame quad = disassemble_cfa(frame, exposure);
    if (!stack.frames.empty() &&
        !quad.channels[0].same_size(stack.frames[0].channels[0]))
      throw Error("frame '" + name + "' dimensions differ from the first frame");
    stack.frames.push_back(std::move(quad));
    exposures.push_back(exposure);
  }
  stack.reference_index = median_reference_index(exposures);
  return stack;
}

void save_stack(const RawStack& stack, const std::string& directory,
                const std::string& metadata_name) {
  fs::create_directories(directory);
  std::ofstream meta(fs::path(directory) / metadata_name);
  if (!meta) throw Error("cannot write stack metadata in '" + directory + "'");
  meta << "black_offset " << stack.black_offset << "\n";
  meta << "white_level " << stack.white_level << "\n";
  meta << "cfa_pattern " << to_string(stack.cfa) << "\n";
  meta << "wb_gains " << stack.wb_gains[0] << " " << stack.wb_gains[1] << " "
       << stack.wb_gains[2] << "\n";
  meta << "srgb_matrix";
  for (double v : stack.srgb_matrix) meta << " " << v;
  meta << "\n";
  char name[32];
  for (size_t i = 0; i < stack.frames.size(); ++i) {
    std::snprintf(name, sizeof(name), "frame_%04zu.pgm", i);
    const RawFrame frame = reassemble_cfa(stack.frames[i], stack.cfa);
    save_pgm16(frame.data, (fs::path(directory) / name).string());
    meta << name << " " << std::setprecision(17) << stack.frames[i].exposure_time << "\n";
  }
}

void save_pgm16(const Image<uint16_t>& img, const std::string& path) {
  auto out = open_out(path);
  out << "P5\n" << img.width() << " " << img.height() << "\n65535\n";
  std::vector<uint16_t> row(img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      uint16_t v = img.at(x, y);
      row[x] = kLittleEndianHost ? swap16(v) : v;  // PGM samples are big-endian
    }
    out.write(reinterpret_cast<const char*>(row.data()), row.size() * 2);
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

Image<uint16_t> load_pgm16(const std::string& path) {
  auto in = open_in(path);
  if (next_pnm_token(in) != "P5") throw Error("'" + path + "' is not a binary PGM");
  const int w = std::stoi(next_pnm_token(in));
  const int h = std::stoi(next_pnm_token(in));
  const int maxval = std::stoi(next_pnm_token(in));
  if (maxval <= 255 || maxval > 65535)
    throw Error("'" + path + "' must be a 16-bit PGM (maxval in 256..65535)");
  in.get();  // single whitespace after maxval
  Image<uint16_t> img(w, h);
  std::vector<uint16_t> row(w);
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), row.size() * 2);
    if (!in) throw Error("truncated PGM data in '" + path + "'");
    for (int x = 0; x < w; ++x) img.at(x, y) = kLittleEndianHost ? swap16(row[x]) : row[x];
  }
  return img;
}

void save_pfm(const std::vector<const Plane*>& planes, const std::string& path) {
  if (planes.empty()) throw Error("save_pfm: no planes");
  const int w = planes[0]->width();
  int total_h = 0;
  for (const Plane* p : planes) {
    if (p->width() != w) throw Error("save_pfm: planes differ in width");
    total_h += p->height();
  }
  auto out = open_out(path);
  out << "Pf\n" << w << " " << total_h << "\n-1.0\n";
  // Scanlines bottom-to-top over the stacked image.
  std::vector<float> row(w);
  std::vector<std::pair<const Plane*, int>> rows;
  rows.reserve(total_h);
  for (const Plane* p : planes)
    for (int y = 0; y < p->height(); ++y) rows.push_back({p, y});
  for (int i = total_h - 1; i >= 0; --i) {
    const auto& [p, y] = rows[i];
    for (int x = 0; x < w; ++x) {
      float v = static_cast<float>(p->at(x, y));
      row[x] = kLittleEndianHost ? v : swap32(v);
    }
    out.write(reinterpret_cast<const char*>(row.data()), row.size() * 4);
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

std::vector<Plane> load_pfm(const std::string& path) {
  auto in = open_in(path);
  if (next_pnm_token(in) != "Pf") throw Error("'" + path + "' is not a grayscale PFM");
  const int w = std::stoi(next_pnm_token(in));
  const int h = std::stoi(next_pnm_token(in));
  const double scale = std::stod(next_pnm_token(in));
  const bool file_little = scale < 0.0;
  in.get();
  Plane img(w, h);
  std::vector<float> row(w);
  for (int i = h - 1; i >= 0; --i) {
    in.read(reinterpret_cast<char*>(row.data()), row.size() * 4);
    if (!in) throw Error("truncated PFM data in '" + path + "'");
    for (int x = 0; x < w; ++x) {
      float v = row[x];
      if (file_little != kLittleEndianHost) v = swap32(v);
      img.at(x, i) = static_cast<double>(v);
    }
  }
  return {img};
}

void save_hdr_pfm(const HdrImage& image, const std::string& path) {
  save_pfm({&image.channels[0], &image.channels[1], &image.channels[2], &image.channels[3]},
           path);
}

HdrImage load_hdr_pfm(const std::string& path) {
  const std::vector<Plane> loaded = load_pfm(path);
  const Plane& stacked = loaded[0];
  if (stacked.height() % 4 != 0)
    throw Error("'" + path + "' does not hold 4 stacked planes");
  const int w = stacked.width(), h = stacked.height() / 4;
  HdrImage hdr;
  for (int c = 0; c < 4; ++c) {
    Plane plane(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) plane.at(x, y) = stacked.at(x, c * h + y);
    hdr.channels[c] = std::move(plane);
  }
  return hdr;
}

void save_ppm8(const Rgb8& image, const std::string& path) {
  auto out = open_out(path);
  out << "P6\n" << image.width() << " " << image.height() << "\n255\n";
  std::vector<uint8_t> row(static_cast<size_t>(image.width()) * 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      row[3 * x + 0] = image.r.at(x, y);
      row[3 * x + 1] = image.g.at(x, y);
      row[3 * x + 2] = image.b.at(x, y);
    }
    out.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

void save_ppm8(const std::array<Plane, 3>& rgb, const std::string& path) {
  Rgb8 image;
  const int w = rgb[0].width(), h = rgb[0].height();
  image.r = Image<uint8_t>(w, h);
  image.g = Image<uint8_t>(w, h);
  image.b = Image<uint8_t>(w, h);
  Image<uint8_t>* out[3] = {&image.r, &image.g, &image.b};
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out[c]->at(x, y) =
            static_cast<uint8_t>(std::clamp(std::round(rgb[c].at(x, y)), 0.0, 255.0));
  save_ppm8(image, path);
}

Rgb8 load_ppm8(const std::string& path) {
  auto in = open_in(path);
  if (next_pnm_token(in) != "P6") throw Error("'" + path + "' is not a binary PPM");
  const int w = std::stoi(next_pnm_token(in));
  const int h = std::stoi(next_pnm_token(in));
  const int maxval = std::stoi(next_pnm_token(in));
  if (maxval != 255) throw Error("'" + path + "' must be an 8-bit PPM");
  in.get();
  Rgb8 image{Image<uint8_t>(w, h), Image<uint8_t>(w, h), Image<uint8_t>(w, h)};
  std::vector<uint8_t> row(static_cast<size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), row.size());
    if (!in) throw Error("truncated PPM data in '" + path + "'");
    for (int x = 0; x < w; ++x) {
      image.r.at(x, y) = row[3 * x + 0];
      image.g.at(x, y) = row[3 * x + 1];
      image.b.at(x, y) = row[3 * x + 2];
    }
  }
  return image;
}

ImageFormat parse_image_format(const std::string& tag) {
  if (tag == "pgm16") return ImageFormat::Pgm16;
  if (tag == "pfm") return ImageFormat::Pfm;
  if (tag == "ppm8" || tag == "tonemapped8") return ImageFormat::Tonemapped8;
  throw Error("unknown image format '" + tag + "' (expected pgm16, pfm or ppm8)");
}

}  // namespace rawhdr
