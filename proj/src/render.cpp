#include "rawhdr/render.hpp"

#include <algorithm>
#include <cmath>

#include "rawhdr/colorspace.hpp"

namespace rawhdr {

namespace {

// Normalized 3x3 convolution of a sparsely populated channel: equivalent to
// averaging the available neighbor samples (exact bilinear interpolation in
// the interior, graceful at borders).
Plane interpolate_sparse(const Plane& samples, const Mask& present, bool diagonal_kernel) {
  const int w = samples.width(), h = samples.height();
  // R/B use the full bilinear kernel, G the cross kernel (quincunx).
  static const double full[3][3] = {{0.25, 0.5, 0.25}, {0.5, 1.0, 0.5}, {0.25, 0.5, 0.25}};
  static const double cross[3][3] = {{0.0, 0.25, 0.0}, {0.25, 1.0, 0.25}, {0.0, 0.25, 0.0}};
  const auto& kernel = diagonal_kernel ? full : cross;

  Plane out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (present.at(x, y)) {
        out.at(x, y) = samples.at(x, y);
        continue;
      }
      double acc = 0.0, norm = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
          if (!present.at(xx, yy)) continue;
          const double wgt = kernel[dy + 1][dx + 1];
          acc += wgt * samples.at(xx, yy);
          norm += wgt;
        }
      out.at(x, y) = norm > 0.0 ? acc / norm : 0.0;
    }
  return out;
}

double luminance(double r, double g, double b) {
  return 0.2126 * r + 0.7152 * g + 0.0722 * b;
}

}  // namespace

RenderParams::ToneMap parse_tonemap(const std::string& name) {
  if (name == "gamma") return RenderParams::ToneMap::Gamma;
  if (name == "reinhard") return RenderParams::ToneMap::Reinhard;
  throw Error("unknown tone mapping operator '" + name + "' (expected gamma or reinhard)");
}

std::array<Plane, 3> demosaick(const HdrImage& hdr, CfaPattern pattern) {
  const Plane cfa = mosaic_to_plane(hdr.channels, pattern);
  const int w = cfa.width(), h = cfa.height();

  std::array<Plane, 3> sparse = {Plane(w, h, 0.0), Plane(w, h, 0.0), Plane(w, h, 0.0)};
  std::array<Mask, 3> present = {Mask(w, h, 0), Mask(w, h, 0), Mask(w, h, 0)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int color = cfa_rgb_color_at(pattern, x, y);
      sparse[color].at(x, y) = cfa.at(x, y);
      present[color].at(x, y) = 1;
    }

  std::array<Plane, 3> rgb;
  rgb[0] = interpolate_sparse(sparse[0], present[0], true);
  rgb[1] = interpolate_sparse(sparse[1], present[1], false);
  rgb[2] = interpolate_sparse(sparse[2], present[2], true);
  return rgb;
}

Rgb8 tone_map(const std::array<Plane, 3>& rgb, const RenderParams& params) {
  const int w = rgb[0].width(), h = rgb[0].height();
  std::array<Plane, 3> mapped = rgb;

  if (params.tonemap == RenderParams::ToneMap::Reinhard) {
    constexpr double kDelta = 1e-8;
    double log_sum = 0.0;
    Plane lum(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double l = luminance(rgb[0].at(x, y), rgb[1].at(x, y), rgb[2].at(x, y));
        lum.at(x, y) = l;
        log_sum += std::log(kDelta + std::max(l, 0.0));
      }
    const double l_avg = std::exp(log_sum / (static_cast<double>(w) * h));
    const double scale = l_avg > kDelta ? params.reinhard_key / l_avg : 0.0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double l = lum.at(x, y);
        const double ratio = l > kDelta ? scale / (1.0 + scale * l) : 0.0;
        for (int c = 0; c < 3; ++c) mapped[c].at(x, y) = rgb[c].at(x, y) * ratio;
      }
  } else {
    if (params.output_white <= 0.0 || params.output_white > 100.0)
      throw Error("output_white percentile must lie in (0, 100]");
    std::vector<double> pool;
    pool.reserve(static_cast<size_t>(w) * h * 3);
    for (int c = 0; c < 3; ++c)
      pool.insert(pool.end(), rgb[c].pixels().begin(), rgb[c].pixels().end());
    const double white = percentile(std::move(pool), params.output_white);
    const double scale = white > 0.0 ? 1.0 / white : 0.0;
    for (int c = 0; c < 3; ++c)
      for (double& v : mapped[c].pixels()) v *= scale;
  }

  Rgb8 out{Image<uint8_t>(w, h), Image<uint8_t>(w, h), Image<uint8_t>(w, h)};
  Image<uint8_t>* planes[3] = {&out.r, &out.g, &out.b};
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double v = std::clamp(mapped[c].at(x, y), 0.0, 1.0);
        planes[c]->at(x, y) =
            static_cast<uint8_t>(std::lround(255.0 * std::pow(v, params.gamma)));
      }
  return out;
}

Rgb8 render_hdr(const HdrImage& hdr, CfaPattern pattern, const RenderParams& params) {
  std::array<Plane, 3> rgb = demosaick(hdr, pattern);
  rgb = white_balance(rgb, params.wb_gains);
  rgb = camera_to_srgb(rgb, params.srgb_matrix);
  return tone_map(rgb, params);
}

void save_image(const HdrImage& hdr, const std::string& path, ImageFormat format,
                CfaPattern pattern, const RenderParams& params) {
  switch (format) {
    case ImageFormat::Pfm:
      save_hdr_pfm(hdr, path);
      return;
    case ImageFormat::Pgm16: {
      const int w = hdr.width(), h = hdr.height();
      Image<uint16_t> stacked(w, 4 * h);
      for (int c = 0; c < 4; ++c)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            stacked.at(x, c * h + y) = static_cast<uint16_t>(
                std::clamp(std::round(hdr.channels[c].at(x, y)), 0.0, 65535.0));
      save_pgm16(stacked, path);
      return;
    }
    case ImageFormat::Tonemapped8:
      save_ppm8(render_hdr(hdr, pattern, params), path);
      return;
  }
  throw Error("unknown image format tag");
}

}  // namespace rawhdr
