#include "rawhdr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "rawhdr/util.hpp"

namespace rawhdr {

namespace {

Plane box_blur(const Plane& src, int radius) {
  const int w = src.width(), h = src.height();
  Plane tmp(w, h), dst(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      int cnt = 0;
      for (int dx = -radius; dx <= radius; ++dx) {
        const int xx = std::clamp(x + dx, 0, w - 1);
        acc += src.at(xx, y);
        ++cnt;
      }
      tmp.at(x, y) = acc / cnt;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      int cnt = 0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        acc += tmp.at(x, yy);
        ++cnt;
      }
      dst.at(x, y) = acc / cnt;
    }
  return dst;
}

void rescale_to(Plane& p, double lo, double hi) {
  const double mn = plane_min(p), mx = plane_max(p);
  const double span = mx - mn;
  for (double& v : p.pixels())
    v = span > 0.0 ? lo + (hi - lo) * (v - mn) / span : 0.5 * (lo + hi);
}

// Base luminance texture at full CFA resolution, values in [min_level, 1].
Plane base_texture(const SceneSpec& scene) {
  const int w = scene.width, h = scene.height;
  Plane tex(w, h);
  switch (scene.texture) {
    case SceneSpec::Texture::Ramps: {
      // Horizontal ramp: uniform intensity distribution, so intensity bins
      // stay evenly populated.
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          tex.at(x, y) = w > 1 ? static_cast<double>(x) / (w - 1) : 0.0;
      rescale_to(tex, scene.min_level, scene.max_level);
      break;
    }
    case SceneSpec::Texture::Checkers: {
      // Periodic cells under a smooth diagonal light field: repeating
      // structure with slowly varying level. Per-cell color jitter is
      // applied channel-wise in base_scene.
      const int cell = std::max(4, std::min(w, h) / 16);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const bool on = ((x / cell) + (y / cell)) % 2 == 0;
          const double u = w > 1 ? static_cast<double>(x) / (w - 1) : 0.0;
          const double v = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
          const double light = 1.0 - 0.45 * 0.5 * (u + v);
          tex.at(x, y) = (on ? scene.max_level : scene.min_level) * light;
        }
      break;
    }
    case SceneSpec::Texture::NoiseTexture: {
      Rng rng(mix_seed(scene.texture_seed, 0x7e87ull));
      for (double& v : tex.pixels()) v = rng.uniform();
      tex = box_blur(tex, 4);
      tex = box_blur(tex, 3);
      rescale_to(tex, scene.min_level, scene.max_level);
      break;
    }
    case SceneSpec::Texture::LoadedImage: {
      const Image<uint16_t> img = load_pgm16(scene.image_path);
      if (img.width() % 2 != 0 || img.height() % 2 != 0)
        throw Error("loaded scene image must have even dimensions");
      Plane loaded(img.width(), img.height());
      double mx = 1.0;
      for (size_t i = 0; i < img.size(); ++i)
        mx = std::max(mx, static_cast<double>(img.pixels()[i]));
      for (size_t i = 0; i < img.size(); ++i)
        loaded.pixels()[i] =
            scene.min_level +
            (1.0 - scene.min_level) * static_cast<double>(img.pixels()[i]) / mx;
      return loaded;
    }
  }
  return tex;
}

// Static scene irradiance: channel gains applied, plus per-cell color jitter
// for the checkers texture (repeating but imperfect structure, like
// real-world tiled content).
std::array<Plane, 3> base_scene(const SceneSpec& scene) {
  const Plane lum = base_texture(scene);
  const int w = lum.width(), h = lum.height();
  std::array<Plane, 3> rgb;
  for (int c = 0; c < 3; ++c) {
    rgb[c] = lum;
    for (double& v : rgb[c].pixels()) v *= scene.channel_gains[c];
  }
  if (scene.texture == SceneSpec::Texture::Checkers && scene.cell_jitter > 0.0) {
    const int cell = std::max(4, std::min(w, h) / 16);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        Rng cell_rng(mix_seed(scene.texture_seed,
                              static_cast<uint64_t>(x / cell) * 31337u +
                                  static_cast<uint64_t>(y / cell) * 911u));
        for (int c = 0; c < 3; ++c)
          rgb[c].at(x, y) *= 1.0 + scene.cell_jitter * (2.0 * cell_rng.uniform() - 1.0);
      }
  }
  return rgb;
}

// Scene irradiance of frame `index`: translated background with the optional
// moving square painted on top. Full CFA resolution, 3 channels.
std::array<Plane, 3> scene_for_frame(const SceneSpec& scene,
                                     const std::array<Plane, 3>& base, int index,
                                     int reference_index) {
  const int w = base[0].width(), h = base[0].height();
  double tx = 0.0, ty = 0.0;
  if (!scene.frame_translation.empty()) {
    if (index >= static_cast<int>(scene.frame_translation.size()))
      throw Error("frame_translation shorter than the exposure list");
    tx = 2.0 * scene.frame_translation[index][0];  // quad px -> CFA px
    ty = 2.0 * scene.frame_translation[index][1];
  }

  std::array<Plane, 3> rgb;
  const bool shifted = tx != 0.0 || ty != 0.0;
  for (int c = 0; c < 3; ++c) {
    if (!shifted) {
      rgb[c] = base[c];
      continue;
    }
    rgb[c] = Plane(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) rgb[c].at(x, y) = bilinear_clamped(base[c], x - tx, y - ty);
  }

  if (scene.moving_rect) {
    const double cx =
        2.0 * (scene.rect_center[0] + scene.rect_velocity[0] * (index - reference_index));
    const double cy =
        2.0 * (scene.rect_center[1] + scene.rect_velocity[1] * (index - reference_index));
    const double half = scene.rect_size;  // quad px -> CFA px half-size
    const int x0 = std::max(0, static_cast<int>(std::lround(cx - half)));
    const int x1 = std::min(w - 1, static_cast<int>(std::lround(cx + half)) - 1);
    const int y0 = std::max(0, static_cast<int>(std::lround(cy - half)));
    const int y1 = std::min(h - 1, static_cast<int>(std::lround(cy + half)) - 1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        for (int c = 0; c < 3; ++c)
          rgb[c].at(x, y) = scene.rect_level * scene.channel_gains[c];
  }
  return rgb;
}

int rgb_index_of_quad_channel(int c) { return c == 0 ? 0 : (c == 3 ? 2 : 1); }

}  // namespace

SimulatedCapture simulate_capture(const SceneSpec& scene, const CaptureSpec& cap) {
  if (cap.exposure_times.empty()) throw Error("capture needs at least one exposure");
  for (double tau : cap.exposure_times)
    if (tau <= 0.0) throw Error("exposure times must be positive");
  if (scene.width % 2 != 0 || scene.height % 2 != 0)
    throw Error("scene dimensions must be even");

  const std::array<Plane, 3> base = base_scene(scene);
  const int n = static_cast<int>(cap.exposure_times.size());
  const int reference = median_reference_index(cap.exposure_times);
  const double tau_ref = cap.exposure_times[reference];
  const auto offsets = cfa_channel_offsets(cap.cfa);

  SimulatedCapture result;
  result.stack.black_offset = cap.black_offset;
  result.stack.white_level = cap.white_level;
  result.stack.cfa = cap.cfa;
  result.stack.reference_index = reference;

  const int w = base[0].width(), h = base[0].height();
  for (int i = 0; i < n; ++i) {
    const std::array<Plane, 3> rgb = scene_for_frame(scene, base, i, reference);
    const double tau = cap.exposure_times[i];
    Rng rng(mix_seed(cap.seed, static_cast<uint64_t>(i)));
    Plane cfa(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int color = cfa_rgb_color_at(cap.cfa, x, y);
        const double clean = std::clamp(
            cap.black_offset + cap.gain * rgb[color].at(x, y) * tau, 0.0, cap.white_level);
        const double sigma = std::sqrt(std::max(cap.noise_a * clean + cap.noise_b, 0.0));
        const double noisy = std::clamp(clean + sigma * rng.normal(), 0.0, cap.white_level);
        cfa.at(x, y) = noisy;
      }
    QuadFrame quad;
    quad.exposure_time = tau;
    quad.channels = plane_to_quad(cfa, cap.cfa);
    result.stack.frames.push_back(std::move(quad));
    result.cfa.push_back(std::move(cfa));
  }

  // Clean, unclipped reference-exposure image: the target the fusion should
  // recover (offset-free, may exceed the white level).
  const std::array<Plane, 3> ref_rgb = scene_for_frame(scene, base, reference, reference);
  for (int c = 0; c < 4; ++c) {
    Plane plane(w / 2, h / 2);
    const int rgbi = rgb_index_of_quad_channel(c);
    for (int y = 0; y < h / 2; ++y)
      for (int x = 0; x < w / 2; ++x)
        plane.at(x, y) =
            cap.gain * ref_rgb[rgbi].at(2 * x + offsets[c][0], 2 * y + offsets[c][1]) * tau_ref;
    result.ground_truth.channels[c] = std::move(plane);
  }
  return result;
}

double psnr_plane(const Plane& a, const Plane& b, double peak) {
  if (!a.same_size(b)) throw Error("psnr: image sizes differ");
  double mse = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a.pixels()[i] - b.pixels()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.size());
  if (mse <= 0.0) return 999.0;  // sentinel for identical images
  return 10.0 * std::log10(peak * peak / mse);
}

double psnr(const HdrImage& a, const HdrImage& b, double peak) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error("psnr: image sizes differ");
  double mse = 0.0;
  size_t count = 0;
  for (int c = 0; c < 4; ++c) {
    for (size_t i = 0; i < a.channels[c].size(); ++i) {
      const double d = a.channels[c].pixels()[i] - b.channels[c].pixels()[i];
      mse += d * d;
    }
    count += a.channels[c].size();
  }
  mse /= static_cast<double>(count);
  if (mse <= 0.0) return 999.0;
  return 10.0 * std::log10(peak * peak / mse);
}

double region_mse(const HdrImage& a, const HdrImage& b, const Mask& mask) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error("region_mse: image sizes differ");
  if (mask.width() != a.width() || mask.height() != a.height())
    throw Error("region_mse: mask size differs");
  double acc = 0.0;
  size_t count = 0;
  for (int c = 0; c < 4; ++c)
    for (size_t i = 0; i < mask.size(); ++i) {
      if (!mask.pixels()[i]) continue;
      const double d = a.channels[c].pixels()[i] - b.channels[c].pixels()[i];
      acc += d * d;
      ++count;
    }
  if (count == 0) throw Error("region_mse: empty mask");
  return acc / static_cast<double>(count);
}

void ExperimentReport::add(const std::string& metric, double value, double threshold,
                           bool less_is_pass) {
  ExperimentCheck check;
  check.metric = metric;
  check.value = value;
  check.threshold = threshold;
  check.less_is_pass = less_is_pass;
  check.pass = less_is_pass ? value < threshold : value >= threshold;
  pass = pass && check.pass;
  checks.push_back(check);
}

std::string report_to_text(const ExperimentReport& report) {
  std::ostringstream out;
  out << "experiment " << report.name << "\n";
  for (const auto& c : report.checks)
    out << c.metric << " " << std::setprecision(10) << c.value << " "
        << (c.less_is_pass ? "<" : ">=") << " " << c.threshold << " "
        << (c.pass ? "PASS" : "FAIL") << "\n";
  out << "overall " << (report.pass ? "PASS" : "FAIL") << "\n";
  return out.str();
}

}  // namespace rawhdr
