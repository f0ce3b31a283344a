#include "rawhdr/flow.hpp"

#include <algorithm>
#include <cmath>

#include "rawhdr/colorspace.hpp"

namespace rawhdr {

namespace {

Plane downsample_half(const Plane& src) {
  const int w = std::max(1, (src.width() + 1) / 2);
  const int h = std::max(1, (src.height() + 1) / 2);
  Plane dst(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int x0 = 2 * x, y0 = 2 * y;
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const int y1 = std::min(y0 + 1, src.height() - 1);
      dst.at(x, y) =
          0.25 * (src.at(x0, y0) + src.at(x1, y0) + src.at(x0, y1) + src.at(x1, y1));
    }
  return dst;
}

Plane resize_bilinear(const Plane& src, int w, int h) {
  Plane dst(w, h);
  const double sx = static_cast<double>(src.width()) / w;
  const double sy = static_cast<double>(src.height()) / h;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      dst.at(x, y) = bilinear_clamped(src, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5);
  return dst;
}

Plane warp_clamped(const Plane& src, const Plane& u, const Plane& v) {
  Plane dst(src.width(), src.height());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x)
      dst.at(x, y) = bilinear_clamped(src, x + u.at(x, y), y + v.at(x, y));
  return dst;
}

// Horn-Schunck neighborhood average (4-neighbors 1/6, diagonals 1/12),
// replicated borders.
Plane hs_average(const Plane& p) {
  const int w = p.width(), h = p.height();
  Plane out(w, h);
  auto clampd = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int xm = clampd(x - 1, 0, w - 1), xp = clampd(x + 1, 0, w - 1);
      const int ym = clampd(y - 1, 0, h - 1), yp = clampd(y + 1, 0, h - 1);
      const double cross = p.at(xm, y) + p.at(xp, y) + p.at(x, ym) + p.at(x, yp);
      const double diag = p.at(xm, ym) + p.at(xp, ym) + p.at(xm, yp) + p.at(xp, yp);
      out.at(x, y) = cross / 6.0 + diag / 12.0;
    }
  return out;
}

// One pyramid level: iterate the classical fixed-point update for the
// residual displacement against the warped source.
void hs_level(const Plane& source, const Plane& target, Plane& u, Plane& v, int iterations,
              double alpha2) {
  const int w = target.width(), h = target.height();
  const Plane warped = warp_clamped(source, u, v);

  Plane ix(w, h), iy(w, h), it(w, h);
  auto clampd = [](int val, int lo, int hi) { return val < lo ? lo : (val > hi ? hi : val); };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int xm = clampd(x - 1, 0, w - 1), xp = clampd(x + 1, 0, w - 1);
      const int ym = clampd(y - 1, 0, h - 1), yp = clampd(y + 1, 0, h - 1);
      // Derivatives of the average image stabilize the linearization.
      ix.at(x, y) = 0.25 * (warped.at(xp, y) - warped.at(xm, y) + target.at(xp, y) -
                            target.at(xm, y));
      iy.at(x, y) = 0.25 * (warped.at(x, yp) - warped.at(x, ym) + target.at(x, yp) -
                            target.at(x, ym));
      it.at(x, y) = warped.at(x, y) - target.at(x, y);
    }

  Plane du(w, h, 0.0), dv(w, h, 0.0);
  for (int iter = 0; iter < iterations; ++iter) {
    const Plane dua = hs_average(du);
    const Plane dva = hs_average(dv);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double gx = ix.at(x, y), gy = iy.at(x, y);
        const double t =
            (gx * dua.at(x, y) + gy * dva.at(x, y) + it.at(x, y)) / (alpha2 + gx * gx + gy * gy);
        du.at(x, y) = dua.at(x, y) - gx * t;
        dv.at(x, y) = dva.at(x, y) - gy * t;
      }
  }
  for (size_t i = 0; i < u.size(); ++i) {
    u.pixels()[i] += du.pixels()[i];
    v.pixels()[i] += dv.pixels()[i];
  }
}

}  // namespace

FlowField estimate_flow(const Plane& source_y, const Plane& target_y, const FlowParams& params) {
  if (!source_y.same_size(target_y)) throw Error("flow planes must match in size");
  FlowField flow;
  flow.u = Plane(target_y.width(), target_y.height(), 0.0);
  flow.v = Plane(target_y.width(), target_y.height(), 0.0);
  if (params.identity) return flow;

  // Joint [0,1] normalization so the smoothness weight is scale-free.
  double peak = std::max(std::abs(plane_max(source_y)), std::abs(plane_max(target_y)));
  peak = std::max(peak, std::abs(plane_min(source_y)));
  peak = std::max(peak, std::abs(plane_min(target_y)));
  if (peak < 1e-12) return flow;  // flat pair, nothing to estimate
  Plane src = source_y, tgt = target_y;
  for (double& v : src.pixels()) v /= peak;
  for (double& v : tgt.pixels()) v /= peak;

  std::vector<Plane> src_pyr = {src}, tgt_pyr = {tgt};
  for (int level = 1; level < std::max(1, params.levels); ++level) {
    const Plane& prev = src_pyr.back();
    if (std::min(prev.width(), prev.height()) < 16) break;
    src_pyr.push_back(downsample_half(src_pyr.back()));
    tgt_pyr.push_back(downsample_half(tgt_pyr.back()));
  }

  const int coarsest = static_cast<int>(src_pyr.size()) - 1;
  Plane u(src_pyr[coarsest].width(), src_pyr[coarsest].height(), 0.0);
  Plane v(src_pyr[coarsest].width(), src_pyr[coarsest].height(), 0.0);
  for (int level = coarsest; level >= 0; --level) {
    if (level != coarsest) {
      const int w = src_pyr[level].width(), h = src_pyr[level].height();
      u = resize_bilinear(u, w, h);
      v = resize_bilinear(v, w, h);
      for (double& val : u.pixels()) val *= 2.0;
      for (double& val : v.pixels()) val *= 2.0;
    }
    hs_level(src_pyr[level], tgt_pyr[level], u, v, params.iterations, params.smoothness);
  }
  flow.u = std::move(u);
  flow.v = std::move(v);
  return flow;
}

Mask consistency_mask(const FlowField& fwd, const FlowField& bwd, double eps) {
  if (!fwd.u.same_size(bwd.u)) throw Error("flow fields must match in size");
  const int w = fwd.width(), h = fwd.height();
  Mask mask(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double fu = fwd.u.at(x, y), fv = fwd.v.at(x, y);
      const double tx = x + fu, ty = y + fv;
      if (!in_bounds(bwd.u, tx, ty)) continue;
      const double bu = bilinear_clamped(bwd.u, tx, ty);
      const double bv = bilinear_clamped(bwd.v, tx, ty);
      const double err = std::hypot(fu + bu, fv + bv);
      mask.at(x, y) = err < eps ? 1 : 0;
    }
  return mask;
}

WarpResult warp_frame(const std::vector<const Plane*>& planes, const FlowField& flow) {
  if (planes.empty()) throw Error("warp_frame: no planes");
  const int w = planes[0]->width(), h = planes[0]->height();
  if (flow.width() != w || flow.height() != h)
    throw Error("flow field size does not match the frame");
  WarpResult result;
  result.valid = Mask(w, h, 0);
  result.planes.reserve(planes.size());
  for (size_t p = 0; p < planes.size(); ++p) result.planes.emplace_back(w, h, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double sx = x + flow.u.at(x, y);
      const double sy = y + flow.v.at(x, y);
      if (!in_bounds(*planes[0], sx, sy)) continue;
      result.valid.at(x, y) = 1;
      if (flow.u.at(x, y) == 0.0 && flow.v.at(x, y) == 0.0) {
        for (size_t p = 0; p < planes.size(); ++p)
          result.planes[p].at(x, y) = planes[p]->at(x, y);
      } else {
        for (size_t p = 0; p < planes.size(); ++p)
          result.planes[p].at(x, y) = bilinear_clamped(*planes[p], sx, sy);
      }
    }
  return result;
}

AlignedStack align_stack(const std::vector<StabilizedFrame>& stabilized,
                         const std::vector<QuadFrame>& originals, int reference_index,
                         double black_offset, double white_level, const FlowParams& params) {
  const int n = static_cast<int>(stabilized.size());
  if (n == 0 || originals.size() != stabilized.size())
    throw Error("align_stack: stabilized and original frame counts must match");
  if (reference_index < 0 || reference_index >= n)
    throw Error("align_stack: reference index out of range");
  const int w = stabilized[reference_index].width();
  const int h = stabilized[reference_index].height();
  for (const auto& f : stabilized)
    if (f.width() != w || f.height() != h) throw Error("align_stack: frame sizes differ");

  AlignedStack aligned;
  aligned.reference_index = reference_index;
  aligned.tau_ref = stabilized[reference_index].exposure_time;
  aligned.black_offset = black_offset;
  aligned.white_level = white_level;
  aligned.frames.resize(n);
  aligned.originals.resize(n);
  aligned.masks.resize(n);
  aligned.flows.resize(n);

  // Brightness channel of the stabilized frames drives the flow.
  std::vector<Plane> y_planes(n);
  for (int i = 0; i < n; ++i) y_planes[i] = yuvw_forward(stabilized[i].channels)[0];

  for (int i = 0; i < n; ++i) {
    if (i == reference_index) {
      aligned.frames[i] = stabilized[i];
      aligned.originals[i] = originals[i];
      aligned.masks[i] = Mask(w, h, 1);
      aligned.flows[i].u = Plane(w, h, 0.0);
      aligned.flows[i].v = Plane(w, h, 0.0);
      aligned.flows[i].source_index = i;
      aligned.flows[i].target_index = i;
      continue;
    }
    FlowField fwd = estimate_flow(y_planes[i], y_planes[reference_index], params);
    fwd.source_index = i;
    fwd.target_index = reference_index;
    FlowField bwd = estimate_flow(y_planes[reference_index], y_planes[i], params);
    bwd.source_index = reference_index;
    bwd.target_index = i;
    Mask consistent = consistency_mask(fwd, bwd, params.consistency_eps);

    std::vector<const Plane*> planes;
    for (int c = 0; c < 4; ++c) planes.push_back(&stabilized[i].channels[c]);
    for (int c = 0; c < 4; ++c) planes.push_back(&originals[i].channels[c]);
    WarpResult warped = warp_frame(planes, fwd);

    aligned.frames[i].exposure_time = stabilized[i].exposure_time;
    aligned.frames[i].stabilized_sigma = stabilized[i].stabilized_sigma;
    aligned.originals[i].exposure_time = originals[i].exposure_time;
    for (int c = 0; c < 4; ++c) {
      aligned.frames[i].channels[c] = std::move(warped.planes[c]);
      aligned.originals[i].channels[c] = std::move(warped.planes[4 + c]);
    }
    Mask mask(w, h, 0);
    for (size_t px = 0; px < mask.size(); ++px)
      mask.pixels()[px] = (consistent.pixels()[px] && warped.valid.pixels()[px]) ? 1 : 0;
    aligned.masks[i] = std::move(mask);
    aligned.flows[i] = std::move(fwd);
  }
  return aligned;
}

}  // namespace rawhdr
