#include "rawhdr/fusion.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "rawhdr/colorspace.hpp"
#include "rawhdr/stabilize.hpp"
#include "rawhdr/util.hpp"

namespace rawhdr {

namespace {

double ipow(double base, int exponent) {
  double result = 1.0;
  double term = base;
  for (int e = exponent; e > 0; e >>= 1) {
    if (e & 1) result *= term;
    term *= term;
  }
  return result;
}

// True iff the k x k patch at (x0, y0) contains no invalid pixel.
bool slice_valid(const Mask& mask, int x0, int y0, int k) {
  for (int y = 0; y < k; ++y)
    for (int x = 0; x < k; ++x)
      if (!mask.at(x0 + x, y0 + y)) return false;
  return true;
}

double patch_mean(const Plane& plane, int x0, int y0, int k) {
  double acc = 0.0;
  for (int y = 0; y < k; ++y)
    for (int x = 0; x < k; ++x) acc += plane.at(x0 + x, y0 + y);
  return acc / (static_cast<double>(k) * k);
}

double patch_mean_sq_diff(const Plane& a, int ax0, int ay0, const Plane& b, int bx0, int by0,
                          int k) {
  double acc = 0.0;
  for (int y = 0; y < k; ++y)
    for (int x = 0; x < k; ++x) {
      const double d = a.at(ax0 + x, ay0 + y) - b.at(bx0 + x, by0 + y);
      acc += d * d;
    }
  return acc / (static_cast<double>(k) * k);
}

// Patch grid with the last row/column snapped to the border so every pixel
// is covered by at least one patch.
std::vector<int> stride_positions(int extent, int k, int stride) {
  std::vector<int> positions;
  const int last = extent - k;
  for (int p = 0;; p += stride) {
    const int snapped = std::min(p, last);
    positions.push_back(snapped);
    if (snapped == last) break;
  }
  return positions;
}

}  // namespace

void FusionParams::validate() const {
  if (patch_size < 1 || patch_size % 2 == 0)
    throw UsageError("patch size k must be odd and >= 1, got " + std::to_string(patch_size));
  if (h <= 0.0) throw UsageError("similarity parameter h must be positive");
  if (tau <= 0.0) throw UsageError("principal-value threshold tau must be positive");
  if (sigma0 <= 0.0) throw UsageError("sigma0 must be positive");
  if (match_count < 1) throw UsageError("K must be >= 1");
  if (search_radius < 0) throw UsageError("search radius must be >= 0");
  if (stride < 1 || stride > patch_size)
    throw UsageError("stride must lie in [1, k]");
  if (hdr_exponent < 2 || hdr_exponent % 2 != 0)
    throw UsageError("HDR weight exponent must be even and >= 2");
  if (threads < 0) throw UsageError("thread count must be >= 0");
}

PatchGroup build_patch_group(const AlignedStack& aligned, const std::vector<Plane>& y_planes,
                             int cx0, int cy0, const FusionParams& params) {
  const int k = params.patch_size;
  const int n = static_cast<int>(aligned.size());
  const int w = aligned.width(), h = aligned.height();
  cx0 = std::clamp(cx0, 0, w - k);
  cy0 = std::clamp(cy0, 0, h - k);

  struct Candidate {
    int x0, y0;
    double dist;
    bool center;
  };

  // Valid frame slices of the center's extended patch.
  std::vector<char> center_slices(n);
  for (int f = 0; f < n; ++f) center_slices[f] = slice_valid(aligned.masks[f], cx0, cy0, k);

  std::vector<Candidate> candidates;
  for (int qy0 = std::max(0, cy0 - params.search_radius);
       qy0 <= std::min(h - k, cy0 + params.search_radius); ++qy0) {
    for (int qx0 = std::max(0, cx0 - params.search_radius);
         qx0 <= std::min(w - k, cx0 + params.search_radius); ++qx0) {
      double dist = 0.0;
      int common = 0;
      for (int f = 0; f < n; ++f) {
        if (!center_slices[f] || !slice_valid(aligned.masks[f], qx0, qy0, k)) continue;
        dist += patch_mean_sq_diff(y_planes[f], cx0, cy0, y_planes[f], qx0, qy0, k);
        ++common;
      }
      if (common == 0) continue;  // cannot happen for the reference slice, kept for safety
      candidates.push_back({qx0, qy0, dist / common, qx0 == cx0 && qy0 == cy0});
    }
  }

  // The center has distance exactly 0 and wins ties, so it always sorts
  // first and is always selected.
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.center != b.center) return a.center;
    if (a.y0 != b.y0) return a.y0 < b.y0;
    return a.x0 < b.x0;
  });
  const size_t keep = std::min<size_t>(params.match_count, candidates.size());

  PatchGroup group;
  group.reference_row = -1;
  for (size_t ci = 0; ci < keep; ++ci) {
    const Candidate& cand = candidates[ci];
    group.candidates.emplace_back(cand.x0, cand.y0);
    for (int f = 0; f < n; ++f) {
      if (!slice_valid(aligned.masks[f], cand.x0, cand.y0, k)) continue;
      if (cand.center && f == aligned.reference_index)
        group.reference_row = static_cast<int>(group.rows.size());
      group.rows.push_back({f, cand.x0, cand.y0, 1.0});
    }
  }
  if (group.reference_row < 0) throw Error("patch group lost its reference row");
  return group;
}

double hdr_weight(const std::array<double, 4>& patch_means, double black_offset,
                  double white_level, int exponent) {
  double acc = 0.0;
  for (double mean : patch_means) {
    const double t = 2.0 * (mean - black_offset) / (white_level - black_offset) - 1.0;
    acc += std::clamp(1.0 - ipow(t, exponent), 0.0, 1.0);
  }
  return acc / 4.0;
}

double sim_weight(double mean_sq_diff, double h, double sigma_ref) {
  const double scale = h * sigma_ref;
  return std::exp(-mean_sq_diff / (scale * scale));
}

double snr_weight(double tau_i, double tau_ref) { return std::sqrt(tau_i / tau_ref); }

double compute_weight(double mean_sq_diff_y, const std::array<double, 4>& original_patch_means,
                      double tau_i, double tau_ref, double black_offset, double white_level,
                      const FusionParams& params) {
  const double w_sim =
      params.sim_weight ? sim_weight(mean_sq_diff_y, params.h, params.sigma0) : 1.0;
  const double w_hdr =
      hdr_weight(original_patch_means, black_offset, white_level, params.hdr_exponent);
  const double w_snr = params.snr_weight ? snr_weight(tau_i, tau_ref) : 1.0;
  return w_sim * w_hdr * w_snr;
}

void compute_group_weights(PatchGroup& group, const AlignedStack& aligned,
                           const std::vector<Plane>& y_planes, int cx0, int cy0,
                           const FusionParams& params) {
  const int k = params.patch_size;
  const Plane& ref_y = y_planes[aligned.reference_index];
  for (GroupRow& row : group.rows) {
    const double d =
        patch_mean_sq_diff(ref_y, cx0, cy0, y_planes[row.frame], row.x0, row.y0, k);
    std::array<double, 4> means;
    for (int c = 0; c < 4; ++c)
      means[c] = patch_mean(aligned.originals[row.frame].channels[c], row.x0, row.y0, k);
    row.weight = compute_weight(d, means, aligned.frames[row.frame].exposure_time,
                                aligned.tau_ref, aligned.black_offset, aligned.white_level,
                                params);
  }
}

Eigen::VectorXd weighted_pca_filter(const Eigen::MatrixXd& X, const Eigen::VectorXd& weights,
                                    int reference_row, const FusionParams& params) {
  const Eigen::Index rows = X.rows();
  if (rows == 0 || weights.size() != rows) throw Error("weighted_pca_filter: bad inputs");
  if (reference_row < 0 || reference_row >= rows)
    throw Error("weighted_pca_filter: reference row out of range");

  const double v1 = weights.sum();
  if (!(v1 > 0.0)) return X.row(reference_row);  // all weights vanished: passthrough
  const double v2 = weights.squaredNorm();

  const Eigen::RowVectorXd barycenter = (weights.transpose() * X) / v1;
  const double correction = v1 * v1 - v2;
  if (correction <= 1e-12 * v1 * v1) return barycenter;  // single effective sample
  if (params.max_coeffs == 0) return barycenter;

  Eigen::MatrixXd centered = X.rowwise() - barycenter;
  const Eigen::VectorXd sqrt_w = weights.array().sqrt();
  const Eigen::MatrixXd weighted = sqrt_w.asDiagonal() * centered;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(weighted, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const Eigen::MatrixXd& v = svd.matrixV();

  const double scale = v1 / correction;
  const double threshold = params.tau * params.sigma0;
  const Eigen::RowVectorXd ref_centered = centered.row(reference_row);

  Eigen::RowVectorXd result = barycenter;
  const Eigen::Index limit =
      params.max_coeffs < 0 ? sv.size() : std::min<Eigen::Index>(params.max_coeffs, sv.size());
  for (Eigen::Index r = 0; r < limit; ++r) {
    const double principal_value = std::sqrt(sv[r] * sv[r] * scale);
    if (principal_value <= threshold) break;  // values sorted decreasing
    const double coeff = ref_centered.dot(v.col(r));
    result += coeff * v.col(r).transpose();
  }
  return result;
}

HdrImage fuse_stack(const AlignedStack& aligned, const NoiseCurve& curve,
                    const FusionParams& params) {
  const int n = static_cast<int>(aligned.size());
  if (n == 0) throw Error("fuse_stack: empty stack");
  const int w = aligned.width(), h = aligned.height();
  const int k = params.patch_size;
  if (w < k || h < k) throw Error("fuse_stack: frames smaller than the patch size");

  // YUVW planes of every aligned frame; matching runs on Y only.
  std::vector<std::array<Plane, 4>> yuvw(n);
  std::vector<Plane> y_planes(n);
  for (int i = 0; i < n; ++i) {
    yuvw[i] = yuvw_forward(aligned.frames[i].channels);
    y_planes[i] = yuvw[i][0];
  }

  const std::vector<int> xs = stride_positions(w, k, params.stride);
  const std::vector<int> ys = stride_positions(h, k, params.stride);
  const int64_t total = static_cast<int64_t>(xs.size()) * ys.size();

  const int threads = resolve_threads(params.threads);
  struct Buffers {
    std::array<Plane, 4> accum;
    Plane count;
  };
  const int workers = static_cast<int>(std::min<int64_t>(threads, total));
  std::vector<Buffers> buffers(std::max(1, workers));
  for (auto& buf : buffers) {
    for (auto& p : buf.accum) p = Plane(w, h, 0.0);
    buf.count = Plane(w, h, 0.0);
  }

  parallel_chunks(total, workers, [&](int worker, int64_t begin, int64_t end) {
    Buffers& buf = buffers[static_cast<size_t>(worker)];
    Eigen::MatrixXd X;
    Eigen::VectorXd weight_vec;
    for (int64_t pos = begin; pos < end; ++pos) {
      const int cx0 = xs[pos % xs.size()];
      const int cy0 = ys[pos / xs.size()];
      PatchGroup group = build_patch_group(aligned, y_planes, cx0, cy0, params);
      compute_group_weights(group, aligned, y_planes, cx0, cy0, params);

      const Eigen::Index rows = static_cast<Eigen::Index>(group.rows.size());
      X.resize(rows, static_cast<Eigen::Index>(k) * k);
      weight_vec.resize(rows);
      for (Eigen::Index r = 0; r < rows; ++r) weight_vec[r] = group.rows[r].weight;

      for (int c = 0; c < 4; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
          const GroupRow& row = group.rows[r];
          const Plane& plane = yuvw[row.frame][c];
          Eigen::Index col = 0;
          for (int y = 0; y < k; ++y)
            for (int x = 0; x < k; ++x)
              X(r, col++) = plane.at(row.x0 + x, row.y0 + y);
        }
        const Eigen::VectorXd filtered =
            weighted_pca_filter(X, weight_vec, group.reference_row, params);
        Eigen::Index col = 0;
        for (int y = 0; y < k; ++y)
          for (int x = 0; x < k; ++x) buf.accum[c].at(cx0 + x, cy0 + y) += filtered[col++];
      }
      for (int y = 0; y < k; ++y)
        for (int x = 0; x < k; ++x) buf.count.at(cx0 + x, cy0 + y) += 1.0;
    }
  });

  // Merge per-worker buffers in a fixed order; double accumulation keeps the
  // result thread-count independent far below the 1e-6 contract.
  std::array<Plane, 4> fused;
  Plane count(w, h, 0.0);
  for (int c = 0; c < 4; ++c) fused[c] = Plane(w, h, 0.0);
  for (const Buffers& buf : buffers) {
    for (int c = 0; c < 4; ++c)
      for (size_t i = 0; i < fused[c].size(); ++i)
        fused[c].pixels()[i] += buf.accum[c].pixels()[i];
    for (size_t i = 0; i < count.size(); ++i) count.pixels()[i] += buf.count.pixels()[i];
  }
  for (int c = 0; c < 4; ++c)
    for (size_t i = 0; i < fused[c].size(); ++i) {
      const double cnt = count.pixels()[i];
      fused[c].pixels()[i] = cnt > 0.0 ? fused[c].pixels()[i] / cnt : 0.0;
    }

  const std::array<Plane, 4> stabilized = yuvw_inverse(fused);
  HdrImage hdr;
  for (int c = 0; c < 4; ++c) {
    hdr.channels[c] = stabilized[c];
    const NoiseChannelModel& m = curve.channels[c];
    for (double& v : hdr.channels[c].pixels())
      v = vst_value_inverse(m, params.sigma0, curve.sigma_floor, v) - aligned.black_offset;
  }
  return hdr;
}

HdrImage classic_hdr(const RawStack& stack, int hdr_exponent) {
  if (stack.frames.empty()) throw Error("classic_hdr: empty stack");
  const int w = stack.frames[0].width(), h = stack.frames[0].height();
  const double tau_ref = stack.tau_ref();
  const double offset = stack.black_offset;

  HdrImage out;
  for (int c = 0; c < 4; ++c) out.channels[c] = Plane(w, h, 0.0);

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double wsum = 0.0;
      std::array<double, 4> acc = {0, 0, 0, 0};
      for (const QuadFrame& frame : stack.frames) {
        const std::array<double, 4> values = {
            frame.channels[0].at(x, y), frame.channels[1].at(x, y),
            frame.channels[2].at(x, y), frame.channels[3].at(x, y)};
        const double wgt = hdr_weight(values, offset, stack.white_level, hdr_exponent);
        wsum += wgt;
        for (int c = 0; c < 4; ++c)
          acc[c] += wgt * (values[c] - offset) / frame.exposure_time;
      }
      if (wsum > 0.0) {
        for (int c = 0; c < 4; ++c) out.channels[c].at(x, y) = acc[c] * tau_ref / wsum;
      } else {
        const QuadFrame& ref = stack.frames[stack.reference_index];
        for (int c = 0; c < 4; ++c)
          out.channels[c].at(x, y) =
              (ref.channels[c].at(x, y) - offset) * tau_ref / ref.exposure_time;
      }
    }
  return out;
}

}  // namespace rawhdr
