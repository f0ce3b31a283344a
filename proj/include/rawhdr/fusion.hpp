#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "rawhdr/flow.hpp"
#include "rawhdr/noise_model.hpp"

namespace rawhdr {

struct FusionParams {
  int patch_size = 7;     // k, odd
  double h = 2.0;         // similarity parameter
  double tau = 2.8;       // principal-value threshold, in units of sigma0
  int match_count = 16;   // K extended patches kept per group
  int search_radius = 10; // px around the reference patch
  int stride = 3;         // patch grid step, snapped to cover borders
  int max_coeffs = 3;     // principal directions cap; negative = unlimited
  int hdr_exponent = 12;  // even
  double sigma0 = 1.0;    // stabilized noise level of the reference frame
  bool sim_weight = true; // w_sim (false forces it to 1)
  bool snr_weight = true; // w_SNR (false forces it to 1)
  int threads = 0;        // 0 = hardware concurrency

  /// Throws UsageError on violated invariants (odd k, positive h/tau/sigma0,
  /// K >= 1, stride in [1, k], even hdr_exponent).
  void validate() const;
};

/// One row of the sample matrix: the 2D patch of frame `frame` at (x0, y0).
struct GroupRow {
  int frame = 0;
  int x0 = 0, y0 = 0;
  double weight = 1.0;
};

/// KN x k^2 patch group built around one reference patch. Rows whose 2D patch
/// touches an invalid pixel are dropped; the reference row always survives.
struct PatchGroup {
  std::vector<GroupRow> rows;
  std::vector<std::pair<int, int>> candidates;  // selected extended-patch positions
  int reference_row = 0;                        // index of (reference frame, center)
};

/// Volumetric matching: candidates within search_radius of (cx0, cy0) ranked by
/// mean squared difference on Y over commonly valid frame slices; the K best
/// (the center always among them) contribute their valid per-frame rows.
/// Coordinates are patch top-left corners, pre-snapped into the image.
PatchGroup build_patch_group(const AlignedStack& aligned, const std::vector<Plane>& y_planes,
                             int cx0, int cy0, const FusionParams& params);

/// Degree-`exponent` hat weight from per-channel patch means of the original
/// counts, averaged over the 4 channels, clamped to [0, 1].
double hdr_weight(const std::array<double, 4>& patch_means, double black_offset,
                  double white_level, int exponent);

/// exp(-d / (h*sigma_ref)^2) with d the mean squared Y difference.
double sim_weight(double mean_sq_diff, double h, double sigma_ref);

/// sqrt(tau_i / tau_ref).
double snr_weight(double tau_i, double tau_ref);

/// w_sim * w_HDR * w_SNR for one row (the standalone form of the per-row
/// weight used inside fuse_stack).
double compute_weight(double mean_sq_diff_y, const std::array<double, 4>& original_patch_means,
                      double tau_i, double tau_ref, double black_offset, double white_level,
                      const FusionParams& params);

/// Fills row weights of `group`: similarity measured against the reference 2D
/// patch on Y, HDR weight from the warped original frames, SNR from exposures.
void compute_group_weights(PatchGroup& group, const AlignedStack& aligned,
                           const std::vector<Plane>& y_planes, int cx0, int cy0,
                           const FusionParams& params);

/// Weighted PCA with the V1/(V1^2 - V2) bias correction: rows centered on the
/// weighted barycenter, principal directions from the SVD of W^(1/2)*Xbar,
/// kept iff sqrt(lambda_r) > tau*sigma0 and r < max_coeffs; returns the
/// filtered reference row. Degenerate weights (V1^2 <= V2) return the
/// barycenter alone.
Eigen::VectorXd weighted_pca_filter(const Eigen::MatrixXd& X, const Eigen::VectorXd& weights,
                                    int reference_row, const FusionParams& params);

/// Full fusion: per YUVW channel, groups on a stride grid (snapped so every
/// pixel is covered), weighted PCA filtering, uniform aggregation of the
/// overlapping estimates, then inverse YUVW and inverse VST. The result is
/// offset-free linear data in reference-exposure units.
HdrImage fuse_stack(const AlignedStack& aligned, const NoiseCurve& curve,
                    const FusionParams& params);

/// Classical per-pixel weighted irradiance average (identity camera response),
/// scaled to reference-exposure units. Pixels where every frame gets zero
/// weight fall back to the reference frame's normalized value.
HdrImage classic_hdr(const RawStack& stack, int hdr_exponent = 12);

}  // namespace rawhdr
