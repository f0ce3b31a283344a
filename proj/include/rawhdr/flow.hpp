#pragma once

#include <vector>

#include "rawhdr/raw_io.hpp"
#include "rawhdr/stabilize.hpp"

namespace rawhdr {

/// Dense displacement field. Convention: target(x) ~ source(x + flow(x)),
/// i.e. the field lives on the target grid and points into the source.
struct FlowField {
  Plane u, v;
  int source_index = -1;
  int target_index = -1;

  int width() const { return u.width(); }
  int height() const { return u.height(); }
};

struct FlowParams {
  int levels = 5;
  int iterations = 100;
  double smoothness = 15.0;      // Horn-Schunck alpha^2, on [0,1]-normalized Y
  double consistency_eps = 1.0;  // px, forward-backward reciprocity bound
  bool identity = false;         // skip estimation: zero flow, all-valid masks
};

/// Pyramidal Horn-Schunck on a pair of Y planes, coarse-to-fine with
/// warping between levels. Flat inputs yield near-zero flow.
FlowField estimate_flow(const Plane& source_y, const Plane& target_y,
                        const FlowParams& params = {});

/// Pixel x is valid iff ||fwd(x) + bwd(x + fwd(x))|| < eps, with bwd sampled
/// bilinearly; positions whose forward target leaves the image are invalid.
Mask consistency_mask(const FlowField& fwd, const FlowField& bwd, double eps);

struct WarpResult {
  std::vector<Plane> planes;
  Mask valid;  // false where x + flow(x) leaves the image (value set to 0)
};

/// output(x) = frame(x + flow(x)) by bilinear interpolation, same flow for
/// every plane.
WarpResult warp_frame(const std::vector<const Plane*>& planes, const FlowField& flow);

/// Bracket resampled onto the reference grid.
struct AlignedStack {
  std::vector<StabilizedFrame> frames;  // warped stabilized frames
  std::vector<QuadFrame> originals;     // warped pre-normalization frames (counts)
  std::vector<Mask> masks;              // consistency AND in-bounds
  std::vector<FlowField> flows;         // ref -> i (reference entry is zero flow)
  int reference_index = 0;
  double tau_ref = 0.0;
  double black_offset = 0.0;
  double white_level = 0.0;

  size_t size() const { return frames.size(); }
  int width() const { return frames[reference_index].width(); }
  int height() const { return frames[reference_index].height(); }
};

/// For every non-reference frame: flow to/from the reference on the Y channel,
/// reciprocity mask, and warp of both the stabilized and the original frame.
/// The reference frame passes through untouched with an all-valid mask.
AlignedStack align_stack(const std::vector<StabilizedFrame>& stabilized,
                         const std::vector<QuadFrame>& originals, int reference_index,
                         double black_offset, double white_level,
                         const FlowParams& params = {});

}  // namespace rawhdr
