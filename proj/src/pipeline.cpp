#include "rawhdr/pipeline.hpp"

#include <filesystem>

#include "rawhdr/stabilize.hpp"

namespace rawhdr {

AlignedStack stabilize_and_align(const RawStack& stack, const NoiseCurve& curve,
                                 double sigma0, const FlowParams& flow_params) {
  const double tau_ref = stack.tau_ref();
  std::vector<StabilizedFrame> stabilized;
  stabilized.reserve(stack.frames.size());
  for (const QuadFrame& frame : stack.frames) {
    const QuadFrame normalized = normalize_exposure(frame, tau_ref, stack.black_offset);
    stabilized.push_back(vst_forward(normalized, curve, sigma0, tau_ref));
  }
  return align_stack(stabilized, stack.frames, stack.reference_index, stack.black_offset,
                     stack.white_level, flow_params);
}

PipelineResult run_fuse_pipeline(const RawStack& stack, const PipelineOptions& options) {
  PipelineResult result;
  result.curve =
      options.curve ? *options.curve : estimate_noise_curve(stack, options.noise);

  const AlignedStack aligned =
      stabilize_and_align(stack, result.curve, options.fusion.sigma0, options.flow);

  if (!options.dump_flow_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(options.dump_flow_dir);
    for (size_t i = 0; i < aligned.flows.size(); ++i) {
      if (static_cast<int>(i) == aligned.reference_index) continue;
      const fs::path base = fs::path(options.dump_flow_dir);
      save_pfm({&aligned.flows[i].u}, (base / ("flow_" + std::to_string(i) + "_u.pfm")).string());
      save_pfm({&aligned.flows[i].v}, (base / ("flow_" + std::to_string(i) + "_v.pfm")).string());
    }
  }

  result.hdr = fuse_stack(aligned, result.curve, options.fusion);
  return result;
}

}  // namespace rawhdr
