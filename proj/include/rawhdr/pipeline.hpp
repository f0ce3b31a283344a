#pragma once

#include <optional>
#include <string>

#include "rawhdr/flow.hpp"
#include "rawhdr/fusion.hpp"
#include "rawhdr/noise_model.hpp"

namespace rawhdr {

struct PipelineOptions {
  FusionParams fusion;
  FlowParams flow;
  NoiseEstimationParams noise;
  std::optional<NoiseCurve> curve;  // skip estimation when provided
  std::string dump_flow_dir;        // empty = no debug dump
};

struct PipelineResult {
  HdrImage hdr;
  NoiseCurve curve;
};

/// estimate (or take) the noise curve -> normalize exposures -> variance
/// stabilize with the shared curve -> align on Y -> fuse.
PipelineResult run_fuse_pipeline(const RawStack& stack, const PipelineOptions& options);

/// The alignment half of the pipeline, reusable by experiments.
AlignedStack stabilize_and_align(const RawStack& stack, const NoiseCurve& curve,
                                 double sigma0, const FlowParams& flow_params);

}  // namespace rawhdr
