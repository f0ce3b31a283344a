"""Joint denoising and HDR fusion of RAW exposure brackets.

Thin wrapper around the C++ core. All images are numpy arrays: quad images
are (4, H, W) float64 in (r, g1, g2, b) order, CFA images (H, W), flow
fields (2, H, W) in (u, v) order.
"""

from ._core import (
    classic_hdr,
    demosaick,
    disassemble_cfa,
    estimate_flow,
    estimate_noise,
    experiments,
    fuse,
    hdr_weight,
    psnr,
    reassemble_cfa,
    run_experiment,
    simulate,
    tone_map,
    vst_forward,
    vst_inverse,
    warp,
    weighted_pca_filter,
    yuvw_forward,
    yuvw_inverse,
)

__all__ = [
    "classic_hdr",
    "demosaick",
    "disassemble_cfa",
    "estimate_flow",
    "estimate_noise",
    "experiments",
    "fuse",
    "hdr_weight",
    "psnr",
    "reassemble_cfa",
    "run_experiment",
    "simulate",
    "tone_map",
    "vst_forward",
    "vst_inverse",
    "warp",
    "weighted_pca_filter",
    "yuvw_forward",
    "yuvw_inverse",
]

__version__ = "0.1.0"
