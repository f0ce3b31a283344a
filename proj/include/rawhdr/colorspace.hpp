#pragma once

#include <array>

#include "rawhdr/image.hpp"

namespace rawhdr {

/// Orthonormal (r, g1, g2, b) -> (Y, U, V, W) decorrelation matrix,
/// 4-decimal entries kept verbatim (the small orthonormality defect is
/// absorbed by downstream tolerances).
inline constexpr std::array<std::array<double, 4>, 4> kYuvwMatrix = {{
    {0.5, 0.5, 0.5, 0.5},
    {-0.5, 0.5, 0.5, -0.5},
    {0.65, 0.2784, -0.2784, -0.65},
    {-0.2784, 0.65, -0.65, 0.2784},
}};

/// Per-pixel multiply by kYuvwMatrix.
std::array<Plane, 4> yuvw_forward(const std::array<Plane, 4>& rggb);

/// Per-pixel multiply by the transpose (the inverse transform).
std::array<Plane, 4> yuvw_inverse(const std::array<Plane, 4>& yuvw);

/// Per-pixel 3x3 linear map from camera RGB to sRGB primaries. No clipping.
std::array<Plane, 3> camera_to_srgb(const std::array<Plane, 3>& rgb,
                                    const std::array<double, 9>& matrix);

/// Channel-wise gains; gains must be positive.
std::array<Plane, 3> white_balance(const std::array<Plane, 3>& rgb,
                                   const std::array<double, 3>& gains);

}  // namespace rawhdr
