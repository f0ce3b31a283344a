#include "rawhdr/colorspace.hpp"

namespace rawhdr {

namespace {

std::array<Plane, 4> apply4(const std::array<Plane, 4>& in, bool transpose) {
  const int w = in[0].width(), h = in[0].height();
  for (int c = 1; c < 4; ++c)
    if (!in[c].same_size(in[0])) throw Error("4-channel planes differ in size");
  std::array<Plane, 4> out;
  for (int c = 0; c < 4; ++c) out[c] = Plane(w, h);
  const size_t n = in[0].size();
  for (size_t i = 0; i < n; ++i) {
    const double v0 = in[0].pixels()[i], v1 = in[1].pixels()[i];
    const double v2 = in[2].pixels()[i], v3 = in[3].pixels()[i];
    for (int r = 0; r < 4; ++r) {
      const auto& m = kYuvwMatrix;
      const double acc = transpose
                             ? m[0][r] * v0 + m[1][r] * v1 + m[2][r] * v2 + m[3][r] * v3
                             : m[r][0] * v0 + m[r][1] * v1 + m[r][2] * v2 + m[r][3] * v3;
      out[r].pixels()[i] = acc;
    }
  }
  return out;
}

}  // namespace

std::array<Plane, 4> yuvw_forward(const std::array<Plane, 4>& rggb) {
  return apply4(rggb, false);
}

std::array<Plane, 4> yuvw_inverse(const std::array<Plane, 4>& yuvw) {
  return apply4(yuvw, true);
}

std::array<Plane, 3> camera_to_srgb(const std::array<Plane, 3>& rgb,
                                    const std::array<double, 9>& matrix) {
  const int w = rgb[0].width(), h = rgb[0].height();
  std::array<Plane, 3> out = {Plane(w, h), Plane(w, h), Plane(w, h)};
  const size_t n = rgb[0].size();
  for (size_t i = 0; i < n; ++i) {
    const double r = rgb[0].pixels()[i], g = rgb[1].pixels()[i], b = rgb[2].pixels()[i];
    for (int k = 0; k < 3; ++k)
      out[k].pixels()[i] = matrix[3 * k] * r + matrix[3 * k + 1] * g + matrix[3 * k + 2] * b;
  }
  return out;
}

std::array<Plane, 3> white_balance(const std::array<Plane, 3>& rgb,
                                   const std::array<double, 3>& gains) {
  for (double g : gains)
    if (g <= 0.0) throw Error("white balance gains must be positive");
  std::array<Plane, 3> out = rgb;
  for (int c = 0; c < 3; ++c)
    for (double& v : out[c].pixels()) v *= gains[c];
  return out;
}

}  // namespace rawhdr
