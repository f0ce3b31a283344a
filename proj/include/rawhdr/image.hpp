#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rawhdr {

/// Error raised by library operations (I/O, malformed inputs, numeric degeneracies).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied parameters (CLI maps these to a usage error).
struct UsageError : Error {
  using Error::Error;
};

/// Row-major 2D image. Pixels addressed as at(x, y) with x the column.
template <typename T>
class Image {
public:
  Image() = default;
  Image(int width, int height, T value = T{})
      : w_(width), h_(height), data_(static_cast<size_t>(width) * height, value) {
    if (width <= 0 || height <= 0)
      throw Error("image dimensions must be positive, got " + std::to_string(width) + "x" +
                  std::to_string(height));
  }

  int width() const { return w_; }
  int height() const { return h_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y) { return data_[static_cast<size_t>(y) * w_ + x]; }
  const T& at(int x, int y) const { return data_[static_cast<size_t>(y) * w_ + x]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& pixels() { return data_; }
  const std::vector<T>& pixels() const { return data_; }

  void fill(T value) { data_.assign(data_.size(), value); }

  bool same_size(const Image& other) const { return w_ == other.w_ && h_ == other.h_; }

  bool operator==(const Image& other) const {
    return w_ == other.w_ && h_ == other.h_ && data_ == other.data_;
  }

private:
  int w_ = 0, h_ = 0;
  std::vector<T> data_;
};

using Plane = Image<double>;
using Mask = Image<uint8_t>;

/// Fused 4-channel (r, g1, g2, b) linear image at quad resolution,
/// in reference-exposure units with the black offset removed.
struct HdrImage {
  std::array<Plane, 4> channels;

  int width() const { return channels[0].width(); }
  int height() const { return channels[0].height(); }
};

inline bool in_bounds(const Plane& p, double x, double y) {
  return x >= 0.0 && y >= 0.0 && x <= p.width() - 1.0 && y <= p.height() - 1.0;
}

/// Bilinear sample with taps clamped to the image border.
template <typename T>
double bilinear_clamped(const Image<T>& img, double x, double y) {
  const int w = img.width(), h = img.height();
  if (x < 0.0) x = 0.0;
  if (y < 0.0) y = 0.0;
  if (x > w - 1.0) x = w - 1.0;
  if (y > h - 1.0) y = h - 1.0;
  int x0 = static_cast<int>(x);
  int y0 = static_cast<int>(y);
  if (x0 > w - 2) x0 = w - 2;
  if (y0 > h - 2) y0 = h - 2;
  if (x0 < 0) x0 = 0;
  if (y0 < 0) y0 = 0;
  const int x1 = (w == 1) ? x0 : x0 + 1;
  const int y1 = (h == 1) ? y0 : y0 + 1;
  const double fx = x - x0, fy = y - y0;
  const double v00 = img.at(x0, y0), v10 = img.at(x1, y0);
  const double v01 = img.at(x0, y1), v11 = img.at(x1, y1);
  return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11);
}

double plane_min(const Plane& p);
double plane_max(const Plane& p);
double plane_mean(const Plane& p);
/// Sample standard deviation over all pixels.
double plane_std(const Plane& p);
/// Value below which `pct` percent of the samples fall (linear interpolation between ranks).
double percentile(std::vector<double> values, double pct);

}  // namespace rawhdr
