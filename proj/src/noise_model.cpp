#include "rawhdr/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <vector>

namespace rawhdr {

namespace {

// Orthonormal DCT-II basis: noise stays white with the same sigma across
// coefficients.
std::vector<double> dct_basis(int n) {
  std::vector<double> basis(static_cast<size_t>(n) * n);
  for (int k = 0; k < n; ++k) {
    const double alpha = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i)
      basis[static_cast<size_t>(k) * n + i] =
          alpha * std::cos(M_PI * (2.0 * i + 1.0) * k / (2.0 * n));
  }
  return basis;
}

struct PatchStats {
  double mean;
  double low_freq_energy;           // sum of squared coefficients with 0 < i+j < S/2
  std::vector<double> high_coeffs;  // coefficients with i+j >= S
};

double median_of(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double med = v[mid];
  if (v.size() % 2 == 0) {
    const double lower = *std::max_element(v.begin(), v.begin() + mid);
    med = 0.5 * (med + lower);
  }
  return med;
}

// MAD scaled to Gaussian sigma.
double robust_sigma(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const double med = median_of(values);
  for (double& v : values) v = std::abs(v - med);
  const double mad = median_of(values);
  return 1.4826 * mad;
}

// Least squares fit of sigma^2 = a*x + b over control points. Falls back to
// the constant model when the intensities barely spread (flat stacks).
void fit_linear_variance(NoiseChannelModel& model, double white_level, double sigma_floor) {
  const auto& pts = model.control_points;
  if (pts.empty()) {
    model.a = 0.0;
    model.b = sigma_floor * sigma_floor;
    return;
  }
  double min_x = pts[0][0], max_x = pts[0][0];
  for (const auto& p : pts) {
    min_x = std::min(min_x, p[0]);
    max_x = std::max(max_x, p[0]);
  }
  double mean_var = 0.0;
  for (const auto& p : pts) mean_var += p[1] * p[1];
  mean_var /= static_cast<double>(pts.size());

  if (pts.size() < 2 || (max_x - min_x) < 0.01 * white_level) {
    model.a = 0.0;
    model.b = std::max(mean_var, sigma_floor * sigma_floor);
    return;
  }

  // The sigma^2 estimates carry multiplicative error, so after a plain LS
  // pass the fit is refined with weights 1/variance^2 taken from the first
  // pass. This keeps the intercept from being steered by the bright bins,
  // whose absolute errors are large.
  auto weighted_fit = [&](const std::function<double(double)>& weight) {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : pts) {
      const double x = p[0], y = p[1] * p[1];
      const double w = weight(x);
      sw += w;
      sx += w * x;
      sy += w * y;
      sxx += w * x * x;
      sxy += w * x * y;
    }
    const double denom = sw * sxx - sx * sx;
    const double a = (sw * sxy - sx * sy) / denom;
    return std::array<double, 2>{a, (sy - a * sx) / sw};
  };

  const auto first = weighted_fit([](double) { return 1.0; });
  std::array<double, 2> result = first;
  if (std::isfinite(first[0]) && std::isfinite(first[1])) {
    const double weight_floor = 1e-3 * std::max(mean_var, 1.0);
    const auto refined = weighted_fit([&](double x) {
      const double v = std::max(first[0] * x + first[1], weight_floor);
      return 1.0 / (v * v);
    });
    if (std::isfinite(refined[0]) && std::isfinite(refined[1])) result = refined;
  }
  model.a = result[0];
  model.b = result[1];
  if (!std::isfinite(model.a) || !std::isfinite(model.b) || model.a < 0.0) {
    model.a = 0.0;
    model.b = std::max(mean_var, sigma_floor * sigma_floor);
  }
  model.b = std::max(model.b, sigma_floor * sigma_floor);
}

}  // namespace

NoiseCurve estimate_noise_curve(const RawStack& stack, const NoiseEstimationParams& params) {
  if (stack.frames.empty()) throw Error("noise estimation needs at least one frame");
  if (params.bins < 4) throw Error("noise estimation needs bins >= 4");
  const int S = params.patch_size;
  if (S < 4) throw Error("noise estimation needs patch_size >= 4");

  const std::vector<double> basis = dct_basis(S);
  const double sat_limit = params.saturation_margin * stack.white_level;
  NoiseCurve curve;

  std::vector<double> coeffs(static_cast<size_t>(S) * S);
  std::vector<double> rowtmp(static_cast<size_t>(S) * S);

  for (int c = 0; c < 4; ++c) {
    std::vector<PatchStats> patches;
    for (const QuadFrame& frame : stack.frames) {
      const Plane& plane = frame.channels[c];
      for (int y0 = 0; y0 + S <= plane.height(); y0 += S) {
        for (int x0 = 0; x0 + S <= plane.width(); x0 += S) {
          double mean = 0.0;
          bool saturated = false;
          for (int y = 0; y < S && !saturated; ++y)
            for (int x = 0; x < S; ++x) {
              const double v = plane.at(x0 + x, y0 + y);
              mean += v;
              if (v >= stack.white_level - 0.5) {
                saturated = true;
                break;
              }
            }
          if (saturated) continue;
          mean /= static_cast<double>(S) * S;
          if (mean > sat_limit) continue;

          // Separable 2D DCT: rows then columns.
          for (int y = 0; y < S; ++y)
            for (int k = 0; k < S; ++k) {
              double acc = 0.0;
              for (int x = 0; x < S; ++x)
                acc += basis[static_cast<size_t>(k) * S + x] * plane.at(x0 + x, y0 + y);
              rowtmp[static_cast<size_t>(y) * S + k] = acc;
            }
          for (int k = 0; k < S; ++k)
            for (int j = 0; j < S; ++j) {
              double acc = 0.0;
              for (int y = 0; y < S; ++y)
                acc += basis[static_cast<size_t>(j) * S + y] * rowtmp[static_cast<size_t>(y) * S + k];
              coeffs[static_cast<size_t>(j) * S + k] = acc;
            }

          PatchStats stats;
          stats.mean = mean;
          stats.low_freq_energy = 0.0;
          for (int j = 0; j < S; ++j)
            for (int k = 0; k < S; ++k) {
              const int s = j + k;
              const double v = coeffs[static_cast<size_t>(j) * S + k];
              if (s > 0 && s < S / 2) stats.low_freq_energy += v * v;
              if (s >= S) stats.high_coeffs.push_back(v);
            }
          patches.push_back(std::move(stats));
        }
      }
    }

    if (static_cast<int>(patches.size()) < 2 * params.bins)
      throw Error("too few patches (" + std::to_string(patches.size()) + ") for " +
                  std::to_string(params.bins) + " bins; use fewer bins or larger images");

    // Equal-population bins by patch mean.
    std::sort(patches.begin(), patches.end(),
              [](const PatchStats& a, const PatchStats& b) { return a.mean < b.mean; });
    NoiseChannelModel& model = curve.channels[c];
    model.control_points.clear();
    const size_t count = patches.size();
    for (int bin = 0; bin < params.bins; ++bin) {
      const size_t begin = count * bin / params.bins;
      const size_t end = count * (bin + 1) / params.bins;
      if (begin >= end) continue;

      std::vector<size_t> index(end - begin);
      std::iota(index.begin(), index.end(), begin);
      std::sort(index.begin(), index.end(), [&](size_t a, size_t b) {
        return patches[a].low_freq_energy < patches[b].low_freq_energy;
      });
      const size_t keep =
          std::max<size_t>(1, static_cast<size_t>(params.flat_quantile * index.size()));

      std::vector<double> high;
      double mean_x = 0.0;
      for (size_t i = 0; i < keep; ++i) {
        const PatchStats& p = patches[index[i]];
        mean_x += p.mean;
        high.insert(high.end(), p.high_coeffs.begin(), p.high_coeffs.end());
      }
      mean_x /= static_cast<double>(keep);
      const double sigma = std::max(robust_sigma(std::move(high)), curve.sigma_floor);
      model.control_points.push_back({mean_x, sigma});
    }
    fit_linear_variance(model, stack.white_level, curve.sigma_floor);
  }
  return curve;
}

double eval_sigma(const NoiseCurve& curve, int channel, double x) {
  const NoiseChannelModel& m = curve.channels[channel];
  const double floor_var = curve.sigma_floor * curve.sigma_floor;
  return std::sqrt(std::max(m.a * x + m.b, floor_var));
}

NoiseCurve scale_noise_curve(const NoiseCurve& curve, double tau_ref, double tau_i) {
  if (tau_ref <= 0.0 || tau_i <= 0.0) throw Error("exposure times must be positive");
  const double r = tau_ref / tau_i;
  NoiseCurve scaled = curve;
  for (auto& m : scaled.channels) {
    m.a *= r;
    m.b *= r * r;
    for (auto& p : m.control_points) {
      p[0] *= r;
      p[1] *= r;
    }
  }
  return scaled;
}

void save_noise_curve(const NoiseCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "sigma_floor " << curve.sigma_floor << "\n";
  static const char* names[4] = {"r", "g1", "g2", "b"};
  out.precision(17);
  for (int c = 0; c < 4; ++c) {
    const NoiseChannelModel& m = curve.channels[c];
    out << "channel " << names[c] << "\n";
    out << "a " << m.a << "\n";
    out << "b " << m.b << "\n";
    out << "points " << m.control_points.size() << "\n";
    for (const auto& p : m.control_points) out << p[0] << " " << p[1] << "\n";
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

NoiseCurve load_noise_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open noise curve '" + path + "'");
  NoiseCurve curve;
  std::string key;
  int channel = -1;
  while (in >> key) {
    if (key == "sigma_floor") {
      in >> curve.sigma_floor;
    } else if (key == "channel") {
      std::string name;
      in >> name;
      if (name == "r") channel = 0;
      else if (name == "g1") channel = 1;
      else if (name == "g2") channel = 2;
      else if (name == "b") channel = 3;
      else throw Error("unknown channel '" + name + "' in '" + path + "'");
    } else if (key == "a" && channel >= 0) {
      in >> curve.channels[channel].a;
    } else if (key == "b" && channel >= 0) {
      in >> curve.channels[channel].b;
    } else if (key == "points" && channel >= 0) {
      size_t n;
      in >> n;
      curve.channels[channel].control_points.resize(n);
      for (auto& p : curve.channels[channel].control_points) in >> p[0] >> p[1];
    } else {
      throw Error("malformed noise curve file '" + path + "' near '" + key + "'");
    }
    if (!in) throw Error("malformed noise curve file '" + path + "'");
  }
  return curve;
}

}  // namespace rawhdr
