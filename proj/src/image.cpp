#include "rawhdr/image.hpp"

#include <algorithm>
#include <cmath>

namespace rawhdr {

double plane_min(const Plane& p) {
  return *std::min_element(p.pixels().begin(), p.pixels().end());
}

double plane_max(const Plane& p) {
  return *std::max_element(p.pixels().begin(), p.pixels().end());
}

double plane_mean(const Plane& p) {
  double sum = 0.0;
  for (double v : p.pixels()) sum += v;
  return sum / static_cast<double>(p.size());
}

double plane_std(const Plane& p) {
  const double mean = plane_mean(p);
  double acc = 0.0;
  for (double v : p.pixels()) acc += (v - mean) * (v - mean);
  const size_t n = p.size();
  return n > 1 ? std::sqrt(acc / static_cast<double>(n - 1)) : 0.0;
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw Error("percentile of empty sample");
  pct = std::clamp(pct, 0.0, 100.0);
  std::sort(values.begin(), values.end());
  const double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
  const size_t lo = static_cast<size_t>(rank);
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

}  // namespace rawhdr
