#include "rawhdr/util.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

namespace rawhdr {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

int parallel_chunks(int64_t n, int threads,
                    const std::function<void(int, int64_t, int64_t)>& fn) {
  threads = resolve_threads(threads);
  if (n <= 0) return 0;
  const int workers = static_cast<int>(std::min<int64_t>(threads, n));
  if (workers <= 1) {
    fn(0, 0, n);
    return 1;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int64_t chunk = (n + workers - 1) / workers;
  int used = 0;
  for (int t = 0; t < workers; ++t) {
    const int64_t begin = t * chunk;
    const int64_t end = std::min<int64_t>(begin + chunk, n);
    if (begin >= end) break;
    pool.emplace_back([&fn, t, begin, end] { fn(t, begin, end); });
    ++used;
  }
  for (auto& th : pool) th.join();
  return used;
}

}  // namespace rawhdr
