#pragma once

#include <cstdint>
#include <functional>

namespace rawhdr {

/// SplitMix64 generator with a Box-Muller normal sampler.
/// Fully self-contained so simulated captures are bit-reproducible
/// across platforms and standard libraries.
class Rng {
public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in (0, 1].
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
  }

  /// Standard normal via Box-Muller, caching the second value.
  double normal();

private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Mixes a stream index into a base seed (per-frame noise streams).
uint64_t mix_seed(uint64_t seed, uint64_t stream);

/// Resolves a requested thread count: 0 means hardware concurrency.
int resolve_threads(int requested);

/// Runs fn(worker, begin, end) over contiguous chunks of [0, n). Chunk
/// boundaries depend only on n and the resolved thread count, so work
/// assignment is deterministic for a given thread count. Returns the number
/// of workers used.
int parallel_chunks(int64_t n, int threads,
                    const std::function<void(int, int64_t, int64_t)>& fn);

}  // namespace rawhdr
