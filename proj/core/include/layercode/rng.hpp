#pragma once

#include <cstdint>
#include <random>

namespace layercode {

/// SplitMix64 finaliser; maps (root seed, stream id) to an independent stream seed.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) noexcept;

/// One named source of randomness. Sampling is implemented here rather than
/// through <random> distributions so traces are identical across standard libraries.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
  RandomStream(std::uint64_t root, std::uint64_t stream) : engine_(derive_seed(root, stream)) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double exponential(double mean);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

}  // namespace layercode
