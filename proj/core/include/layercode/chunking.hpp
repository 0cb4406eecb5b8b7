#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "layercode/matrix.hpp"

namespace layercode {

/// Digit layout of operand elements: each element is m digits in base q^d,
/// giving L = 2m - 1 resolution layers.
struct ChunkParams {
  std::uint64_t q = 2;
  unsigned d = 8;
  unsigned m = 2;

  unsigned layers() const noexcept { return 2 * m - 1; }
  /// q^d
  std::uint64_t chunk_base() const;
  /// q^(md), the exclusive upper bound on operand entries.
  u128 element_limit() const;
  /// Throws std::invalid_argument unless q is prime, d, m >= 1 and q^(md) <= 2^64.
  void validate() const;
};

struct ChunkedOperand {
  /// chunks[i] carries digit i, weighted by q^(i d); chunk 0 is least significant.
  std::vector<IntMatrix> chunks;
  std::size_t rows = 0;
  std::size_t cols = 0;

  /// Σ chunks[i] q^(i d), entrywise.
  IntMatrix reconstruct(const ChunkParams& params) const;
};

/// One low-resolution product (A_i)ᵀ B_j belonging to a resolution layer.
struct MiniJob {
  unsigned layer = 0;
  unsigned i = 0;
  unsigned j = 0;

  unsigned weight_exponent(unsigned d) const noexcept { return (i + j) * d; }

  friend auto operator<=>(const MiniJob&, const MiniJob&) = default;
};

/// J(l) = min(l + 1, 2m - 1 - l).
std::size_t mini_job_count(unsigned layer, unsigned m);

/// Mini-jobs (i, j) with i + j = (2m - 2) - l, ordered by descending i.
std::vector<MiniJob> mini_jobs_of_layer(unsigned layer, unsigned m);

/// All m^2 mini-jobs, layer by layer.
std::vector<MiniJob> all_mini_jobs(unsigned m);

ChunkedOperand decompose(const IntMatrix& matrix, const ChunkParams& params);

/// (A_i)ᵀ B_j over the integers; throws std::overflow_error if an entry exceeds 64 bits.
IntMatrix mini_job_product(const ChunkedOperand& a, const ChunkedOperand& b, const MiniJob& job);

using MiniJobResults = std::map<MiniJob, IntMatrix>;

/// The l-th resolution: Σ over mini-jobs of layers 0..l of (A_i)ᵀ B_j q^((i+j)d).
/// At l = L - 1 this is the exact integer product.
WideMatrix resolution_assemble(const MiniJobResults& results, unsigned layer,
                               const ChunkParams& params);

/// Incremental form of resolution_assemble: absorb one layer at a time.
class LayeredAccumulator {
 public:
  LayeredAccumulator(ChunkParams params, std::size_t rows, std::size_t cols);

  /// Layers must arrive in order 0, 1, ...; `results` must hold every mini-job of `layer`.
  void absorb_layer(unsigned layer, const MiniJobResults& results);

  const WideMatrix& partial() const noexcept { return partial_; }
  unsigned completed_layers() const noexcept { return completed_layers_; }

 private:
  ChunkParams params_;
  WideMatrix partial_;
  unsigned completed_layers_ = 0;
};

}  // namespace layercode
