#include "layercode/chunking.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "layercode/finite_field.hpp"

namespace layercode {

namespace {

u128 checked_pow(std::uint64_t base, unsigned exp) {
  u128 result = 1;
  for (unsigned e = 0; e < exp; ++e) {
    if (__builtin_mul_overflow(result, static_cast<u128>(base), &result)) {
      throw std::overflow_error("power overflows 128 bits");
    }
  }
  return result;
}

std::string describe(const MiniJob& job) {
  return "(layer=" + std::to_string(job.layer) + ", i=" + std::to_string(job.i) +
         ", j=" + std::to_string(job.j) + ")";
}

void check_layer(unsigned layer, unsigned m) {
  if (m == 0) throw std::invalid_argument("chunk count m must be >= 1");
  if (layer > 2 * m - 2) {
    throw std::out_of_range("layer " + std::to_string(layer) + " out of range for m=" +
                            std::to_string(m));
  }
}

// Adds weight * block into dst with overflow detection.
void accumulate(WideMatrix& dst, const IntMatrix& block, u128 weight) {
  if (block.rows() != dst.rows() || block.cols() != dst.cols()) {
    throw std::invalid_argument("mini-job result shape does not match the assembled product");
  }
  for (std::size_t r = 0; r < dst.rows(); ++r) {
    for (std::size_t c = 0; c < dst.cols(); ++c) {
      u128 term;
      if (__builtin_mul_overflow(static_cast<u128>(block(r, c)), weight, &term) ||
          __builtin_add_overflow(dst(r, c), term, &dst(r, c))) {
        throw std::overflow_error("resolution entry overflows 128 bits");
      }
    }
  }
}

}  // namespace

std::uint64_t ChunkParams::chunk_base() const {
  const u128 base = checked_pow(q, d);
  if (base > std::numeric_limits<std::uint64_t>::max()) throw std::overflow_error("q^d exceeds 64 bits");
  return static_cast<std::uint64_t>(base);
}

u128 ChunkParams::element_limit() const { return checked_pow(q, m * d); }

void ChunkParams::validate() const {
  if (!is_prime(q)) throw std::invalid_argument("chunk alphabet q=" + std::to_string(q) + " is not prime");
  if (d == 0) throw std::invalid_argument("symbols per chunk d must be >= 1");
  if (m == 0) throw std::invalid_argument("chunks per element m must be >= 1");
  u128 limit;
  try {
    limit = element_limit();
  } catch (const std::overflow_error&) {
    throw std::invalid_argument("element range q^(md) does not fit 64 bits");
  }
  if (limit - 1 > std::numeric_limits<std::uint64_t>::max()) {
    throw std::invalid_argument("element range q^(md) does not fit 64 bits");
  }
}

IntMatrix ChunkedOperand::reconstruct(const ChunkParams& params) const {
  IntMatrix out(rows, cols, 0);
  const std::uint64_t base = params.chunk_base();
  for (std::size_t idx = chunks.size(); idx-- > 0;) {
    const auto src = chunks[idx].data();
    auto dst = out.data();
    for (std::size_t e = 0; e < dst.size(); ++e) dst[e] = dst[e] * base + src[e];
  }
  return out;
}

std::size_t mini_job_count(unsigned layer, unsigned m) {
  check_layer(layer, m);
  return std::min<std::size_t>(layer + 1, 2 * m - 1 - layer);
}

std::vector<MiniJob> mini_jobs_of_layer(unsigned layer, unsigned m) {
  check_layer(layer, m);
  const unsigned sum = (2 * m - 2) - layer;
  std::vector<MiniJob> jobs;
  for (unsigned i = std::min(sum, m - 1) + 1; i-- > 0;) {
    if (sum - i > m - 1) break;
    jobs.push_back(MiniJob{layer, i, sum - i});
  }
  return jobs;
}

std::vector<MiniJob> all_mini_jobs(unsigned m) {
  std::vector<MiniJob> jobs;
  for (unsigned l = 0; l + 1 < 2 * m; ++l) {
    const auto layer = mini_jobs_of_layer(l, m);
    jobs.insert(jobs.end(), layer.begin(), layer.end());
  }
  return jobs;
}

ChunkedOperand decompose(const IntMatrix& matrix, const ChunkParams& params) {
  params.validate();
  const u128 limit = params.element_limit();
  const std::uint64_t base = params.chunk_base();
  ChunkedOperand out;
  out.rows = matrix.rows();
  out.cols = matrix.cols();
  out.chunks.assign(params.m, IntMatrix(matrix.rows(), matrix.cols(), 0));
  for (std::size_t e = 0; e < matrix.size(); ++e) {
    std::uint64_t value = matrix.data()[e];
    if (static_cast<u128>(value) >= limit) {
      throw std::out_of_range("entry " + std::to_string(value) + " at index " + std::to_string(e) +
                              " is outside [0, q^(md))");
    }
    for (unsigned i = 0; i < params.m; ++i) {
      out.chunks[i].data()[e] = value % base;
      value /= base;
    }
  }
  return out;
}

IntMatrix mini_job_product(const ChunkedOperand& a, const ChunkedOperand& b, const MiniJob& job) {
  if (job.i >= a.chunks.size() || job.j >= b.chunks.size()) {
    throw std::out_of_range("mini-job chunk index out of range " + describe(job));
  }
  const WideMatrix wide = int_mul_transpose(a.chunks[job.i], b.chunks[job.j]);
  IntMatrix out(wide.rows(), wide.cols(), 0);
  for (std::size_t e = 0; e < wide.size(); ++e) {
    if (wide.data()[e] > std::numeric_limits<std::uint64_t>::max()) {
      throw std::overflow_error("mini-job product entry exceeds 64 bits");
    }
    out.data()[e] = static_cast<std::uint64_t>(wide.data()[e]);
  }
  return out;
}

WideMatrix resolution_assemble(const MiniJobResults& results, unsigned layer,
                               const ChunkParams& params) {
  check_layer(layer, params.m);
  if (results.empty()) throw std::invalid_argument("no mini-job results to assemble");
  const auto& shape = results.begin()->second;
  LayeredAccumulator acc(params, shape.rows(), shape.cols());
  for (unsigned l = 0; l <= layer; ++l) acc.absorb_layer(l, results);
  return acc.partial();
}

LayeredAccumulator::LayeredAccumulator(ChunkParams params, std::size_t rows, std::size_t cols)
    : params_(params), partial_(rows, cols, 0) {
  params_.validate();
}

void LayeredAccumulator::absorb_layer(unsigned layer, const MiniJobResults& results) {
  if (layer != completed_layers_) {
    throw std::logic_error("layer " + std::to_string(layer) + " absorbed out of order (expected " +
                           std::to_string(completed_layers_) + ")");
  }
  for (const auto& job : mini_jobs_of_layer(layer, params_.m)) {
    const auto it = results.find(job);
    if (it == results.end()) throw std::out_of_range("missing mini-job result " + describe(job));
    accumulate(partial_, it->second, checked_pow(params_.q, job.weight_exponent(params_.d)));
  }
  ++completed_layers_;
}

}  // namespace layercode
