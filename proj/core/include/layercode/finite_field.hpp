#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "layercode/matrix.hpp"

namespace layercode {

using residue = std::uint64_t;

/// Deterministic Miller-Rabin, exact for every 64-bit input.
bool is_prime(std::uint64_t n) noexcept;

/// A prime modulus below 2^63, so that the sum of two residues never
/// overflows a machine word and products fit in 128 bits.
class FieldPrime {
 public:
  static constexpr std::uint64_t kMaxModulus = (std::uint64_t{1} << 63) - 1;

  explicit FieldPrime(std::uint64_t p);

  std::uint64_t value() const noexcept { return p_; }

  residue reduce(std::uint64_t x) const noexcept { return x % p_; }
  residue add(residue a, residue b) const noexcept {
    const residue s = a + b;
    return s >= p_ ? s - p_ : s;
  }
  residue sub(residue a, residue b) const noexcept { return a >= b ? a - b : a + (p_ - b); }
  residue neg(residue a) const noexcept { return a == 0 ? 0 : p_ - a; }
  residue mul(residue a, residue b) const noexcept {
    return static_cast<residue>((static_cast<u128>(a) * b) % p_);
  }
  residue pow(residue base, std::uint64_t exp) const noexcept;
  /// Throws std::domain_error("non-invertible element") for zero.
  residue inv(residue a) const;

  friend bool operator==(const FieldPrime&, const FieldPrime&) = default;

 private:
  std::uint64_t p_;
};

residue ff_add(residue a, residue b, const FieldPrime& modulus);
residue ff_sub(residue a, residue b, const FieldPrime& modulus);
residue ff_mul(residue a, residue b, const FieldPrime& modulus);
residue ff_inv(residue a, const FieldPrime& modulus);

/// Smallest prime strictly greater than `bound` (bound >= 2).
FieldPrime find_prime_above(std::uint64_t bound);

/// Coding prime for a job: the smallest prime above
/// max(inner_dim * (q^d - 1)^2, num_tasks). Every chunk-product entry is then
/// recoverable as an integer and num_tasks distinct nonzero points exist.
FieldPrime coding_prime_for(std::size_t inner_dim, std::uint64_t q, unsigned d,
                            std::size_t num_tasks);

class FieldMatrix {
 public:
  FieldMatrix() : FieldMatrix(0, 0, FieldPrime(2)) {}
  FieldMatrix(std::size_t rows, std::size_t cols, FieldPrime modulus);
  /// Entries must already be residues (< p).
  FieldMatrix(std::size_t rows, std::size_t cols, std::vector<residue> entries,
              FieldPrime modulus);
  FieldMatrix(std::initializer_list<std::initializer_list<residue>> rows, FieldPrime modulus);

  static FieldMatrix identity(std::size_t n, FieldPrime modulus);
  /// Reduces every entry of an integer matrix modulo p.
  static FieldMatrix from_integers(const IntMatrix& m, FieldPrime modulus);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const FieldPrime& modulus() const noexcept { return modulus_; }

  residue operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }
  void set(std::size_t r, std::size_t c, residue v);
  std::span<const residue> entries() const noexcept { return entries_; }

  /// Columns [first, first + count), zero-filled past the right edge.
  FieldMatrix column_block(std::size_t first, std::size_t count) const;
  /// this += scale * other, elementwise.
  void add_scaled(const FieldMatrix& other, residue scale);

  IntMatrix to_integers() const;

  friend bool operator==(const FieldMatrix&, const FieldMatrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<residue> entries_;
  FieldPrime modulus_;
};

/// Aᵀ B mod p. Requires a.rows() == b.rows() and a shared modulus.
FieldMatrix mat_mul_transpose(const FieldMatrix& a, const FieldMatrix& b);

}  // namespace layercode
