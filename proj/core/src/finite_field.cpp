#include "layercode/finite_field.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>
#include <string>

namespace layercode {

namespace {

std::uint64_t mulmod64(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>((static_cast<u128>(a) * b) % m);
}

std::uint64_t powmod64(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t result = 1 % m;
  base %= m;
  while (exp > 0) {
    if (exp & 1U) result = mulmod64(result, base, m);
    base = mulmod64(base, base, m);
    exp >>= 1U;
  }
  return result;
}

}  // namespace

bool is_prime(std::uint64_t n) noexcept {
  if (n < 2) return false;
  // This witness set is exact for all n < 3.3e24.
  constexpr std::array<std::uint64_t, 12> witnesses{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  for (const auto w : witnesses) {
    if (n % w == 0) return n == w;
  }
  std::uint64_t d = n - 1;
  unsigned r = 0;
  while ((d & 1U) == 0) {
    d >>= 1U;
    ++r;
  }
  for (const auto w : witnesses) {
    std::uint64_t x = powmod64(w, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (unsigned i = 1; i < r; ++i) {
      x = mulmod64(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

FieldPrime::FieldPrime(std::uint64_t p) : p_(p) {
  if (p > kMaxModulus) {
    throw std::invalid_argument("field modulus " + std::to_string(p) + " exceeds 2^63 - 1");
  }
  if (!is_prime(p)) throw std::invalid_argument("field modulus " + std::to_string(p) + " is not prime");
}

residue FieldPrime::pow(residue base, std::uint64_t exp) const noexcept {
  return powmod64(base, exp, p_);
}

residue FieldPrime::inv(residue a) const {
  if (a % p_ == 0) throw std::domain_error("non-invertible element");
  return powmod64(a, p_ - 2, p_);
}

residue ff_add(residue a, residue b, const FieldPrime& modulus) { return modulus.add(a, b); }
residue ff_sub(residue a, residue b, const FieldPrime& modulus) { return modulus.sub(a, b); }
residue ff_mul(residue a, residue b, const FieldPrime& modulus) { return modulus.mul(a, b); }
residue ff_inv(residue a, const FieldPrime& modulus) { return modulus.inv(a); }

FieldPrime find_prime_above(std::uint64_t bound) {
  if (bound < 2) throw std::invalid_argument("find_prime_above requires bound >= 2");
  if (bound >= FieldPrime::kMaxModulus) {
    throw std::overflow_error("no representable prime above " + std::to_string(bound));
  }
  std::uint64_t candidate = bound + 1;
  while (!is_prime(candidate)) ++candidate;
  return FieldPrime(candidate);
}

FieldPrime coding_prime_for(std::size_t inner_dim, std::uint64_t q, unsigned d,
                            std::size_t num_tasks) {
  if (q < 2 || d == 0) throw std::invalid_argument("chunk alphabet must satisfy q >= 2, d >= 1");
  u128 alphabet = 1;
  for (unsigned i = 0; i < d; ++i) {
    alphabet *= q;
    if (alphabet > FieldPrime::kMaxModulus) {
      throw std::overflow_error("chunk alphabet q^d does not fit the coding field");
    }
  }
  const u128 max_digit = alphabet - 1;
  const u128 product_bound = static_cast<u128>(std::max<std::size_t>(inner_dim, 1)) * max_digit * max_digit;
  const u128 bound = std::max<u128>({product_bound, static_cast<u128>(num_tasks), 2});
  if (bound >= FieldPrime::kMaxModulus) {
    throw std::overflow_error("chunk products do not fit a 63-bit coding field");
  }
  return find_prime_above(static_cast<std::uint64_t>(bound));
}

FieldMatrix::FieldMatrix(std::size_t rows, std::size_t cols, FieldPrime modulus)
    : rows_(rows), cols_(cols), entries_(rows * cols, 0), modulus_(modulus) {}

FieldMatrix::FieldMatrix(std::size_t rows, std::size_t cols, std::vector<residue> entries,
                         FieldPrime modulus)
    : rows_(rows), cols_(cols), entries_(std::move(entries)), modulus_(modulus) {
  if (entries_.size() != rows_ * cols_) {
    throw std::invalid_argument("field matrix entry count does not match its shape");
  }
  for (const auto e : entries_) {
    if (e >= modulus_.value()) throw std::invalid_argument("field matrix entry is not a residue");
  }
}

FieldMatrix::FieldMatrix(std::initializer_list<std::initializer_list<residue>> rows,
                         FieldPrime modulus)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()), modulus_(modulus) {
  entries_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("ragged field matrix initializer");
    for (const auto e : r) {
      if (e >= modulus_.value()) throw std::invalid_argument("field matrix entry is not a residue");
      entries_.push_back(e);
    }
  }
}

FieldMatrix FieldMatrix::identity(std::size_t n, FieldPrime modulus) {
  FieldMatrix m(n, n, modulus);
  for (std::size_t i = 0; i < n; ++i) m.entries_[i * n + i] = 1;
  return m;
}

FieldMatrix FieldMatrix::from_integers(const IntMatrix& m, FieldPrime modulus) {
  std::vector<residue> entries(m.size());
  std::transform(m.data().begin(), m.data().end(), entries.begin(),
                 [&](std::uint64_t x) { return modulus.reduce(x); });
  return FieldMatrix(m.rows(), m.cols(), std::move(entries), modulus);
}

void FieldMatrix::set(std::size_t r, std::size_t c, residue v) {
  if (r >= rows_ || c >= cols_) throw std::out_of_range("field matrix index out of range");
  entries_[r * cols_ + c] = modulus_.reduce(v);
}

FieldMatrix FieldMatrix::column_block(std::size_t first, std::size_t count) const {
  FieldMatrix block(rows_, count, modulus_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < count && first + c < cols_; ++c) {
      block.entries_[r * count + c] = entries_[r * cols_ + first + c];
    }
  }
  return block;
}

void FieldMatrix::add_scaled(const FieldMatrix& other, residue scale) {
  if (other.rows_ != rows_ || other.cols_ != cols_ || other.modulus_ != modulus_) {
    throw std::invalid_argument("add_scaled: shape or modulus mismatch");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    entries_[i] = modulus_.add(entries_[i], modulus_.mul(other.entries_[i], scale));
  }
}

IntMatrix FieldMatrix::to_integers() const { return IntMatrix(rows_, cols_, entries_); }

FieldMatrix mat_mul_transpose(const FieldMatrix& a, const FieldMatrix& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("mat_mul_transpose: inner dimension mismatch (" +
                                std::to_string(a.rows()) + " vs " + std::to_string(b.rows()) + ")");
  }
  if (a.modulus() != b.modulus()) throw std::invalid_argument("mat_mul_transpose: modulus mismatch");
  const auto& f = a.modulus();
  const std::uint64_t p = f.value();
  const std::size_t n = a.rows();
  std::vector<residue> out(a.cols() * b.cols(), 0);
  // Accumulate in 128 bits and reduce lazily; 2^128 / p^2 terms fit before overflow.
  const std::size_t flush_every =
      p < (std::uint64_t{1} << 32) ? std::numeric_limits<std::size_t>::max() : 2;
  for (std::size_t i = 0; i < a.cols(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      u128 acc = 0;
      for (std::size_t r = 0; r < n; ++r) {
        acc += static_cast<u128>(a(r, i)) * b(r, j);
        if ((r + 1) % flush_every == 0) acc %= p;
      }
      out[i * b.cols() + j] = static_cast<residue>(acc % p);
    }
  }
  return FieldMatrix(a.cols(), b.cols(), std::move(out), f);
}

WideMatrix int_mul_transpose(const IntMatrix& a, const IntMatrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("int_mul_transpose: inner dimension mismatch");
  WideMatrix out(a.cols(), b.cols(), 0);
  for (std::size_t i = 0; i < a.cols(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      u128 acc = 0;
      for (std::size_t r = 0; r < a.rows(); ++r) acc += static_cast<u128>(a(r, i)) * b(r, j);
      out(i, j) = acc;
    }
  }
  return out;
}

std::string to_string(u128 value) {
  if (value == 0) return "0";
  std::string digits;
  while (value > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  return {digits.rbegin(), digits.rend()};
}

}  // namespace layercode
