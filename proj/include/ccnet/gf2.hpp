#pragma once

// Bit-packed dense linear algebra over GF(2).

#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ccnet/rng.hpp"

namespace ccnet {

/// Fixed-length vector over GF(2), packed 64 entries per word. Bits past
/// size() are always zero.
class BitVector {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  BitVector() = default;
  explicit BitVector(std::size_t n_bits) : n_bits_(n_bits), words_(word_count(n_bits), 0) {}

  /// Parses a string of '0'/'1'; character i becomes entry i.
  static BitVector from_string(std::string_view s) {
    BitVector v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '1') {
        v.set(i);
      } else if (s[i] != '0') {
        throw std::invalid_argument("BitVector::from_string: expected '0' or '1'");
      }
    }
    return v;
  }

  static BitVector unit(std::size_t n_bits, std::size_t index) {
    BitVector v(n_bits);
    v.set(index);
    return v;
  }

  static BitVector random(std::size_t n_bits, Rng& rng) {
    BitVector v(n_bits);
    for (auto& w : v.words_) w = rng.bits();
    v.clear_tail();
    return v;
  }

  static constexpr std::size_t word_count(std::size_t n_bits) noexcept {
    return (n_bits + kWordBits - 1) / kWordBits;
  }

  std::size_t size() const noexcept { return n_bits_; }
  bool empty() const noexcept { return n_bits_ == 0; }

  bool get(std::size_t i) const noexcept { return (words_[i / kWordBits] >> (i % kWordBits)) & 1U; }
  void set(std::size_t i) noexcept { words_[i / kWordBits] |= Word{1} << (i % kWordBits); }
  void reset(std::size_t i) noexcept { words_[i / kWordBits] &= ~(Word{1} << (i % kWordBits)); }
  void assign(std::size_t i, bool value) noexcept { value ? set(i) : reset(i); }
  void flip(std::size_t i) noexcept { words_[i / kWordBits] ^= Word{1} << (i % kWordBits); }

  bool any() const noexcept {
    for (Word w : words_) {
      if (w != 0) return true;
    }
    return false;
  }
  bool none() const noexcept { return !any(); }

  std::size_t popcount() const noexcept {
    std::size_t n = 0;
    for (Word w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  /// Index of the lowest set entry, or size() when the vector is zero.
  std::size_t first_set() const noexcept {
    for (std::size_t k = 0; k < words_.size(); ++k) {
      if (words_[k] != 0) return k * kWordBits + static_cast<std::size_t>(std::countr_zero(words_[k]));
    }
    return n_bits_;
  }

  BitVector& operator^=(const BitVector& other) {
    check_same_size(other);
    xor_words(other.words_);
    return *this;
  }

  BitVector& operator&=(const BitVector& other) {
    check_same_size(other);
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= other.words_[k];
    return *this;
  }

  friend BitVector operator^(BitVector a, const BitVector& b) { return a ^= b; }

  /// Unchecked XOR of an equally sized word span into this vector.
  void xor_words(std::span<const Word> other) noexcept {
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] ^= other[k];
  }

  /// GF(2) inner product.
  bool dot(const BitVector& other) const {
    check_same_size(other);
    Word acc = 0;
    for (std::size_t k = 0; k < words_.size(); ++k) acc ^= words_[k] & other.words_[k];
    return (std::popcount(acc) & 1) != 0;
  }

  std::span<const Word> words() const noexcept { return words_; }
  std::span<Word> words() noexcept { return words_; }

  /// Zeroes bits at positions >= size(); call after raw word writes.
  void clear_tail() noexcept {
    const std::size_t rem = n_bits_ % kWordBits;
    if (rem != 0) words_.back() &= (Word{1} << rem) - 1;
  }

  std::string to_string() const {
    std::string s(n_bits_, '0');
    for (std::size_t i = 0; i < n_bits_; ++i) {
      if (get(i)) s[i] = '1';
    }
    return s;
  }

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  void check_same_size(const BitVector& other) const {
    if (other.n_bits_ != n_bits_) throw std::invalid_argument("BitVector: length mismatch");
  }

  std::size_t n_bits_ = 0;
  std::vector<Word> words_;
};

/// Dense n_rows x n_cols matrix over GF(2), stored as packed rows.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t n_rows, std::size_t n_cols)
      : n_cols_(n_cols), rows_(n_rows, BitVector(n_cols)) {}

  static BitMatrix from_rows(std::vector<BitVector> rows, std::size_t n_cols) {
    for (const auto& r : rows) {
      if (r.size() != n_cols) throw std::invalid_argument("BitMatrix: row length differs from n_cols");
    }
    BitMatrix m;
    m.n_cols_ = n_cols;
    m.rows_ = std::move(rows);
    return m;
  }

  static BitMatrix from_strings(std::initializer_list<std::string_view> rows) {
    std::vector<BitVector> v;
    std::size_t n_cols = rows.size() == 0 ? 0 : rows.begin()->size();
    for (auto s : rows) v.push_back(BitVector::from_string(s));
    return from_rows(std::move(v), n_cols);
  }

  static BitMatrix identity(std::size_t n) {
    BitMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.rows_[i].set(i);
    return m;
  }

  std::size_t n_rows() const noexcept { return rows_.size(); }
  std::size_t n_cols() const noexcept { return n_cols_; }

  const BitVector& row(std::size_t i) const { return rows_[i]; }
  BitVector& row(std::size_t i) { return rows_[i]; }
  std::span<const BitVector> rows() const noexcept { return rows_; }

  bool get(std::size_t i, std::size_t j) const { return rows_[i].get(j); }
  void assign(std::size_t i, std::size_t j, bool v) { rows_[i].assign(j, v); }

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::size_t n_cols_ = 0;
  std::vector<BitVector> rows_;
};

/// Row rank by Gaussian elimination on a copy.
inline std::size_t rank(const BitMatrix& m) {
  std::vector<BitVector> rows(m.rows().begin(), m.rows().end());
  std::size_t r = 0;
  for (std::size_t col = 0; col < m.n_cols() && r < rows.size(); ++col) {
    std::size_t pivot = r;
    while (pivot < rows.size() && !rows[pivot].get(col)) ++pivot;
    if (pivot == rows.size()) continue;
    std::swap(rows[r], rows[pivot]);
    for (std::size_t i = r + 1; i < rows.size(); ++i) {
      if (rows[i].get(col)) rows[i].xor_words(rows[r].words());
    }
    ++r;
  }
  return r;
}

/// Product T * Q over GF(2).
inline BitMatrix multiply(const BitMatrix& t, const BitMatrix& q) {
  if (t.n_cols() != q.n_rows()) throw std::invalid_argument("multiply: T.n_cols != Q.n_rows");
  BitMatrix out(t.n_rows(), q.n_cols());
  for (std::size_t i = 0; i < t.n_rows(); ++i) {
    const BitVector& tr = t.row(i);
    for (std::size_t j = tr.first_set(); j < tr.size(); ++j) {
      if (tr.get(j)) out.row(i).xor_words(q.row(j).words());
    }
  }
  return out;
}

/// n x k matrix of independent fair bits. Consumes ceil(k/64) draws per row.
inline BitMatrix sample_uniform(std::size_t n, std::size_t k, Rng& rng) {
  BitMatrix m(n, k);
  for (std::size_t i = 0; i < n; ++i) m.row(i) = BitVector::random(k, rng);
  return m;
}

/// Incremental row reduction that keeps its basis fully reduced: every basis
/// row has a distinct pivot column and zeros in all other pivot columns.
/// Rows may carry a payload that undergoes the same XORs, so that a full-rank
/// state reads off solutions directly.
class EliminationState {
 public:
  explicit EliminationState(std::size_t n_cols, std::size_t payload_bits = 0)
      : n_cols_(n_cols),
        payload_bits_(payload_bits),
        row_of_pivot_(n_cols, kNoRow),
        pivot_mask_(n_cols) {}

  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t payload_bits() const noexcept { return payload_bits_; }
  std::size_t rank() const noexcept { return rows_.size(); }
  bool full_rank() const noexcept { return rows_.size() == n_cols_; }

  /// Inserts a row; returns true iff it was outside the current span.
  bool insert(BitVector row) {
    if (payload_bits_ != 0) throw std::invalid_argument("EliminationState::insert: payload required");
    return insert(std::move(row), BitVector(0));
  }

  bool insert(BitVector row, BitVector payload) {
    if (row.size() != n_cols_) throw std::invalid_argument("EliminationState::insert: row length mismatch");
    if (payload.size() != payload_bits_) {
      throw std::invalid_argument("EliminationState::insert: payload length mismatch");
    }
    reduce(row, payload);
    if (row.none()) return false;

    const std::size_t pivot = row.first_set();
    for (std::size_t j = 0; j < rows_.size(); ++j) {
      if (rows_[j].get(pivot)) {
        rows_[j].xor_words(row.words());
        payloads_[j].xor_words(payload.words());
      }
    }
    row_of_pivot_[pivot] = rows_.size();
    pivot_mask_.set(pivot);
    rows_.push_back(std::move(row));
    payloads_.push_back(std::move(payload));
    return true;
  }

  bool in_span(BitVector row) const {
    if (row.size() != n_cols_) throw std::invalid_argument("EliminationState::in_span: row length mismatch");
    BitVector scratch(0);
    reduce(row, scratch);
    return row.none();
  }

  /// Payload of unit vector e_c for every column c, or nullopt below full rank.
  std::optional<std::vector<BitVector>> solve() const {
    if (!full_rank()) return std::nullopt;
    std::vector<BitVector> out;
    out.reserve(n_cols_);
    for (std::size_t c = 0; c < n_cols_; ++c) out.push_back(payloads_[row_of_pivot_[c]]);
    return out;
  }

  std::span<const BitVector> basis() const noexcept { return rows_; }
  std::size_t pivot_of(std::size_t basis_index) const { return rows_[basis_index].first_set(); }

 private:
  static constexpr std::size_t kNoRow = static_cast<std::size_t>(-1);

  // XOR in the basis row of every pivot column set in `row`. Because the basis
  // is fully reduced these XORs never touch another pivot column, so the
  // pivot bits can be read from a snapshot.
  void reduce(BitVector& row, BitVector& payload) const {
    const auto mask = pivot_mask_.words();
    auto rw = row.words();
    const bool with_payload = !payload.empty();
    for (std::size_t k = 0; k < mask.size(); ++k) {
      BitVector::Word hits = rw[k] & mask[k];
      while (hits != 0) {
        const std::size_t col = k * BitVector::kWordBits + static_cast<std::size_t>(std::countr_zero(hits));
        hits &= hits - 1;
        const std::size_t j = row_of_pivot_[col];
        row.xor_words(rows_[j].words());
        if (with_payload) payload.xor_words(payloads_[j].words());
      }
    }
  }

  std::size_t n_cols_;
  std::size_t payload_bits_;
  std::vector<BitVector> rows_;
  std::vector<BitVector> payloads_;
  std::vector<std::size_t> row_of_pivot_;
  BitVector pivot_mask_;
};

}  // namespace ccnet
