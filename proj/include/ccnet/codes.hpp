#pragma once

// Chunked random linear coding over GF(2): source encoding, relay recoding,
// sink decoding, and the outer systematic precode.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ccnet/gf2.hpp"
#include "ccnet/rng.hpp"

namespace ccnet {

/// k message vectors split into q chunks of alpha = k / q consecutive
/// vectors; chunk c holds vectors [c * alpha, (c + 1) * alpha). m is the
/// payload length in bits, 0 for coefficient-only operation.
struct CodeParams {
  std::size_t k = 0;
  std::size_t q = 1;
  std::size_t m = 0;

  std::size_t alpha() const { return k / q; }

  void validate() const {
    if (q == 0) throw std::invalid_argument("CodeParams: q must be >= 1");
    if (k == 0) throw std::invalid_argument("CodeParams: k must be >= 1");
    if (k % q != 0) throw std::invalid_argument("CodeParams: q must divide k");
  }
};

/// A coded packet: the chunk it belongs to, its global encoding vector
/// restricted to that chunk, and (payload mode) the coded payload.
struct Packet {
  std::size_t chunk = 0;
  BitVector coeffs;
  BitVector payload;

  bool is_zero() const { return coeffs.none(); }
};

/// Packets a relay has received, grouped by chunk. Coefficients and payloads
/// are stored packed per chunk.
class NodeBuffer {
 public:
  NodeBuffer(std::size_t q, std::size_t alpha, std::size_t m)
      : alpha_(alpha),
        m_(m),
        coeff_words_(BitVector::word_count(alpha)),
        payload_words_(BitVector::word_count(m)),
        coeffs_(q),
        payloads_(q),
        counts_(q, 0) {}

  explicit NodeBuffer(const CodeParams& params) : NodeBuffer(params.q, params.alpha(), params.m) {}

  std::size_t chunk_count() const noexcept { return counts_.size(); }
  std::size_t alpha() const noexcept { return alpha_; }
  std::size_t payload_bits() const noexcept { return m_; }

  void store(const Packet& pkt) {
    if (pkt.chunk >= counts_.size()) throw std::invalid_argument("NodeBuffer::store: chunk out of range");
    if (pkt.coeffs.size() != alpha_ || pkt.payload.size() != m_) {
      throw std::invalid_argument("NodeBuffer::store: packet shape mismatch");
    }
    auto& c = coeffs_[pkt.chunk];
    c.insert(c.end(), pkt.coeffs.words().begin(), pkt.coeffs.words().end());
    auto& p = payloads_[pkt.chunk];
    p.insert(p.end(), pkt.payload.words().begin(), pkt.payload.words().end());
    ++counts_[pkt.chunk];
  }

  std::size_t count(std::size_t chunk) const { return counts_.at(chunk); }

  std::size_t total() const {
    std::size_t n = 0;
    for (auto c : counts_) n += c;
    return n;
  }

  std::span<const BitVector::Word> coeff_words(std::size_t chunk, std::size_t j) const {
    return std::span(coeffs_[chunk]).subspan(j * coeff_words_, coeff_words_);
  }
  std::span<const BitVector::Word> payload_words(std::size_t chunk, std::size_t j) const {
    return std::span(payloads_[chunk]).subspan(j * payload_words_, payload_words_);
  }

  Packet packet(std::size_t chunk, std::size_t j) const {
    Packet pkt{chunk, BitVector(alpha_), BitVector(m_)};
    pkt.coeffs.xor_words(coeff_words(chunk, j));
    pkt.payload.xor_words(payload_words(chunk, j));
    return pkt;
  }

 private:
  std::size_t alpha_;
  std::size_t m_;
  std::size_t coeff_words_;
  std::size_t payload_words_;
  std::vector<std::vector<BitVector::Word>> coeffs_;
  std::vector<std::vector<BitVector::Word>> payloads_;
  std::vector<std::size_t> counts_;
};

/// k uniformly random payload vectors of m bits.
inline std::vector<BitVector> random_message(std::size_t k, std::size_t m, Rng& rng) {
  std::vector<BitVector> msg;
  msg.reserve(k);
  for (std::size_t i = 0; i < k; ++i) msg.push_back(BitVector::random(m, rng));
  return msg;
}

/// Source transmission: a uniformly chosen chunk, and a uniformly random
/// combination of that chunk's message vectors. `message` is empty in
/// coefficient-only mode.
inline Packet source_emit(const CodeParams& params, std::span<const BitVector> message, Rng& rng) {
  const std::size_t alpha = params.alpha();
  if (params.m > 0 && message.size() != params.k) {
    throw std::invalid_argument("source_emit: payload mode needs k message vectors");
  }
  Packet pkt;
  pkt.chunk = static_cast<std::size_t>(rng.below(params.q));
  pkt.coeffs = BitVector::random(alpha, rng);
  pkt.payload = BitVector(params.m);
  if (params.m > 0) {
    const std::size_t base = pkt.chunk * alpha;
    for (std::size_t i = pkt.coeffs.first_set(); i < alpha; ++i) {
      if (pkt.coeffs.get(i)) pkt.payload.xor_words(message[base + i].words());
    }
  }
  return pkt;
}

/// Relay transmission: a uniformly chosen chunk (independent of what the
/// buffer holds) and a uniformly random combination of the buffered packets
/// of that chunk. An empty chunk yields the zero packet.
inline Packet recode(const NodeBuffer& buffer, const CodeParams& params, Rng& rng) {
  Packet pkt;
  pkt.chunk = static_cast<std::size_t>(rng.below(params.q));
  pkt.coeffs = BitVector(buffer.alpha());
  pkt.payload = BitVector(buffer.payload_bits());
  const std::size_t n = buffer.count(pkt.chunk);
  for (std::size_t base = 0; base < n; base += 64) {
    std::uint64_t select = rng.bits();
    const std::size_t span = std::min<std::size_t>(64, n - base);
    if (span < 64) select &= (std::uint64_t{1} << span) - 1;
    while (select != 0) {
      const std::size_t j = base + static_cast<std::size_t>(std::countr_zero(select));
      select &= select - 1;
      pkt.coeffs.xor_words(buffer.coeff_words(pkt.chunk, j));
      if (buffer.payload_bits() > 0) pkt.payload.xor_words(buffer.payload_words(pkt.chunk, j));
    }
  }
  return pkt;
}

struct ReceiveOutcome {
  bool innovative = false;
  bool chunk_now_decodable = false;
};

/// Per-chunk decoders at the sink.
class SinkDecoder {
 public:
  explicit SinkDecoder(const CodeParams& params) : params_(params) {
    params_.validate();
    chunks_.reserve(params.q);
    for (std::size_t c = 0; c < params.q; ++c) chunks_.emplace_back(params.alpha(), params.m);
  }

  ReceiveOutcome receive(const Packet& pkt) {
    auto& st = chunks_.at(pkt.chunk);
    const bool was_full = st.full_rank();
    ReceiveOutcome out;
    out.innovative = st.insert(pkt.coeffs, pkt.payload);
    if (out.innovative) {
      ++total_rank_;
      if (!was_full && st.full_rank()) {
        out.chunk_now_decodable = true;
        ++decoded_;
      }
    }
    return out;
  }

  /// Registers message vector `index` of `chunk` as known with the given
  /// payload (used for zero padding).
  ReceiveOutcome mark_known(std::size_t chunk, std::size_t index, BitVector payload) {
    return receive(Packet{chunk, BitVector::unit(params_.alpha(), index), std::move(payload)});
  }

  bool chunk_decodable(std::size_t chunk) const { return chunks_.at(chunk).full_rank(); }
  std::size_t decoded_chunks() const noexcept { return decoded_; }
  bool complete() const noexcept { return decoded_ == chunks_.size(); }
  std::size_t total_rank() const noexcept { return total_rank_; }
  const EliminationState& chunk_state(std::size_t chunk) const { return chunks_.at(chunk); }

  /// The chunk's alpha message vectors, or nullopt while its rank is short.
  std::optional<std::vector<BitVector>> decode_chunk(std::size_t chunk) const {
    if (params_.m == 0) throw std::logic_error("decode_chunk: coefficient-only mode carries no payload");
    return chunks_.at(chunk).solve();
  }

 private:
  CodeParams params_;
  std::vector<EliminationState> chunks_;
  std::size_t decoded_ = 0;
  std::size_t total_rank_ = 0;
};

/// Outer erasure code parameters. The precode has rate 1 - (1 + gamma_a)
/// gamma_b and expands k vectors to ceil((1 + (1 + gamma_a) gamma_b +
/// c gamma_b^2) k) intermediate vectors.
struct PrecodeParams {
  double gamma_a = 0.1;
  double gamma_b = 0.1;
  double c = 1.0;

  double correctable_fraction() const { return (1.0 + gamma_a) * gamma_b; }
  double rate() const { return 1.0 - correctable_fraction(); }
  double expansion() const { return 1.0 + correctable_fraction() + c * gamma_b * gamma_b; }

  std::size_t n_intermediate(std::size_t k) const {
    // The slack absorbs rounding in the expansion factor (1.12 * 100 must give 112).
    return static_cast<std::size_t>(std::ceil(expansion() * static_cast<double>(k) - 1e-9));
  }

  /// n_intermediate rounded up to a multiple of the chunk size.
  std::size_t padded_size(std::size_t k, std::size_t alpha) const {
    const std::size_t n = n_intermediate(k);
    return (n + alpha - 1) / alpha * alpha;
  }

  void validate() const {
    if (!(gamma_a > 0.0 && gamma_a < 1.0)) throw std::invalid_argument("PrecodeParams: gamma_a must be in (0,1)");
    if (!(gamma_b > 0.0 && gamma_b < 1.0)) throw std::invalid_argument("PrecodeParams: gamma_b must be in (0,1)");
    if (!(c >= 0.0)) throw std::invalid_argument("PrecodeParams: c must be >= 0");
    if (!(rate() > 0.0)) throw std::invalid_argument("PrecodeParams: (1 + gamma_a) gamma_b must be < 1");
  }
};

struct RecoveredVector {
  std::size_t index = 0;
  BitVector value;
};

struct PrecodeDecodeResult {
  std::optional<std::vector<BitVector>> message;
  /// k minus the rank of the recovered generator rows.
  std::size_t deficit = 0;

  bool ok() const { return message.has_value(); }
};

/// Systematic random linear precode: intermediate vector i < k is message
/// vector i, and each later one is a uniformly random combination of the
/// message. The generator is kept for decoding.
class Precode {
 public:
  Precode(std::size_t k, const PrecodeParams& params, Rng& rng)
      : k_(k), n_(params.n_intermediate(k)), params_(params) {
    params.validate();
    if (k == 0) throw std::invalid_argument("Precode: k must be >= 1");
    parity_.reserve(n_ - k_);
    for (std::size_t i = k_; i < n_; ++i) parity_.push_back(BitVector::random(k_, rng));
  }

  std::size_t k() const noexcept { return k_; }
  std::size_t n_intermediate() const noexcept { return n_; }
  const PrecodeParams& params() const noexcept { return params_; }

  BitVector generator_row(std::size_t index) const {
    if (index >= n_) throw std::out_of_range("Precode::generator_row");
    return index < k_ ? BitVector::unit(k_, index) : parity_[index - k_];
  }

  std::vector<BitVector> encode(std::span<const BitVector> message) const {
    if (message.size() != k_) throw std::invalid_argument("Precode::encode: expected k message vectors");
    const std::size_t m = message.empty() ? 0 : message.front().size();
    std::vector<BitVector> out(message.begin(), message.end());
    out.reserve(n_);
    for (const auto& g : parity_) {
      BitVector v(m);
      for (std::size_t i = g.first_set(); i < k_; ++i) {
        if (g.get(i)) v.xor_words(message[i].words());
      }
      out.push_back(std::move(v));
    }
    return out;
  }

  /// Recovers the message from any subset of intermediate vectors whose
  /// generator rows span GF(2)^k. Indices >= n_intermediate() denote
  /// padding and are ignored; duplicates count once.
  PrecodeDecodeResult decode(std::span<const RecoveredVector> recovered) const {
    return solve(recovered, true);
  }

  /// Rank test only: k minus the rank of the generator rows at `indices`.
  std::size_t deficit(std::span<const std::size_t> indices) const {
    std::vector<RecoveredVector> rows;
    rows.reserve(indices.size());
    for (auto i : indices) rows.push_back(RecoveredVector{i, BitVector(0)});
    return solve(rows, false).deficit;
  }

 private:
  // Systematic rows fix their message coordinate outright; the remaining
  // unknown coordinates are solved from the parity rows restricted to them.
  PrecodeDecodeResult solve(std::span<const RecoveredVector> recovered, bool with_payload) const {
    const std::size_t m = with_payload && !recovered.empty() ? recovered.front().value.size() : 0;
    std::vector<std::optional<BitVector>> known(k_);
    std::vector<const RecoveredVector*> parity_rows;
    std::vector<bool> seen(n_, false);
    for (const auto& rv : recovered) {
      if (rv.index >= n_) continue;
      if (seen[rv.index]) continue;
      seen[rv.index] = true;
      if (with_payload && rv.value.size() != m) {
        throw std::invalid_argument("Precode::decode: recovered vectors differ in length");
      }
      if (rv.index < k_) {
        known[rv.index] = with_payload ? rv.value : BitVector(0);
      } else {
        parity_rows.push_back(&rv);
      }
    }

    std::vector<std::size_t> unknown;
    std::vector<std::size_t> slot(k_, 0);
    BitVector known_mask(k_);
    for (std::size_t i = 0; i < k_; ++i) {
      if (known[i]) {
        known_mask.set(i);
      } else {
        slot[i] = unknown.size();
        unknown.push_back(i);
      }
    }

    PrecodeDecodeResult result;
    EliminationState st(unknown.size(), m);
    for (const RecoveredVector* rv : parity_rows) {
      if (st.full_rank()) break;
      const BitVector& g = parity_[rv->index - k_];
      BitVector restricted(unknown.size());
      for (std::size_t j = 0; j < unknown.size(); ++j) {
        if (g.get(unknown[j])) restricted.set(j);
      }
      BitVector y(m);
      if (with_payload) {
        y = rv->value;
        BitVector hits = g;
        hits &= known_mask;
        for (std::size_t i = hits.first_set(); i < k_; ++i) {
          if (hits.get(i)) y.xor_words(known[i]->words());
        }
      }
      st.insert(std::move(restricted), std::move(y));
    }
    result.deficit = unknown.size() - st.rank();
    if (result.deficit != 0 || !with_payload) return result;

    auto solved = st.solve();
    std::vector<BitVector> msg(k_);
    for (std::size_t i = 0; i < k_; ++i) msg[i] = known[i] ? *known[i] : (*solved)[slot[i]];
    result.message = std::move(msg);
    return result;
  }

  std::size_t k_;
  std::size_t n_;
  PrecodeParams params_;
  std::vector<BitVector> parity_;
};

}  // namespace ccnet
