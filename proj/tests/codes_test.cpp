#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <string>
#include <stdexcept>
#include <vector>

#include "ccnet/codes.hpp"
#include "oracles.hpp"

using namespace ccnet;

namespace {

BitVector combine(const BitVector& coeffs, const std::vector<BitVector>& msg, std::size_t base, std::size_t m) {
  BitVector y(m);
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    if (coeffs.get(i)) y ^= msg[base + i];
  return y;
}

}  // namespace

TEST(CodeParams, Validation) {
  EXPECT_NO_THROW((CodeParams{12, 4, 0}.validate()));
  EXPECT_EQ((CodeParams{12, 4, 0}.alpha()), 3u);
  EXPECT_THROW((CodeParams{12, 5, 0}.validate()), std::invalid_argument);
  EXPECT_THROW((CodeParams{12, 0, 0}.validate()), std::invalid_argument);
  EXPECT_THROW((CodeParams{0, 1, 0}.validate()), std::invalid_argument);
}

TEST(SourceEmit, DenseCodeAlwaysUsesChunkZero) {
  Rng rng(1);
  const CodeParams p{8, 1, 0};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(source_emit(p, {}, rng).chunk, 0u);
}

TEST(SourceEmit, ChunkChoiceIsUniform) {
  Rng rng(2);
  const CodeParams p{16, 4, 0};
  std::vector<int> count(4, 0);
  for (int i = 0; i < 10000; ++i) ++count[source_emit(p, {}, rng).chunk];
  for (int c : count) EXPECT_NEAR(c / 10000.0, 0.25, 0.02);
}

TEST(SourceEmit, ZeroCoefficientsAtRateTwoToMinusAlpha) {
  Rng rng(3);
  const CodeParams p{3, 1, 0};
  const int n = 40000;
  int zeros = 0;
  for (int i = 0; i < n; ++i) zeros += source_emit(p, {}, rng).is_zero();
  EXPECT_NEAR(zeros / double(n), 0.125, 4 * std::sqrt(0.125 * 0.875 / n));
}

TEST(SourceEmit, PayloadMatchesCoefficients) {
  Rng rng(4);
  const CodeParams p{12, 3, 20};
  const auto msg = random_message(12, 20, rng);
  for (int i = 0; i < 200; ++i) {
    const auto pkt = source_emit(p, msg, rng);
    ASSERT_EQ(pkt.coeffs.size(), 4u);
    ASSERT_EQ(pkt.payload, combine(pkt.coeffs, msg, pkt.chunk * 4, 20));
  }
  EXPECT_THROW(source_emit(p, std::vector<BitVector>(3, BitVector(20)), rng), std::invalid_argument);
}

TEST(Recode, EmptyBufferGivesZeroPacketWithUniformChunk) {
  Rng rng(5);
  const CodeParams p{8, 2, 4};
  NodeBuffer buf(2, 4, 4);
  int first = 0;
  for (int i = 0; i < 4000; ++i) {
    const auto pkt = recode(buf, p, rng);
    ASSERT_TRUE(pkt.is_zero());
    ASSERT_TRUE(pkt.payload.none());
    first += pkt.chunk == 0;
  }
  EXPECT_NEAR(first / 4000.0, 0.5, 0.03);
}

TEST(Recode, SinglePacketBufferReproducesIt) {
  Rng rng(6);
  const CodeParams p{5, 1, 0};
  NodeBuffer buf(1, 5, 0);
  Packet stored{0, BitVector::from_string("10110"), BitVector(0)};
  buf.store(stored);
  int copies = 0;
  for (int i = 0; i < 200; ++i) {
    const auto out = recode(buf, p, rng);
    if (!out.is_zero()) {
      ASSERT_EQ(out.coeffs, stored.coeffs);
      ++copies;
    }
  }
  EXPECT_GT(copies, 60);
  EXPECT_LT(copies, 140);
}

TEST(Recode, OutputLiesInBufferedSpanAndCarriesConsistentPayload) {
  Rng rng(7);
  const CodeParams p{30, 3, 16};
  const auto msg = random_message(30, 16, rng);
  NodeBuffer buf(3, 10, 16);
  for (int i = 0; i < 150; ++i) {
    const auto in = source_emit(p, msg, rng);
    buf.store(in);
    // Generous span oracle per chunk.
    for (int j = 0; j < 3; ++j) {
      const auto out = recode(buf, p, rng);
      EliminationState st(10);
      for (std::size_t b = 0; b < buf.count(out.chunk); ++b) st.insert(buf.packet(out.chunk, b).coeffs);
      ASSERT_TRUE(st.in_span(out.coeffs));
      ASSERT_EQ(out.payload, combine(out.coeffs, msg, out.chunk * 10, 16));
    }
  }
  // Packets are filed under their own chunk only.
  std::size_t total = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t b = 0; b < buf.count(c); ++b) EXPECT_EQ(buf.packet(c, b).chunk, c);
    total += buf.count(c);
  }
  EXPECT_EQ(total, buf.total());
}

TEST(Recode, ChunkChoiceIndependentOfOccupancy) {
  // Only chunk 0 is populated; choices must still be uniform.
  Rng rng(8);
  const CodeParams p{40, 4, 0};
  NodeBuffer buf(4, 10, 0);
  for (int i = 0; i < 30; ++i) buf.store(Packet{0, BitVector::random(10, rng), BitVector(0)});
  std::vector<int> count(4, 0);
  for (int i = 0; i < 8000; ++i) ++count[recode(buf, p, rng).chunk];
  double chi2 = 0;
  for (int c : count) chi2 += (c - 2000.0) * (c - 2000.0) / 2000.0;
  EXPECT_LT(chi2, 16.27);  // 3 dof, p = 0.001
}

TEST(Recode, DenseRelayCoefficientsUniformOverSpan) {
  // Buffer spans a 2-dimensional space; each of its 4 vectors appears ~1/4.
  Rng rng(9);
  const CodeParams p{4, 1, 0};
  NodeBuffer buf(1, 4, 0);
  buf.store(Packet{0, BitVector::from_string("1100"), BitVector(0)});
  buf.store(Packet{0, BitVector::from_string("0110"), BitVector(0)});
  buf.store(Packet{0, BitVector::from_string("1010"), BitVector(0)});
  std::map<std::string, int> seen;
  for (int i = 0; i < 8000; ++i) ++seen[recode(buf, p, rng).coeffs.to_string()];
  ASSERT_EQ(seen.size(), 4u);
  for (const auto& [v, c] : seen) EXPECT_NEAR(c / 8000.0, 0.25, 0.025) << v;
}

TEST(NodeBuffer, RejectsBadPackets) {
  NodeBuffer buf(2, 4, 3);
  EXPECT_THROW(buf.store(Packet{2, BitVector(4), BitVector(3)}), std::invalid_argument);
  EXPECT_THROW(buf.store(Packet{0, BitVector(5), BitVector(3)}), std::invalid_argument);
}

TEST(SinkDecoder, ZeroPacketNeverInnovative) {
  SinkDecoder sink({4, 2, 0});
  const auto out = sink.receive(Packet{1, BitVector(2), BitVector(0)});
  EXPECT_FALSE(out.innovative);
  EXPECT_FALSE(out.chunk_now_decodable);
}

TEST(SinkDecoder, UnitVectorsDecodeAChunk) {
  SinkDecoder sink({6, 2, 0});
  EXPECT_FALSE(sink.receive(Packet{1, BitVector::unit(3, 0), BitVector(0)}).chunk_now_decodable);
  EXPECT_FALSE(sink.receive(Packet{1, BitVector::unit(3, 2), BitVector(0)}).chunk_now_decodable);
  EXPECT_FALSE(sink.receive(Packet{1, BitVector::unit(3, 2), BitVector(0)}).innovative);
  EXPECT_TRUE(sink.receive(Packet{1, BitVector::unit(3, 1), BitVector(0)}).chunk_now_decodable);
  EXPECT_TRUE(sink.chunk_decodable(1));
  EXPECT_FALSE(sink.chunk_decodable(0));
  EXPECT_EQ(sink.decoded_chunks(), 1u);
  EXPECT_FALSE(sink.complete());
  EXPECT_EQ(sink.total_rank(), 3u);
  EXPECT_THROW(sink.decode_chunk(1), std::logic_error);
}

TEST(SinkDecoder, DecodeChunkRecoversMessage) {
  Rng rng(10);
  const CodeParams p{24, 4, 40};
  const auto msg = random_message(24, 40, rng);
  SinkDecoder sink(p);
  EXPECT_FALSE(sink.decode_chunk(0).has_value());
  while (!sink.complete()) sink.receive(source_emit(p, msg, rng));
  for (std::size_t c = 0; c < 4; ++c) {
    const auto part = sink.decode_chunk(c);
    ASSERT_TRUE(part.has_value());
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ((*part)[j], msg[c * 6 + j]);
  }
}

TEST(SinkDecoder, ExactlyKReceptionsProbability) {
  // q = 1, k = 4: Pr{decodable after exactly 4 receptions} = prod_{i=1..4}(1 - 2^-i).
  EXPECT_DOUBLE_EQ(oracle::dense_delay_cdf(4, 4), 315.0 / 1024.0);
  Rng rng(11);
  const CodeParams p{4, 1, 0};
  const int trials = 40000;
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    SinkDecoder sink(p);
    for (int i = 0; i < 4; ++i) sink.receive(source_emit(p, {}, rng));
    hits += sink.complete();
  }
  const double pr = 315.0 / 1024.0;
  EXPECT_NEAR(hits / double(trials), pr, 4 * std::sqrt(pr * (1 - pr) / trials));
}

TEST(PrecodeParams, SizesAndValidation) {
  const PrecodeParams pp{0.1, 0.1, 1.0};
  EXPECT_NEAR(pp.rate(), 0.89, 1e-12);
  EXPECT_EQ(pp.n_intermediate(256), 287u);  // ceil(1.12 * 256) = ceil(286.72)
  EXPECT_GT(pp.n_intermediate(256), 256u);
  EXPECT_EQ(pp.padded_size(256, 32) % 32, 0u);
  EXPECT_EQ(pp.padded_size(256, 32), 288u);
  EXPECT_THROW((PrecodeParams{0.0, 0.1}.validate()), std::invalid_argument);
  EXPECT_THROW((PrecodeParams{0.9, 0.9}.validate()), std::invalid_argument);
}

TEST(Precode, SystematicEncoding) {
  Rng rng(12);
  const Precode pc(16, {0.1, 0.2, 1.0}, rng);
  const auto msg = random_message(16, 24, rng);
  const auto enc = pc.encode(msg);
  ASSERT_EQ(enc.size(), pc.n_intermediate());
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(enc[i], msg[i]);
  for (std::size_t i = 0; i < enc.size(); ++i) EXPECT_EQ(enc[i], combine(pc.generator_row(i), msg, 0, 24));
}

TEST(Precode, AllRecoveredSucceedsAndKMinusOneFails) {
  Rng rng(13);
  const Precode pc(32, {0.1, 0.1, 1.0}, rng);
  const auto msg = random_message(32, 8, rng);
  const auto enc = pc.encode(msg);
  std::vector<RecoveredVector> all;
  for (std::size_t i = 0; i < enc.size(); ++i) all.push_back({i, enc[i]});
  const auto ok = pc.decode(all);
  ASSERT_TRUE(ok.ok());
  EXPECT_EQ(*ok.message, msg);

  std::vector<RecoveredVector> few(all.end() - 31, all.end());
  const auto bad = pc.decode(few);
  EXPECT_FALSE(bad.ok());
  EXPECT_GE(bad.deficit, 1u);
}

TEST(Precode, ExhaustiveSubsetsMatchRankOracle) {
  // k = 8, n_intermediate = 9: every subset of recovered indices.
  Rng rng(14);
  const std::size_t k = 8;
  const Precode pc(k, {0.1, 0.1, 1.0}, rng);
  const std::size_t n = pc.n_intermediate();
  ASSERT_LE(n, 12u);
  const auto msg = random_message(k, 12, rng);
  const auto enc = pc.encode(msg);
  for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
    std::vector<RecoveredVector> rows;
    oracle::Dense g;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
      if (!((mask >> i) & 1U)) continue;
      rows.push_back({i, enc[i]});
      idx.push_back(i);
      std::vector<std::uint8_t> r(k);
      const auto gr = pc.generator_row(i);
      for (std::size_t j = 0; j < k; ++j) r[j] = gr.get(j);
      g.push_back(r);
    }
    const std::size_t expected_rank = oracle::byte_rank(g);
    const auto res = pc.decode(rows);
    ASSERT_EQ(res.ok(), expected_rank == k) << mask;
    ASSERT_EQ(res.deficit, k - expected_rank) << mask;
    ASSERT_EQ(pc.deficit(idx), k - expected_rank) << mask;
    if (res.ok()) {
      ASSERT_EQ(*res.message, msg);
    }
  }
}

TEST(Precode, RandomSubsetsWithSpareRowsDecode) {
  // k + 8 random intermediates out of n: failure chance below 2^-8 each.
  Rng rng(15);
  const std::size_t k = 256;
  const Precode pc(k, {0.1, 0.1, 1.0}, rng);
  const auto msg = random_message(k, 8, rng);
  const auto enc = pc.encode(msg);
  int ok = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<std::size_t> perm(enc.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    for (std::size_t i = perm.size(); i-- > 1;) std::swap(perm[i], perm[rng.below(i + 1)]);
    std::vector<RecoveredVector> rows;
    for (std::size_t i = 0; i < k + 8; ++i) rows.push_back({perm[i], enc[perm[i]]});
    const auto res = pc.decode(rows);
    if (res.ok()) {
      ++ok;
      ASSERT_EQ(*res.message, msg);
    }
  }
  EXPECT_GE(ok, 198);
}
