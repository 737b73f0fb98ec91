#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ccnet/simulator.hpp"
#include "oracles.hpp"

using namespace ccnet;

namespace {

SimConfig make_cfg(std::size_t k, std::size_t q, std::vector<double> p, std::size_t m = 0) {
  SimConfig cfg;
  cfg.code = {k, q, m};
  for (double pi : p) cfg.links.push_back(LinkParams::deterministic(pi));
  return cfg;
}

double mean_delay(const SimConfig& cfg, std::size_t trials) {
  return estimate_delay_quantile(cfg, trials, 0.1).mean;
}

}  // namespace

TEST(Simulator, SingleLosslessLinkMatchesDenseCdf) {
  const auto cfg = make_cfg(4, 1, {1.0});
  const std::size_t trials = 20000;
  const auto est = estimate_delay_quantile(cfg, trials, 0.3);
  std::vector<std::size_t> hist(40, 0);
  for (double d : est.delays) {
    ASSERT_EQ(d, std::floor(d));
    ++hist[static_cast<std::size_t>(d)];
  }
  double cdf = 0.0;
  for (std::size_t n = 4; n <= 9; ++n) {
    cdf += hist[n] / double(trials);
    const double p = oracle::dense_delay_cdf(4, n);
    EXPECT_NEAR(cdf, p, 4 * std::sqrt(p * (1 - p) / trials)) << n;
  }
  EXPECT_EQ(hist[0] + hist[1] + hist[2] + hist[3], 0u);
  // 0.7-quantile from the oracle CDF: smallest n with CDF(n) >= 0.7.
  std::size_t n07 = 4;
  while (oracle::dense_delay_cdf(4, n07) < 0.7) ++n07;
  EXPECT_EQ(n07, 6u);
  EXPECT_EQ(est.quantile.value, 6.0);
}

TEST(Simulator, StoreAndForwardCausality) {
  // Lossless line: a packet needs one slot per hop, so sink rank at time t is
  // at most t - L + 1.
  for (std::size_t L : {1, 2, 3, 5}) {
    auto cfg = make_cfg(16, 1, std::vector<double>(L, 1.0));
    for (std::uint64_t s = 1; s <= 20; ++s) {
      const auto res = run_once(cfg.with_seeds(s, s));
      ASSERT_TRUE(res.coding_delay.has_value());
      EXPECT_GE(*res.coding_delay, 16.0 + L - 1);
      for (const auto& rs : res.rank_trajectory) {
        const double cap = std::max(0.0, rs.time - static_cast<double>(L) + 1.0);
        ASSERT_LE(static_cast<double>(rs.rank), cap);
      }
    }
  }
}

TEST(Simulator, RankTrajectoryMonotone) {
  auto cfg = make_cfg(32, 4, {0.8, 0.6});
  const auto res = run_once(cfg);
  ASSERT_FALSE(res.rank_trajectory.empty());
  EXPECT_EQ(res.rank_trajectory.front().rank, 0u);
  for (std::size_t i = 1; i < res.rank_trajectory.size(); ++i) {
    EXPECT_EQ(res.rank_trajectory[i].rank, res.rank_trajectory[i - 1].rank + 1);
    EXPECT_GE(res.rank_trajectory[i].time, res.rank_trajectory[i - 1].time);
  }
  EXPECT_EQ(res.rank_trajectory.back().rank, 32u);
  EXPECT_EQ(*res.coding_delay, res.rank_trajectory.back().time);
}

TEST(Simulator, Deterministic) {
  auto cfg = make_cfg(64, 4, {0.9, 0.7, 0.8}, 16);
  cfg.code_seed = 42;
  cfg.traffic_seed = 7;
  const auto a = run_once(cfg), b = run_once(cfg);
  EXPECT_EQ(a.coding_delay, b.coding_delay);
  EXPECT_EQ(a.successes, b.successes);
  EXPECT_EQ(a.chunk_decode_times, b.chunk_decode_times);
  ASSERT_EQ(a.rank_trajectory.size(), b.rank_trajectory.size());
  EXPECT_EQ(a.recovered, b.recovered);
}

TEST(Simulator, ConservationAgainstTrace) {
  for (bool poisson : {false, true}) {
    SimConfig cfg;
    cfg.code = {48, 3, 0};
    for (double p : {0.9, 0.6, 0.75}) {
      cfg.links.push_back(poisson ? LinkParams::poisson(0.8, p) : LinkParams::deterministic(p));
    }
    for (std::uint64_t s = 1; s <= 10; ++s) {
      const auto c = cfg.with_seeds(s, s + 100);
      const auto res = run_once(c);
      ASSERT_TRUE(res.coding_delay.has_value());
      const auto tr = sample_trace({c.links, res.end_time}, c.traffic_seed);
      for (std::size_t i = 0; i < c.L(); ++i) {
        EXPECT_EQ(res.successes[i], tr.successes(i));
        EXPECT_EQ(res.transmissions[i], tr.transmissions[i]);
      }
    }
  }
}

TEST(Simulator, ReplayOfSampledTraceReproducesRun) {
  SimConfig cfg;
  cfg.code = {40, 2, 8};
  cfg.links = {LinkParams::poisson(0.9, 0.7), LinkParams::poisson(0.6, 0.9)};
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto c = cfg.with_seeds(s, s);
    const auto live = run_once(c);
    const auto tr = sample_trace({c.links, 1e4}, c.traffic_seed);
    const auto replay = run_once(c, tr);
    EXPECT_EQ(live.coding_delay, replay.coding_delay);
    EXPECT_EQ(live.successes, replay.successes);
    EXPECT_EQ(live.recovered, replay.recovered);
  }
}

TEST(Simulator, ReplayRejectsMismatchedTrace) {
  const auto cfg = make_cfg(8, 1, {0.5, 0.5});
  TrafficTrace tr;
  tr.success_times.resize(1);
  tr.horizon = 10;
  EXPECT_THROW(run_once(cfg, tr), std::invalid_argument);
}

TEST(Simulator, PayloadRecoveredExactly) {
  for (std::uint64_t s = 1; s <= 15; ++s) {
    auto cfg = make_cfg(24, 1 + (s % 3 == 0 ? 3 : s % 3), {0.9, 0.6}, 33);
    cfg.code.q = cfg.code.q == 3 ? 4 : cfg.code.q;
    const auto c = cfg.with_seeds(s, 2 * s);
    const auto res = run_once(c);
    ASSERT_TRUE(res.coding_delay.has_value());
    ASSERT_TRUE(res.recovered.has_value());
    EXPECT_EQ(*res.recovered, source_message(c));
  }
}

TEST(Simulator, CapExceededIsMarked) {
  auto cfg = make_cfg(64, 1, {0.5});
  cfg.horizon = Horizon::run_to_decode(0.5);  // 0.5 * 64 / 0.5 = 64 slots at most
  const auto res = run_once(cfg);
  EXPECT_FALSE(res.coding_delay.has_value());
  EXPECT_TRUE(res.cap_exceeded);
  EXPECT_TRUE(std::isinf(res.delay_or_infinity()));
  EXPECT_LE(res.end_time, 64.0);
  EXPECT_GT(res.undecodable_fraction, 0.0);
}

TEST(Simulator, FixedHorizonFraction) {
  auto cfg = make_cfg(64, 8, {0.9, 0.8});
  cfg.horizon = Horizon::fixed(0);
  EXPECT_EQ(run_once(cfg).undecodable_fraction, 1.0);
  cfg.horizon = Horizon::fixed(2000);
  const auto res = run_once(cfg);
  EXPECT_EQ(res.undecodable_fraction, 0.0);
  ASSERT_TRUE(res.coding_delay.has_value());
  EXPECT_FALSE(res.cap_exceeded);
  // Fraction equals the share of chunks undecoded at the horizon.
  cfg.horizon = Horizon::fixed(60);
  const auto mid = run_once(cfg);
  std::size_t open = 0;
  for (const auto& t : mid.chunk_decode_times) open += !t.has_value();
  EXPECT_DOUBLE_EQ(mid.undecodable_fraction, open / 8.0);
  EXPECT_EQ(mid.end_time, 60.0);
}

TEST(Simulator, MonotoneInPLAndQ) {
  const std::size_t n = 150;
  const double hi = mean_delay(make_cfg(64, 4, {0.9, 0.9}), n);
  const double lo = mean_delay(make_cfg(64, 4, {0.6, 0.9}), n);
  EXPECT_LT(hi, lo);
  const double l1 = mean_delay(make_cfg(64, 4, {0.8}), n);
  const double l3 = mean_delay(make_cfg(64, 4, {0.8, 0.8, 0.8}), n);
  EXPECT_LT(l1, l3);
  const double q1 = mean_delay(make_cfg(64, 1, {0.8, 0.8}), n);
  const double q16 = mean_delay(make_cfg(64, 16, {0.8, 0.8}), n);
  EXPECT_LT(q1, q16);
}

TEST(Simulator, PoissonMatchesScaledDeterministic) {
  SimConfig pois;
  pois.code = {64, 2, 0};
  pois.links = {LinkParams::poisson(0.5, 0.8), LinkParams::poisson(0.5, 0.8)};
  const double mp = mean_delay(pois, 200);
  const double md = mean_delay(make_cfg(64, 2, {0.4, 0.4}), 200);
  EXPECT_NEAR(mp / md, 1.0, 0.1);
}

TEST(Simulator, CcpRecoversMessage) {
  SimConfig cfg;
  cfg.code = {128, 8, 12};
  cfg.precode = PrecodeParams{0.1, 0.1, 1.0};
  cfg.links = {LinkParams::deterministic(0.9), LinkParams::deterministic(0.8)};
  const auto lay = layout_of(cfg);
  EXPECT_EQ(lay.alpha, 16u);
  EXPECT_EQ(lay.n_coded, 144u);  // ceil(1.12 * 128) = 144 (143.36)
  EXPECT_EQ(lay.n_padded, 144u);
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto c = cfg.with_seeds(s, s);
    const auto res = run_ccp(c);
    ASSERT_TRUE(res.coding_delay.has_value());
    ASSERT_TRUE(res.recovered.has_value());
    EXPECT_EQ(*res.recovered, source_message(c));
  }
  EXPECT_THROW(run_ccp(make_cfg(8, 1, {0.5})), std::invalid_argument);
}

TEST(Simulator, CcpPaddingCountsAsKnown) {
  SimConfig cfg;
  cfg.code = {100, 4, 0};  // alpha = 25, n_coded = 112, padded to 125
  cfg.precode = PrecodeParams{0.1, 0.1, 1.0};
  cfg.links = {LinkParams::deterministic(1.0)};
  const auto lay = layout_of(cfg);
  EXPECT_EQ(lay.n_coded, 112u);
  EXPECT_EQ(lay.n_padded, 125u);
  EXPECT_EQ(lay.q, 5u);
  cfg.horizon = Horizon::fixed(0);
  const auto res = run_once(cfg);
  EXPECT_EQ(res.rank_trajectory.front().rank, 13u);
  EXPECT_EQ(res.undecodable_fraction, 1.0);
}

TEST(Estimators, ParallelInvariant) {
  auto cfg = make_cfg(32, 2, {0.8, 0.7});
  const auto a = estimate_delay_quantile(cfg, 40, 0.1, 1);
  const auto b = estimate_delay_quantile(cfg, 40, 0.1, 4);
  EXPECT_EQ(a.delays, b.delays);
  EXPECT_EQ(a.quantile.value, b.quantile.value);
  const auto x = estimate_average_delay(cfg, 6, 5, 0.2, 1);
  const auto y = estimate_average_delay(cfg, 6, 5, 0.2, 3);
  EXPECT_EQ(x.code_means, y.code_means);
}

TEST(Estimators, AverageDelayFixesCodeAcrossTraffic) {
  // Same code seed, different traffic: different delays; one code mean per
  // code realization.
  auto cfg = make_cfg(32, 2, {0.8, 0.7});
  const auto est = estimate_average_delay(cfg, 4, 10, 0.25);
  ASSERT_EQ(est.code_means.size(), 4u);
  for (double m : est.code_means) EXPECT_GT(m, 32.0 / 0.7 * 0.8);
  EXPECT_NE(run_once(cfg.with_seeds(1, 1)).coding_delay, run_once(cfg.with_seeds(1, 2)).coding_delay);
}

TEST(Estimators, UndecodableStats) {
  auto cfg = make_cfg(64, 8, {0.9, 0.8});
  EXPECT_THROW(measure_undecodable_fraction(cfg, 10, 0.1), std::invalid_argument);
  cfg.horizon = Horizon::fixed(70);
  const auto st = measure_undecodable_fraction(cfg, 30, 0.25);
  ASSERT_EQ(st.fractions.size(), 30u);
  EXPECT_GE(st.mean, 0.0);
  EXPECT_LE(st.mean, 1.0);
  std::size_t over = 0;
  for (double f : st.fractions) over += f > 0.25;
  EXPECT_DOUBLE_EQ(st.exceedance, over / 30.0);
}

TEST(Quantile, OrderStatisticAndUnderpowered) {
  const auto q = empirical_quantile({5, 1, 4, 2, 3}, 0.6);
  EXPECT_EQ(q.value, 3.0);
  EXPECT_FALSE(q.underpowered);
  EXPECT_TRUE(empirical_quantile({1, 2, 3}, 0.9).underpowered);
  EXPECT_LE(q.ci_low, q.value);
  EXPECT_GE(q.ci_high, q.value);
  EXPECT_THROW(empirical_quantile({}, 0.5), std::invalid_argument);
  EXPECT_THROW(empirical_quantile({1}, 1.0), std::invalid_argument);
}
