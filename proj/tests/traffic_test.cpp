#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ccnet/traffic.hpp"

using namespace ccnet;

TEST(LinkParams, CapacityAndValidation) {
  EXPECT_DOUBLE_EQ(LinkParams::deterministic(0.7).capacity(), 0.7);
  EXPECT_DOUBLE_EQ(LinkParams::poisson(0.5, 0.8).capacity(), 0.4);
  EXPECT_THROW(LinkParams::deterministic(0.0).validate(), std::invalid_argument);
  EXPECT_THROW(LinkParams::deterministic(1.2).validate(), std::invalid_argument);
  EXPECT_THROW(LinkParams::poisson(1.5, 0.5).validate(), std::invalid_argument);
  EXPECT_DOUBLE_EQ(bottleneck_capacity({LinkParams::deterministic(0.9), LinkParams::poisson(0.5, 0.8)}), 0.4);
}

TEST(LinkProcess, DeterministicSlotsAreIntegers) {
  LinkProcess proc(LinkParams::deterministic(0.5), 1);
  for (int t = 1; t <= 100; ++t) EXPECT_EQ(proc.next().time, static_cast<double>(t));
}

TEST(LinkProcess, LosslessLinkAlwaysSucceeds) {
  LinkProcess proc(LinkParams::deterministic(1.0), 2);
  for (int t = 0; t < 100; ++t) EXPECT_TRUE(proc.next().success);
}

TEST(SampleTrace, SuccessFractionMatchesP) {
  NetworkParams net{{LinkParams::deterministic(0.3)}, 50000};
  const auto tr = sample_trace(net, 3);
  EXPECT_EQ(tr.transmissions[0], 50000u);
  const double f = tr.successes(0) / 50000.0;
  EXPECT_NEAR(f, 0.3, 4 * std::sqrt(0.3 * 0.7 / 50000));
}

TEST(SampleTrace, PoissonCountsAndGaps) {
  NetworkParams net{{LinkParams::poisson(0.5, 1.0)}, 40000};
  const auto tr = sample_trace(net, 4);
  // Count ~ Poisson(20000).
  EXPECT_NEAR(static_cast<double>(tr.transmissions[0]), 20000.0, 4 * std::sqrt(20000.0));
  const auto& t = tr.success_times[0];
  double sum = 0, sum2 = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double g = t[i] - t[i - 1];
    ASSERT_GT(g, 0.0);
    sum += g;
    sum2 += g * g;
  }
  const double n = static_cast<double>(t.size() - 1);
  const double mean = sum / n;
  EXPECT_NEAR(mean, 2.0, 0.05);
  EXPECT_NEAR(sum2 / n - mean * mean, 4.0, 0.25);  // exponential: variance = mean^2
}

TEST(SampleTrace, PoissonThinningKeepsShareP) {
  NetworkParams net{{LinkParams::poisson(1.0, 0.25)}, 40000};
  const auto tr = sample_trace(net, 5);
  const double f = static_cast<double>(tr.successes(0)) / static_cast<double>(tr.transmissions[0]);
  EXPECT_NEAR(f, 0.25, 0.015);
}

TEST(SampleTrace, DeterministicAndLinkStreamsIndependent) {
  NetworkParams a{{LinkParams::deterministic(0.5), LinkParams::deterministic(0.6)}, 500};
  NetworkParams b{{LinkParams::deterministic(0.9), LinkParams::deterministic(0.6)}, 500};
  const auto ta1 = sample_trace(a, 9), ta2 = sample_trace(a, 9), tb = sample_trace(b, 9);
  EXPECT_EQ(ta1.success_times, ta2.success_times);
  EXPECT_EQ(ta1.success_times[1], tb.success_times[1]);
  EXPECT_NE(ta1.success_times[0], tb.success_times[0]);
  EXPECT_NE(sample_trace(a, 10).success_times, ta1.success_times);
}

TEST(SampleTrace, TimesWithinHorizonAndIncreasing) {
  NetworkParams net{{LinkParams::poisson(0.7, 0.6), LinkParams::deterministic(0.4)}, 300.5};
  const auto tr = sample_trace(net, 6);
  for (const auto& times : tr.success_times) {
    for (std::size_t i = 0; i < times.size(); ++i) {
      ASSERT_GT(times[i], 0.0);
      ASSERT_LE(times[i], 300.5);
      if (i) {
        ASSERT_LT(times[i - 1], times[i]);
      }
    }
  }
  EXPECT_THROW(sample_trace({{}, 10}, 1), std::invalid_argument);
  EXPECT_THROW(sample_trace({{LinkParams::deterministic(0.5)}, 0}, 1), std::invalid_argument);
}

TEST(UnequalParams, GapsAndRange) {
  const auto p = make_unequal_params(4, 0.5, 0.1);
  ASSERT_EQ(p.size(), 4u);
  EXPECT_NEAR(p[0], 0.8, 1e-12);
  EXPECT_DOUBLE_EQ(p[3], 0.5);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_NEAR(p[i - 1] - p[i], 0.1, 1e-12);
  EXPECT_THROW(make_unequal_params(4, 0.8, 0.1), std::invalid_argument);
  EXPECT_THROW(make_unequal_params(2, 0.5, 0.0), std::invalid_argument);
  EXPECT_EQ(make_unequal_params(1, 0.3, 0.0).size(), 1u);
}

TEST(TraceCsv, RoundTrip) {
  NetworkParams net{{LinkParams::poisson(0.8, 0.5), LinkParams::deterministic(0.7)}, 200};
  const auto tr = sample_trace(net, 7);
  std::stringstream ss;
  write_trace_csv(ss, tr);
  EXPECT_EQ(ss.str().rfind("link_index,time\n", 0), 0u);
  const auto back = read_trace_csv(ss, 2, 200);
  EXPECT_EQ(back.success_times, tr.success_times);
}

TEST(TraceCsv, RejectsMalformedInput) {
  const auto read = [](const std::string& s) {
    std::istringstream is(s);
    return read_trace_csv(is, 2, 10);
  };
  EXPECT_THROW(read("time,link\n"), std::invalid_argument);
  EXPECT_THROW(read("link_index,time\n2,1\n"), std::invalid_argument);
  EXPECT_THROW(read("link_index,time\n0,11\n"), std::invalid_argument);
  EXPECT_THROW(read("link_index,time\n0,3\n0,2\n"), std::invalid_argument);
  EXPECT_THROW(read("link_index,time\n0,abc\n"), std::invalid_argument);
  EXPECT_NO_THROW(read("link_index,time\n1,2\n0,3\n"));
}
