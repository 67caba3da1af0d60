#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "feemarket/accounting.hpp"
#include "feemarket/benchmarks.hpp"
#include "feemarket/mechanisms.hpp"
#include "feemarket/rng.hpp"
#include "feemarket/scenarios.hpp"
#include "oracles.hpp"

using namespace feemarket;
using oracle::tx;

namespace {

std::vector<Transaction> micro(SplitMix64& rng, std::size_t n_max, std::int64_t T, Size q_max, bool timed = false) {
  std::vector<Transaction> txs;
  const auto n = rng.uniform_int(0, n_max);
  for (TxId id = 1; id <= static_cast<TxId>(n); ++id) {
    Sensitivity s = Patient{};
    if (timed) {
      const auto k = rng.uniform_int(0, 2);
      if (k == 1) s = Discount{0.25 * static_cast<double>(rng.uniform_int(0, 3))};
      if (k == 2) s = Patience{static_cast<std::int64_t>(rng.uniform_int(0, 2))};
    }
    txs.push_back(tx(id, static_cast<std::int64_t>(rng.uniform_int(1, static_cast<std::uint64_t>(T))),
                     rng.uniform_int(1, q_max), static_cast<double>(rng.uniform_int(1, 9)), s));
  }
  return txs;
}

double w(const Schedule& s, const std::vector<Transaction>& txs, std::int64_t T) {
  return welfare(s, TxTable(txs), T);
}

}  // namespace

TEST(OptFractional, TwoFullBlocks) {
  const std::vector<Transaction> txs{tx(1, 1, 10, 5.0), tx(2, 1, 10, 3.0)};
  const auto s = opt_fractional(txs, 10.0, 2);
  EXPECT_DOUBLE_EQ(w(s, txs, 2), 80.0);
  EXPECT_DOUBLE_EQ(oracle::fractional_opt(txs, 10, 2), 80.0);
  ASSERT_EQ(s.entries.size(), 2u);
  EXPECT_EQ(s.entries[0].id, 1);
  EXPECT_EQ(s.entries[0].t, 1);
  EXPECT_EQ(s.entries[1].id, 2);
  EXPECT_EQ(s.entries[1].t, 2);
}

TEST(OptFractional, SplitsAcrossBlocks) {
  const std::vector<Transaction> txs{tx(1, 1, 20, 1.0)};
  const auto s = opt_fractional(txs, 10.0, 2);
  ASSERT_EQ(s.entries.size(), 2u);
  EXPECT_DOUBLE_EQ(s.entries[0].fraction, 0.5);
  EXPECT_DOUBLE_EQ(s.entries[1].fraction, 0.5);
  EXPECT_DOUBLE_EQ(w(s, txs, 2), 20.0);
  EXPECT_FALSE(s.integral);
}

TEST(OptFractional, MatchesExhaustiveOracleOnMicroInstances) {
  for (std::uint64_t seed = 1; seed <= 400; ++seed) {
    SplitMix64 rng(seed);
    const auto T = static_cast<std::int64_t>(rng.uniform_int(1, 4));
    const auto B = static_cast<int>(rng.uniform_int(1, 5));
    const auto txs = micro(rng, 6, T, 4);
    const auto s = opt_fractional(txs, B, T);
    ASSERT_NO_THROW(validate_schedule(s, TxTable(txs)));
    const double want = oracle::fractional_opt(txs, B, T);
    EXPECT_NEAR(w(s, txs, T), want, 1e-9 * std::max(1.0, want)) << "seed " << seed;
  }
}

TEST(OptFractional, FillsMinOfBAndPending) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    SplitMix64 rng(seed);
    const auto txs = micro(rng, 15, 8, 7);
    const double B = 6.0;
    const auto s = opt_fractional(txs, B, 8);
    const auto sizes = block_sizes(s, TxTable(txs), 1, 8)[0];
    double arrived = 0.0;
    double used = 0.0;
    for (std::int64_t t = 1; t <= 8; ++t) {
      for (const auto& x : txs) arrived += x.arrival == t ? static_cast<double>(x.size[0]) : 0.0;
      EXPECT_NEAR(sizes[static_cast<std::size_t>(t - 1)], std::min(B, arrived - used), 1e-9);
      used += sizes[static_cast<std::size_t>(t - 1)];
    }
  }
}

TEST(OptFractional, RejectsTimeSensitiveValues) {
  const std::vector<Transaction> txs{tx(1, 1, 1, 1.0, Discount{0.1})};
  EXPECT_THROW(opt_fractional(txs, 1.0, 1), Unsupported);
}

TEST(OptIntegral, EqualSizesTakeTopValues) {
  std::vector<Transaction> txs;
  for (TxId id = 1; id <= 7; ++id) txs.push_back(tx(id, 1, 4, static_cast<double>(id)));
  const auto s = opt_integral_small(txs, 4.0, 3);
  EXPECT_DOUBLE_EQ(w(s, txs, 3), 4.0 * (7 + 6 + 5));
  EXPECT_EQ(max_block_size(s, TxTable(txs))[0], 4.0);
}

TEST(OptIntegral, ClassicKnapsack) {
  const std::vector<Transaction> txs{tx(1, 1, 6, 3.0), tx(2, 1, 5, 2.9), tx(3, 1, 5, 2.9)};
  const auto s = opt_integral_small(txs, 10.0, 1);
  EXPECT_DOUBLE_EQ(w(s, txs, 1), 29.0);
  ASSERT_EQ(s.entries.size(), 2u);
  EXPECT_EQ(s.entries[0].id, 2);
  EXPECT_EQ(s.entries[1].id, 3);
}

TEST(OptIntegral, MatchesSubsetEnumerationOnSingleBlock) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    SplitMix64 rng(seed);
    std::vector<Transaction> txs;
    const auto n = rng.uniform_int(0, 12);
    for (TxId id = 1; id <= static_cast<TxId>(n); ++id) {
      txs.push_back(tx(id, 1, rng.uniform_int(1, 30), rng.uniform(0.5, 10.0)));
    }
    const double B = static_cast<double>(rng.uniform_int(5, 60));
    const double want = oracle::knapsack_subsets(txs, B);
    EXPECT_NEAR(w(opt_integral_small(txs, B, 1), txs, 1), want, 1e-9 * std::max(1.0, want)) << "seed " << seed;
  }
}

TEST(OptIntegral, MatchesAssignmentEnumerationWithTimedValues) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    SplitMix64 rng(seed);
    const auto T = static_cast<std::int64_t>(rng.uniform_int(1, 3));
    const auto txs = micro(rng, 7, T, 5, true);
    const double B = static_cast<double>(rng.uniform_int(2, 8));
    const auto s = opt_integral_small(txs, B, T);
    ASSERT_NO_THROW(validate_schedule(s, TxTable(txs)));
    EXPECT_LE(max_block_size(s, TxTable(txs))[0], B);
    const double want = oracle::integral_opt(txs, {B}, T);
    EXPECT_NEAR(w(s, txs, T), want, 1e-9 * std::max(1.0, want)) << "seed " << seed;
  }
}

TEST(OptIntegral, BelowFractionalOptimum) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    SplitMix64 rng(seed);
    const auto T = static_cast<std::int64_t>(rng.uniform_int(1, 5));
    const auto txs = micro(rng, 10, T, 6);
    const double B = static_cast<double>(rng.uniform_int(3, 9));
    EXPECT_LE(w(opt_integral_small(txs, B, T), txs, T), w(opt_fractional(txs, B, T), txs, T) * (1 + 1e-12) + 1e-12);
  }
}

TEST(OptIntegral, Guards) {
  std::vector<Transaction> txs{tx(1, 1, 1, 1.0)};
  EXPECT_THROW(opt_integral_small(txs, 1.0, 13), TooLarge);
  txs.push_back(tx(2, 1, 10001, 1.0));
  EXPECT_THROW(opt_integral_small(txs, 1.0, 2), TooLarge);
}

TEST(ThresholdDominance, EmptyBenchPasses) {
  const std::vector<Transaction> txs{tx(1, 1, 5, 2.0)};
  const auto r = check_threshold_dominance(Schedule{}, Schedule{}, TxTable(txs), 3, 0, 0.125, {5.0});
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.violations.empty());
}

TEST(ThresholdDominance, DetectsShortfallAtBreakpoint) {
  const std::vector<Transaction> txs{tx(1, 1, 5, 2.0), tx(2, 1, 5, 1.0)};
  const Schedule bench{{{1, 1, 1.0}}, true};
  const Schedule alg{{{2, 1, 1.0}}, true};
  const auto r = check_threshold_dominance(alg, bench, TxTable(txs), 1, 0, 0.125, {5.0});
  ASSERT_FALSE(r.pass);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_DOUBLE_EQ(r.violations[0].theta, 2.0);
  EXPECT_DOUBLE_EQ(r.violations[0].lhs, 5.0);
  EXPECT_DOUBLE_EQ(r.violations[0].rhs, 0.0);
  // A value within e^-eta of theta counts on the algorithm's side.
  const std::vector<Transaction> close{tx(1, 1, 5, 2.0), tx(2, 1, 5, 2.0 * std::exp(-0.125))};
  EXPECT_TRUE(check_threshold_dominance(alg, bench, TxTable(close), 1, 0, 0.125, {5.0}).pass);
}

TEST(ThresholdDominance, BenchBreakingItsConstraintIsRejected) {
  const std::vector<Transaction> txs{tx(1, 1, 8, 2.0)};
  const Schedule bench{{{1, 1, 1.0}}, true};
  EXPECT_THROW(check_threshold_dominance(Schedule{}, bench, TxTable(txs), 1, 0, 0.125, {5.0}), PreconditionFailed);
  EXPECT_NO_THROW(check_threshold_dominance(Schedule{}, bench, TxTable(txs), 1, 0, 0.125,
                                            {5.0, constant_slack(1.0)}));
}

TEST(ThresholdDominance, EipRunWithTheoremGammaPasses) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    RandomFamilyConfig cfg;
    cfg.seed = seed;
    cfg.T = 80;
    cfg.B = 20;
    cfg.q_max = 20;
    cfg.load_factor = 2.0;
    cfg.v_lo = std::exp(0.125);
    cfg.v_hi = 1e4;
    const auto s = random_family(cfg);
    const MechanismParams p{20, 3, 0.125, 1, 10};
    const auto gamma = theorem_gamma(p, cfg.v_hi, 20);
    const auto run = run_price_based(s, p, InclusionPolicy::value_ascending(), cfg.T + gamma);
    const auto table = run.table();
    const auto bench = opt_fractional(s, 20, cfg.T);
    const auto th = check_threshold_dominance(run.schedule, bench, table, cfg.T, gamma, 0.125, {20});
    const auto wd = check_welfare_dominance(run.schedule, bench, table, cfg.T, gamma, 0.125, {20});
    EXPECT_TRUE(th.pass) << "seed " << seed;
    EXPECT_TRUE(wd.pass) << "seed " << seed;
    // larger extension keeps passing
    const auto run2 = run_price_based(s, p, InclusionPolicy::value_ascending(), cfg.T + gamma + 10);
    EXPECT_TRUE(check_threshold_dominance(run2.schedule, bench, table, cfg.T, gamma + 10, 0.125, {20}).pass);
  }
}

TEST(WelfareDominance, EmptyBenchIsInfiniteRatio) {
  const std::vector<Transaction> txs{tx(1, 1, 5, 2.0)};
  const auto r = check_welfare_dominance(Schedule{}, Schedule{}, TxTable(txs), 2, 0, 0.125, {5.0});
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(std::isinf(r.ratio));
}

TEST(WelfareDominance, IdenticalSchedulesRatioOne) {
  const std::vector<Transaction> txs{tx(1, 1, 5, 2.0), tx(2, 2, 5, 3.0)};
  const Schedule s{{{1, 1, 1.0}, {2, 2, 1.0}}, true};
  const auto r = check_welfare_dominance(s, s, TxTable(txs), 2, 0, 1e-12, {5.0});
  EXPECT_TRUE(r.pass);
  EXPECT_DOUBLE_EQ(r.ratio, 1.0);
  EXPECT_NEAR(r.factor, std::exp(-1e-12), 1e-15);
}

TEST(WelfareDominance, UsesExactDelta) {
  // ratio e^-eta passes, slightly below fails
  const double eta = 0.5;
  const std::vector<Transaction> txs{tx(1, 1, 1, 1.0), tx(2, 1, 1, std::exp(-eta) * (1 + 1e-12)),
                                     tx(3, 1, 1, (1.0 - eta) * 1.01)};
  const Schedule bench{{{1, 1, 1.0}}, true};
  EXPECT_TRUE(check_welfare_dominance(Schedule{{{2, 1, 1.0}}, true}, bench, TxTable(txs), 1, 0, eta, {1.0}).pass);
  EXPECT_FALSE(check_welfare_dominance(Schedule{{{3, 1, 1.0}}, true}, bench, TxTable(txs), 1, 0, eta, {1.0}).pass);
}

TEST(WelfareDominance, ThresholdPassImpliesWelfarePass) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    SplitMix64 rng(seed);
    const auto txs = micro(rng, 10, 4, 5);
    const double B = 5.0;
    const auto bench = opt_fractional(txs, B, 4);
    Schedule alg{{}, true};
    for (const auto& x : txs) {
      if (rng.uniform01() < 0.6) alg.entries.push_back({x.id, x.arrival + static_cast<std::int64_t>(rng.uniform_int(0, 2)), 1.0});
    }
    const auto th = check_threshold_dominance(alg, bench, TxTable(txs), 4, 2, 0.3, {B});
    const auto wd = check_welfare_dominance(alg, bench, TxTable(txs), 4, 2, 0.3, {B});
    if (th.pass) {
      EXPECT_TRUE(wd.pass) << "seed " << seed;
    }
  }
}

TEST(GreedyDominance, SingleTransaction) {
  const std::vector<Transaction> txs{tx(1, 1, 3, 2.0)};
  EXPECT_TRUE(greedy_dominance_check(make_static(txs, {5.0}), 5.0, 1).pass);
}

TEST(GreedyDominance, RandomInstances) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    RandomFamilyConfig cfg;
    cfg.seed = seed;
    cfg.T = 40;
    cfg.B = 10;
    cfg.q_max = 10;
    cfg.load_factor = 0.5 + static_cast<double>(seed % 4);
    cfg.v_lo = 2;
    cfg.v_hi = 100;
    const auto r = greedy_dominance_check(random_family(cfg), 10, 40);
    EXPECT_TRUE(r.pass) << "seed " << seed;
    EXPECT_LE(r.max_block, 20.0);
  }
}

TEST(GreedyDominance, AdaptiveLowerBoundInstanceAtCapTwo) {
  CBelowTwoConfig cfg{40, 1.5, 64, 0.01, 8};
  const auto con = c_below_two(cfg);
  EXPECT_TRUE(greedy_dominance_check(con.scenario, 64, 40).pass);
}
