#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "feemarket/accounting.hpp"
#include "feemarket/rng.hpp"
#include "feemarket/types.hpp"
#include "oracles.hpp"

using namespace feemarket;
using oracle::tx;

namespace {

Schedule all_at(const std::vector<Transaction>& txs, std::int64_t t) {
  Schedule s;
  for (const auto& x : txs) s.entries.push_back({x.id, std::max(t, x.arrival), 1.0});
  return s;
}

// One transaction of size `q` per block, placed at t = 1..n.
std::pair<std::vector<Transaction>, Schedule> blocks_of(const std::vector<Size>& sizes) {
  std::vector<Transaction> txs;
  Schedule s;
  TxId id = 1;
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    if (sizes[t] == 0) continue;
    txs.push_back(tx(id, static_cast<std::int64_t>(t + 1), sizes[t], 1.0));
    s.entries.push_back({id, static_cast<std::int64_t>(t + 1), 1.0});
    ++id;
  }
  return {txs, s};
}

}  // namespace

TEST(Welfare, SingleTransaction) {
  const std::vector<Transaction> txs{tx(1, 1, 10, 2.0)};
  EXPECT_DOUBLE_EQ(welfare(all_at(txs, 1), TxTable(txs), 1), 20.0);
}

TEST(Welfare, EmptySchedule) {
  const std::vector<Transaction> txs{tx(1, 1, 10, 2.0)};
  EXPECT_EQ(welfare(Schedule{}, TxTable(txs), 7), 0.0);
}

TEST(Welfare, ThreeTransactionsMatchPlainSum) {
  const std::vector<Transaction> txs{tx(1, 1, 5, 1.0), tx(2, 1, 5, 3.0), tx(3, 2, 10, 2.0)};
  const auto s = all_at(txs, 2);
  EXPECT_DOUBLE_EQ(welfare(s, TxTable(txs), 2), oracle::welfare(s, txs, 2));
  EXPECT_DOUBLE_EQ(welfare(s, TxTable(txs), 2), 40.0);
}

TEST(Welfare, WindowExcludesLaterBlocks) {
  const std::vector<Transaction> txs{tx(1, 1, 1, 5.0), tx(2, 1, 1, 7.0)};
  Schedule s{{{1, 1, 1.0}, {2, 3, 1.0}}, true};
  EXPECT_DOUBLE_EQ(welfare(s, TxTable(txs), 2), 5.0);
  EXPECT_DOUBLE_EQ(welfare(s, TxTable(txs), 3), 12.0);
}

TEST(Welfare, DiscountAndPatienceValues) {
  const std::vector<Transaction> txs{tx(1, 2, 4, 10.0, Discount{0.5}), tx(2, 1, 1, 3.0, Patience{2}),
                                     tx(3, 1, 1, 3.0, Patience{2})};
  Schedule s{{{1, 4, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}}, true};
  // 4 * 10 * 0.25 + 3 + 0 (patience window closed at t = 4)
  EXPECT_DOUBLE_EQ(welfare(s, TxTable(txs), 4), 13.0);
  EXPECT_DOUBLE_EQ(welfare(s, TxTable(txs), 4), oracle::welfare(s, txs, 4));
}

TEST(Welfare, UnknownIdIsInvalidSchedule) {
  const std::vector<Transaction> txs{tx(1, 1, 1, 1.0)};
  Schedule s{{{9, 1, 1.0}}, true};
  EXPECT_THROW(welfare(s, TxTable(txs), 1), InvalidSchedule);
}

TEST(ValidateSchedule, RejectsBadEntries) {
  const std::vector<Transaction> txs{tx(1, 3, 1, 1.0), tx(2, 1, 2, 1.0)};
  const TxTable table(txs);
  EXPECT_THROW(validate_schedule(Schedule{{{1, 2, 1.0}}, true}, table), InvalidSchedule);
  EXPECT_THROW(validate_schedule(Schedule{{{2, 1, 0.6}, {2, 2, 0.6}}, false}, table), InvalidSchedule);
  EXPECT_THROW(validate_schedule(Schedule{{{2, 1, 0.5}}, true}, table), InvalidSchedule);
  EXPECT_THROW(validate_schedule(Schedule{{{2, 1, 0.0}}, false}, table), InvalidSchedule);
  EXPECT_NO_THROW(validate_schedule(Schedule{{{2, 1, 0.5}, {2, 4, 0.5}}, false}, table));
}

TEST(Transaction, ValidateInvariants) {
  auto t = tx(1, 1, 1, 1.0);
  EXPECT_NO_THROW(t.validate(1));
  EXPECT_THROW(t.validate(2), InvalidInput);
  t.size = {0};
  EXPECT_THROW(t.validate(1), InvalidInput);
  t = tx(1, 0, 1, 1.0);
  EXPECT_THROW(t.validate(1), InvalidInput);
  t = tx(1, 1, 1, -1.0);
  EXPECT_THROW(t.validate(1), InvalidInput);
  t = tx(1, 1, 1, 1.0, Discount{1.0});
  EXPECT_THROW(t.validate(1), InvalidInput);
}

TEST(Transaction, LogValueMatchesValue) {
  const auto d = tx(1, 3, 1, 8.0, Discount{0.25});
  for (std::int64_t t = 3; t < 20; ++t) {
    EXPECT_NEAR(d.log_unit_value_at(t), std::log(d.unit_value_at(t)), 1e-12);
  }
  const auto p = tx(2, 3, 1, 8.0, Patience{1});
  EXPECT_EQ(p.unit_value_at(4), 8.0);
  EXPECT_EQ(p.unit_value_at(5), 0.0);
  EXPECT_TRUE(std::isinf(p.log_unit_value_at(5)));
}

TEST(TxTable, DuplicateIdsRejected) {
  const std::vector<Transaction> txs{tx(1, 1, 1, 1.0), tx(1, 2, 1, 1.0)};
  EXPECT_THROW(TxTable{txs}, InvalidInput);
}

TEST(QuantityAbove, ZeroThresholdCountsEverything) {
  const std::vector<Transaction> txs{tx(1, 1, 5, 1.0), tx(2, 1, 5, 3.0), tx(3, 1, 10, 2.0)};
  EXPECT_DOUBLE_EQ(quantity_above(all_at(txs, 1), TxTable(txs), 0.0, 1, 1), 20.0);
}

TEST(QuantityAbove, AboveMaxIsZero) {
  const std::vector<Transaction> txs{tx(1, 1, 5, 1.0), tx(2, 1, 5, 3.0)};
  EXPECT_EQ(quantity_above(all_at(txs, 1), TxTable(txs), 3.5, 1, 1), 0.0);
}

TEST(QuantityAbove, BetweenValuesAndInclusive) {
  const std::vector<Transaction> txs{tx(1, 1, 5, 1.0), tx(2, 1, 5, 3.0), tx(3, 1, 10, 2.0)};
  const auto s = all_at(txs, 1);
  EXPECT_DOUBLE_EQ(quantity_above(s, TxTable(txs), 2.5, 1, 1), 5.0);
  EXPECT_DOUBLE_EQ(quantity_above(s, TxTable(txs), 2.0, 1, 1), 15.0);
}

TEST(QuantityAbove, MonotoneAndAdditive) {
  SplitMix64 rng(7);
  std::vector<Transaction> txs;
  Schedule s{{}, false};
  for (TxId id = 1; id <= 40; ++id) {
    const auto t = static_cast<std::int64_t>(rng.uniform_int(1, 10));
    txs.push_back(tx(id, t, rng.uniform_int(1, 9), static_cast<double>(rng.uniform_int(1, 6))));
    s.entries.push_back({id, t + static_cast<std::int64_t>(rng.uniform_int(0, 3)), rng.uniform(0.1, 1.0)});
  }
  const TxTable table(txs);
  double prev = std::numeric_limits<double>::infinity();
  for (double theta = 0.0; theta <= 7.0; theta += 0.25) {
    const double q = quantity_above(s, table, theta, 1, 13);
    EXPECT_LE(q, prev);
    prev = q;
    EXPECT_NEAR(q, quantity_above(s, table, theta, 1, 5) + quantity_above(s, table, theta, 6, 13), 1e-9);
  }
}

TEST(ThresholdIntegral, SingleTransaction) {
  const std::vector<Transaction> txs{tx(1, 1, 10, 2.0)};
  EXPECT_DOUBLE_EQ(welfare_via_threshold_integral(all_at(txs, 1), TxTable(txs), 1), 20.0);
}

TEST(ThresholdIntegral, TwoTransactionsByHand) {
  const std::vector<Transaction> txs{tx(1, 1, 5, 1.0), tx(2, 1, 5, 3.0)};
  const auto s = all_at(txs, 1);
  // (3 - 1) * 5 + 1 * 10
  EXPECT_DOUBLE_EQ(welfare_via_threshold_integral(s, TxTable(txs), 1), 20.0);
  EXPECT_DOUBLE_EQ(welfare(s, TxTable(txs), 1), 20.0);
}

TEST(ThresholdIntegral, EmptySchedule) {
  const std::vector<Transaction> txs{tx(1, 1, 10, 2.0)};
  EXPECT_EQ(welfare_via_threshold_integral(Schedule{}, TxTable(txs), 3), 0.0);
}

TEST(ThresholdIntegral, NonPatientUnsupported) {
  const std::vector<Transaction> txs{tx(1, 1, 10, 2.0, Discount{0.1})};
  EXPECT_THROW(welfare_via_threshold_integral(all_at(txs, 1), TxTable(txs), 1), Unsupported);
}

TEST(ThresholdIntegral, MatchesWelfareOnRandomFractionalSchedules) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    SplitMix64 rng(seed);
    std::vector<Transaction> txs;
    Schedule s{{}, false};
    const auto n = rng.uniform_int(0, 30);
    for (TxId id = 1; id <= static_cast<TxId>(n); ++id) {
      const auto t = static_cast<std::int64_t>(rng.uniform_int(1, 8));
      // repeated constants exercise deduplication
      const double v = rng.uniform01() < 0.5 ? static_cast<double>(rng.uniform_int(1, 4)) : rng.log_uniform(0.5, 1e4);
      txs.push_back(tx(id, t, rng.uniform_int(1, 100), v));
      s.entries.push_back({id, t, rng.uniform(0.01, 1.0)});
    }
    const TxTable table(txs);
    const double w = oracle::welfare(s, txs, 8);
    EXPECT_NEAR(welfare_via_threshold_integral(s, table, 8), w, 1e-9 * std::max(1.0, w)) << "seed " << seed;
  }
}

TEST(AvgBlockSize, AlternatingDoubleBlocksWithUnitSlack) {
  const double B = 10.0;
  const auto [txs, s] = blocks_of({20, 0, 20, 0});
  const auto r = check_avg_block_size(s, TxTable(txs), B, constant_slack(1.0));
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.violation_count, 0u);
}

TEST(AvgBlockSize, SingleDoubleBlockViolatesWithoutSlack) {
  const auto [txs, s] = blocks_of({20});
  const auto r = check_avg_block_size(s, TxTable(txs), 10.0, constant_slack(0.0));
  ASSERT_FALSE(r.pass);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].t0, 1);
  EXPECT_EQ(r.violations[0].t1, 1);
  EXPECT_DOUBLE_EQ(r.violations[0].lhs, 20.0);
  EXPECT_DOUBLE_EQ(r.violations[0].rhs, 10.0);
}

TEST(AvgBlockSize, EmptyScheduleAlwaysPasses) {
  const std::vector<Transaction> txs;
  EXPECT_TRUE(check_avg_block_size(Schedule{}, TxTable(txs), 5.0, constant_slack(0.0)).pass);
}

TEST(AvgBlockSize, MatchesWindowEnumerationAndIsMonotone) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    SplitMix64 rng(seed);
    std::vector<Size> sizes;
    const auto n = rng.uniform_int(1, 12);
    for (std::uint64_t i = 0; i < n; ++i) sizes.push_back(rng.uniform_int(0, 25));
    const auto [txs, s] = blocks_of(sizes);
    const TxTable table(txs);
    std::vector<double> dsizes(sizes.begin(), sizes.end());
    for (double delta : {0.0, 0.5, 1.0, 2.0}) {
      const auto r = check_avg_block_size(s, table, 10.0, constant_slack(delta));
      const auto bad = oracle::bad_windows(dsizes, 10.0, delta);
      // trailing empty blocks are outside the schedule's support
      std::size_t in_support = 0;
      for (const auto& [a, b] : bad) in_support += b <= s.last_block() ? 1 : 0;
      EXPECT_EQ(r.violation_count, in_support) << "seed " << seed << " delta " << delta;
      if (delta > 0.0) {
        EXPECT_LE(r.violation_count, check_avg_block_size(s, table, 10.0, constant_slack(0.0)).violation_count);
      }
    }
  }
}

TEST(AvgBlockSize, ZeroSlackIffEveryWindowWithinB) {
  const auto [t1, ok] = blocks_of({10, 10, 5});
  EXPECT_TRUE(check_avg_block_size(ok, TxTable(t1), 10.0, constant_slack(0.0)).pass);
  const auto [t2, bad] = blocks_of({5, 11, 5});
  EXPECT_FALSE(check_avg_block_size(bad, TxTable(t2), 10.0, constant_slack(0.0)).pass);
}

TEST(MaxBlockSize, EmptyAndScalar) {
  const std::vector<Transaction> none;
  EXPECT_EQ(max_block_size(Schedule{}, TxTable(none))[0], 0.0);
  const auto [txs, s] = blocks_of({10, 20, 5});
  EXPECT_DOUBLE_EQ(max_block_size(s, TxTable(txs))[0], 20.0);
}

TEST(MaxBlockSize, ComponentWise) {
  std::vector<Transaction> txs;
  auto a = tx(1, 1, 0, 1.0);
  a.size = {3, 0, 1};
  auto b = tx(2, 1, 0, 1.0);
  b.size = {0, 4, 1};
  auto c = tx(3, 2, 0, 1.0);
  c.size = {2, 0, 5};
  txs = {a, b, c};
  Schedule s{{{1, 1, 1.0}, {2, 1, 1.0}, {3, 2, 1.0}}, true};
  const auto m = max_block_size(s, TxTable(txs), 3);
  // block 1 = (3,4,2), block 2 = (2,0,5)
  EXPECT_EQ(m, (std::vector<double>{3.0, 4.0, 5.0}));
}

TEST(MeasuredSlackness, SmallestPassingConstant) {
  const std::vector<double> sizes{20, 0, 20, 20, 0};
  const double d = measured_slackness(sizes, 10.0);
  EXPECT_DOUBLE_EQ(d, 2.0);
  EXPECT_TRUE(oracle::bad_windows(sizes, 10.0, d).empty());
  EXPECT_FALSE(oracle::bad_windows(sizes, 10.0, d - 0.01).empty());
}

TEST(CompensatedSum, RecoversCancellation) {
  CompensatedSum s;
  s += 1e16;
  s += 1.0;
  s += -1e16;
  EXPECT_EQ(s.value(), 1.0);
}

TEST(SplitMix64, ReferenceOutputs) {
  SplitMix64 r(0);
  EXPECT_EQ(r.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(r.next(), 0x6E789E6AA1B965F4ULL);
  SplitMix64 a = SplitMix64::derive(42, 3);
  SplitMix64 b = SplitMix64::derive(42, 3);
  SplitMix64 c = SplitMix64::derive(42, 4);
  const auto x = a.next();
  EXPECT_EQ(x, b.next());
  EXPECT_NE(x, c.next());
}

TEST(SplitMix64, UniformIntInRange) {
  SplitMix64 r(9);
  std::vector<int> hits(5, 0);
  for (int i = 0; i < 5000; ++i) {
    const auto x = r.uniform_int(3, 7);
    ASSERT_GE(x, 3u);
    ASSERT_LE(x, 7u);
    ++hits[x - 3];
  }
  for (int h : hits) EXPECT_GT(h, 800);
}
