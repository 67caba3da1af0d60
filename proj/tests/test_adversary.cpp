#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "feemarket/adversary.hpp"
#include "feemarket/rng.hpp"
#include "oracles.hpp"

using namespace feemarket;
using oracle::tx;

namespace {

std::vector<const Transaction*> ptrs(const std::vector<Transaction>& txs) {
  std::vector<const Transaction*> out;
  for (const auto& x : txs) out.push_back(&x);
  return out;
}

// Full sort in policy order, then one admission pass.
std::vector<TxId> reference_select(const std::vector<Transaction>& txs, const std::vector<double>& cap,
                                   const InclusionPolicy& pol, std::int64_t block) {
  const auto el = ptrs(txs);
  std::vector<std::size_t> order = detail::policy_order(el, pol, block);
  std::vector<double> left = cap;
  std::vector<TxId> ids;
  for (auto i : order) {
    bool fits = true;
    for (std::size_t j = 0; j < cap.size(); ++j) fits = fits && static_cast<double>(txs[i].size[j]) <= left[j];
    if (!fits) continue;
    for (std::size_t j = 0; j < cap.size(); ++j) left[j] -= static_cast<double>(txs[i].size[j]);
    ids.push_back(txs[i].id);
  }
  return ids;
}

}  // namespace

TEST(SelectBlock, EverythingFits) {
  const std::vector<Transaction> txs{tx(1, 1, 10, 1.0), tx(2, 1, 10, 5.0)};
  const std::vector<double> cap{20.0};
  for (auto pol : {InclusionPolicy::value_ascending(), InclusionPolicy::value_descending(),
                   InclusionPolicy::seeded_random(3), InclusionPolicy::tip_priority({{2, 1.0}})}) {
    auto ids = select_block(ptrs(txs), cap, pol, 1);
    std::sort(ids.begin(), ids.end());
    EXPECT_EQ(ids, (std::vector<TxId>{1, 2}));
  }
}

TEST(SelectBlock, HighTipLowValueCrowdsOutHighValue) {
  // sizes 1.2B (tip 1) and B (tip 0), capacity 2B
  const std::vector<Transaction> txs{tx(1, 1, 12, 2.0), tx(2, 1, 10, 10.0)};
  const std::vector<double> cap{20.0};
  const auto el = ptrs(txs);
  const auto ids = select_block(el, cap, InclusionPolicy::tip_priority({{1, 1.0}, {2, 0.0}}), 1);
  EXPECT_EQ(ids, (std::vector<TxId>{1}));
  EXPECT_TRUE(is_maximal(el, cap, ids));
}

TEST(SelectBlock, EmptyEligibleSet) {
  const std::vector<const Transaction*> none;
  const std::vector<double> cap{20.0};
  EXPECT_TRUE(select_block(none, cap, InclusionPolicy{}, 1).empty());
}

TEST(SelectBlock, OversizedSkippedNotBlocking) {
  const std::vector<Transaction> txs{tx(1, 1, 30, 1.0), tx(2, 1, 5, 2.0)};
  const std::vector<double> cap{20.0};
  EXPECT_EQ(select_block(ptrs(txs), cap, InclusionPolicy::value_ascending(), 1), (std::vector<TxId>{2}));
}

TEST(SelectBlock, PolicyOrders) {
  const std::vector<Transaction> txs{tx(1, 2, 6, 3.0), tx(2, 1, 6, 1.0), tx(3, 1, 6, 2.0), tx(4, 1, 6, 3.0)};
  const std::vector<double> cap{12.0};
  EXPECT_EQ(select_block(ptrs(txs), cap, InclusionPolicy::value_ascending(), 1), (std::vector<TxId>{2, 3}));
  // equal values: earlier arrival first
  EXPECT_EQ(select_block(ptrs(txs), cap, InclusionPolicy::value_descending(), 1), (std::vector<TxId>{4, 1}));
  EXPECT_EQ(select_block(ptrs(txs), cap, InclusionPolicy::tip_priority({{3, 5.0}}), 1), (std::vector<TxId>{3, 1}));
}

TEST(SelectBlock, MatchesReferenceAndIsMaximal) {
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    SplitMix64 rng(seed);
    const std::size_t m = 1 + seed % 3;
    std::vector<Transaction> txs;
    std::map<TxId, double> tips;
    const auto n = rng.uniform_int(0, 25);
    for (TxId id = 1; id <= static_cast<TxId>(n); ++id) {
      auto x = tx(id * 7 % 101 + 1, static_cast<std::int64_t>(rng.uniform_int(1, 4)), 0,
                  static_cast<double>(rng.uniform_int(1, 5)));
      x.size.assign(m, 0);
      for (auto& q : x.size) q = rng.uniform_int(0, 9);
      if (x.size[0] == 0) x.size[0] = 1;
      tips[x.id] = static_cast<double>(rng.uniform_int(0, 3));
      txs.push_back(x);
    }
    std::vector<double> cap(m);
    for (auto& c : cap) c = static_cast<double>(rng.uniform_int(5, 30));
    const auto el = ptrs(txs);
    for (const auto& pol : {InclusionPolicy::value_ascending(), InclusionPolicy::value_descending(),
                            InclusionPolicy::tip_priority(tips), InclusionPolicy::seeded_random(seed)}) {
      const auto ids = select_block(el, cap, pol, static_cast<std::int64_t>(seed % 5));
      EXPECT_EQ(ids, reference_select(txs, cap, pol, static_cast<std::int64_t>(seed % 5))) << "seed " << seed;
      EXPECT_TRUE(is_maximal(el, cap, ids)) << "seed " << seed;
    }
  }
}

TEST(SelectBlock, TipPriorityIncludesBestFittingTransaction) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    SplitMix64 rng(seed);
    std::vector<Transaction> txs;
    std::map<TxId, double> tips;
    for (TxId id = 1; id <= 12; ++id) {
      txs.push_back(tx(id, 1, rng.uniform_int(1, 15), 1.0));
      tips[id] = rng.uniform01();
    }
    const std::vector<double> cap{10.0};
    const auto ids = select_block(ptrs(txs), cap, InclusionPolicy::tip_priority(tips), 1);
    TxId best = 0;
    double best_tip = -1.0;
    for (const auto& x : txs) {
      if (x.size[0] <= 10 && tips[x.id] > best_tip) {
        best_tip = tips[x.id];
        best = x.id;
      }
    }
    if (best != 0) {
      EXPECT_NE(std::find(ids.begin(), ids.end(), best), ids.end());
    }
  }
}

TEST(SelectBlock, SeededRandomIsReproduciblePerBlock) {
  std::vector<Transaction> txs;
  for (TxId id = 1; id <= 30; ++id) txs.push_back(tx(id, 1, 3, 1.0));
  const std::vector<double> cap{15.0};
  const auto el = ptrs(txs);
  const auto pol = InclusionPolicy::seeded_random(11);
  EXPECT_EQ(select_block(el, cap, pol, 4), select_block(el, cap, pol, 4));
  // input order does not matter
  std::vector<const Transaction*> rev(el.rbegin(), el.rend());
  EXPECT_EQ(select_block(el, cap, pol, 4), select_block(rev, cap, pol, 4));
  bool differs = false;
  for (std::int64_t b = 5; b < 10 && !differs; ++b) differs = select_block(el, cap, pol, b) != select_block(el, cap, pol, 4);
  EXPECT_TRUE(differs);
}

TEST(SelectBlock, ResourceCountMismatch) {
  const std::vector<Transaction> txs{tx(1, 1, 1, 1.0)};
  const std::vector<double> cap{5.0, 5.0};
  EXPECT_THROW(select_block(ptrs(txs), cap, InclusionPolicy{}, 1), ContractViolation);
}

TEST(PolicyNames, RoundTrip) {
  for (auto k : {InclusionPolicy::Kind::TipPriority, InclusionPolicy::Kind::ValueAscending,
                 InclusionPolicy::Kind::ValueDescending, InclusionPolicy::Kind::SeededRandom}) {
    EXPECT_EQ(policy_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(policy_kind_from_string("cheapest"), InvalidInput);
}
