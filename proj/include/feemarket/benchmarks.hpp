#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "feemarket/accounting.hpp"
#include "feemarket/mechanisms.hpp"
#include "feemarket/scenario.hpp"
#include "feemarket/types.hpp"

namespace feemarket {

namespace detail {

inline std::span<const Transaction> static_arrivals(const Scenario& scenario, const char* who) {
  if (scenario.is_adaptive()) {
    throw Unsupported(std::string(who) +
                      ": adaptive scenario; pass the realized arrivals of a run instead");
  }
  if (scenario.resources() != 1) throw ContractViolation(std::string(who) + " needs one resource");
  return scenario.arrivals;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Offline optima
// ---------------------------------------------------------------------------

/// Welfare-optimal fractional schedule with per-block cap B over blocks 1..T:
/// each block takes min(B, pending size) units in descending unit value,
/// splitting the marginal transaction. Patient values only.
inline Schedule opt_fractional(std::span<const Transaction> txs, double B, std::int64_t T) {
  if (!(B > 0.0)) throw InvalidInput("opt_fractional: B must be positive");
  for (const auto& tx : txs) {
    tx.validate(1);
    if (!is_patient(tx.sensitivity)) {
      throw Unsupported("opt_fractional: fill order is optimal for patient values only");
    }
  }
  std::vector<std::size_t> by_arrival(txs.size());
  std::iota(by_arrival.begin(), by_arrival.end(), std::size_t{0});
  std::stable_sort(by_arrival.begin(), by_arrival.end(),
                   [&](std::size_t a, std::size_t b) { return txs[a].arrival < txs[b].arrival; });

  struct Item {
    std::size_t idx;
    double remaining;  // units still pending
  };
  auto worse = [&](const Item& a, const Item& b) {
    const auto& x = txs[a.idx];
    const auto& y = txs[b.idx];
    if (x.unit_value != y.unit_value) return x.unit_value < y.unit_value;
    if (x.arrival != y.arrival) return x.arrival > y.arrival;
    return x.id > y.id;
  };
  std::priority_queue<Item, std::vector<Item>, decltype(worse)> pool(worse);

  Schedule s;
  s.integral = false;
  std::size_t cursor = 0;
  for (std::int64_t t = 1; t <= T; ++t) {
    while (cursor < by_arrival.size() && txs[by_arrival[cursor]].arrival <= t) {
      const auto i = by_arrival[cursor++];
      pool.push({i, static_cast<double>(txs[i].size[0])});
    }
    double room = B;
    while (room > 0.0 && !pool.empty()) {
      Item top = pool.top();
      pool.pop();
      const double q = static_cast<double>(txs[top.idx].size[0]);
      if (top.remaining <= room) {
        s.entries.push_back({txs[top.idx].id, t, top.remaining / q});
        room -= top.remaining;
      } else {
        s.entries.push_back({txs[top.idx].id, t, room / q});
        top.remaining -= room;
        room = 0.0;
        pool.push(top);
      }
    }
  }
  return s;
}

inline Schedule opt_fractional(const Scenario& scenario, double B, std::int64_t T) {
  return opt_fractional(detail::static_arrivals(scenario, "opt_fractional"), B, T);
}

/// Exact maximum-welfare integral schedule with per-block cap B over blocks
/// 1..T, by depth-first branch and bound. Handles discounted and
/// patience-limited values. Guards: sum of sizes <= 10^4 and T <= 12.
inline Schedule opt_integral_small(std::span<const Transaction> txs, double B, std::int64_t T) {
  constexpr std::int64_t kMaxBlocks = 12;
  constexpr double kMaxTotalSize = 1e4;
  if (!(B > 0.0)) throw InvalidInput("opt_integral_small: B must be positive");
  if (T > kMaxBlocks) {
    throw TooLarge("opt_integral_small: T = " + std::to_string(T) + " exceeds 12 blocks");
  }
  double total = 0.0;
  for (const auto& tx : txs) {
    tx.validate(1);
    total += static_cast<double>(tx.size[0]);
  }
  if (total > kMaxTotalSize) {
    throw TooLarge("opt_integral_small: total size " + std::to_string(total) + " exceeds 10^4");
  }
  if (T < 1) return Schedule{};

  struct Item {
    const Transaction* tx;
    double q;
    double best_unit;  // upper bound on per-unit value over usable blocks
    bool same_as_prev;
  };
  std::vector<Item> items;
  for (const auto& tx : txs) {
    const double q = static_cast<double>(tx.size[0]);
    if (q > B || tx.arrival > T) continue;
    double best = 0.0;
    for (std::int64_t t = tx.arrival; t <= T; ++t) best = std::max(best, tx.unit_value_at(t));
    if (best <= 0.0) continue;
    items.push_back({&tx, q, best, false});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.best_unit != b.best_unit) return a.best_unit > b.best_unit;
    if (a.q != b.q) return a.q < b.q;
    if (a.tx->arrival != b.tx->arrival) return a.tx->arrival < b.tx->arrival;
    return a.tx->id < b.tx->id;
  });
  for (std::size_t i = 1; i < items.size(); ++i) {
    const auto& a = *items[i - 1].tx;
    const auto& b = *items[i].tx;
    items[i].same_as_prev = a.size == b.size && a.unit_value == b.unit_value &&
                            a.arrival == b.arrival && a.sensitivity == b.sensitivity;
  }

  const auto n = items.size();
  const auto nb = static_cast<std::size_t>(T);
  std::vector<double> residual(nb, B);
  std::vector<std::int64_t> assign(n, 0);  // 0 = skipped
  std::vector<std::int64_t> best_assign(n, 0);
  double best_value = 0.0;
  double current = 0.0;

  // Fractional relaxation with values relaxed to best_unit and deadlines
  // dropped. Availability sets [arrival, T] are nested, so greedy by value
  // against the suffix capacities slack[s] = sum_{t >= s} residual_t is exact.
  std::vector<double> slack(nb + 1, 0.0);
  auto bound = [&](std::size_t from) {
    slack[nb] = 0.0;
    for (std::size_t s = nb; s-- > 0;) slack[s] = slack[s + 1] + residual[s];
    double extra = 0.0;
    for (std::size_t i = from; i < n && slack[0] > 1e-12; ++i) {
      const auto a = static_cast<std::size_t>(items[i].tx->arrival - 1);
      double take = items[i].q;
      for (std::size_t s = 0; s <= a; ++s) take = std::min(take, slack[s]);
      if (take <= 0.0) continue;
      for (std::size_t s = 0; s <= a; ++s) slack[s] -= take;
      extra += take * items[i].best_unit;
    }
    return extra;
  };

  // Incumbents from greedy placements: items in value order (equal values by
  // arrival, either direction) go to their best-valued feasible block, ties
  // broken latest-first or earliest-first.
  std::vector<std::size_t> order(n);
  for (const bool late_arrivals_first : {false, true}) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (late_arrivals_first) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (items[x].best_unit != items[y].best_unit) return items[x].best_unit > items[y].best_unit;
        return items[x].tx->arrival > items[y].tx->arrival;
      });
    }
    for (const bool latest : {true, false}) {
      std::vector<double> room(nb, B);
      std::vector<std::int64_t> trial(n, 0);
      double value = 0.0;
      for (const auto i : order) {
        std::int64_t pick = 0;
        double pick_v = 0.0;
        for (std::int64_t t = items[i].tx->arrival; t <= T; ++t) {
          if (room[static_cast<std::size_t>(t - 1)] < items[i].q) continue;
          const double v = items[i].tx->unit_value_at(t);
          if (v > pick_v || (latest && v == pick_v && v > 0.0)) {
            pick = t;
            pick_v = v;
          }
        }
        if (pick == 0) continue;
        room[static_cast<std::size_t>(pick - 1)] -= items[i].q;
        trial[i] = pick;
        value += items[i].q * pick_v;
      }
      if (value > best_value) {
        best_value = value;
        best_assign = trial;
      }
    }
  }

  auto dfs = [&](auto&& self, std::size_t i) -> void {
    if (current > best_value * (1.0 + 1e-12) + 1e-12) {
      best_value = current;
      best_assign = assign;
    }
    if (i == n) return;
    if (current + bound(i) <= best_value * (1.0 + 1e-12) + 1e-12) return;

    const Item& it = items[i];
    const bool chained = it.same_as_prev;
    // Identical items: included ones first, in nondecreasing blocks.
    if (!(chained && assign[i - 1] == 0)) {
      std::int64_t first = it.tx->arrival;
      if (chained) first = std::max(first, assign[i - 1]);
      for (std::int64_t t = first; t <= T; ++t) {
        const auto b = static_cast<std::size_t>(t - 1);
        if (residual[b] < it.q) continue;
        const double v = it.tx->unit_value_at(t);
        if (v <= 0.0) continue;
        residual[b] -= it.q;
        current += it.q * v;
        assign[i] = t;
        self(self, i + 1);
        assign[i] = 0;
        current -= it.q * v;
        residual[b] += it.q;
      }
    }
    self(self, i + 1);
  };
  dfs(dfs, 0);

  Schedule s;
  s.integral = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (best_assign[i] != 0) s.entries.push_back({items[i].tx->id, best_assign[i], 1.0});
  }
  std::sort(s.entries.begin(), s.entries.end(), [](const ScheduleEntry& a, const ScheduleEntry& b) {
    return a.t != b.t ? a.t < b.t : a.id < b.id;
  });
  return s;
}

inline Schedule opt_integral_small(const Scenario& scenario, double B, std::int64_t T) {
  if (scenario.is_adaptive()) {
    throw Unsupported("opt_integral_small: adaptive scenario; pass realized arrivals");
  }
  if (scenario.resources() != 1) throw ContractViolation("opt_integral_small needs one resource");
  return opt_integral_small(std::span<const Transaction>(scenario.arrivals), B, T);
}

// ---------------------------------------------------------------------------
// Dominance checks
// ---------------------------------------------------------------------------

/// Average block size constraint the benchmark schedule claims to satisfy.
struct BenchConstraint {
  double B = 1.0;
  SlackFn slack = constant_slack(0.0);
};

struct ThresholdViolation {
  double theta = 0.0;
  double lhs = 0.0;  // Q_[1,T](bench, theta)
  double rhs = 0.0;  // Q_[1,T+Gamma](alg, theta e^-eta)
};

struct ThresholdReport {
  bool pass = true;
  std::size_t thresholds_checked = 0;
  std::vector<ThresholdViolation> violations;
};

struct WelfareReport {
  bool pass = true;
  /// SW(alg,[1,T+Gamma]) / SW(bench,[1,T]); +inf when the bench has no welfare.
  double ratio = std::numeric_limits<double>::infinity();
  double alg_welfare = 0.0;
  double bench_welfare = 0.0;
  /// (1 - delta) with delta = 1 - e^-eta.
  double factor = 1.0;
};

namespace detail {

inline void require_bench_constraint(const Schedule& bench, const TxTable& txs, std::int64_t T,
                                     const BenchConstraint& constraint) {
  const auto sizes = block_sizes(bench, txs, 1, std::max<std::int64_t>(T, 1));
  const double caps[1] = {constraint.B};
  const auto report = check_avg_block_size(sizes, std::span<const double>(caps), constraint.slack);
  if (!report.pass) {
    const auto& v = report.violations.front();
    throw PreconditionFailed("benchmark breaks its average block size limit on [" +
                             std::to_string(v.t0) + "," + std::to_string(v.t1) + "]: " +
                             std::to_string(v.lhs) + " > " + std::to_string(v.rhs));
  }
}

}  // namespace detail

/// Q_[1,T](bench, theta) <= Q_[1,T+Gamma](alg, theta e^-eta) at every distinct
/// unit value of either schedule. Both sides are step functions in theta, so
/// the breakpoints cover every theta.
inline ThresholdReport check_threshold_dominance(const Schedule& alg, const Schedule& bench,
                                                 const TxTable& txs, std::int64_t T,
                                                 std::int64_t gamma, double eta,
                                                 const BenchConstraint& constraint) {
  if (T < 1 || gamma < 0) throw ContractViolation("check_threshold_dominance: need T >= 1, Gamma >= 0");
  detail::require_bench_constraint(bench, txs, T, constraint);

  std::vector<double> thetas = distinct_values(bench, txs, T);
  const auto alg_vals = distinct_values(alg, txs, T + gamma);
  thetas.insert(thetas.end(), alg_vals.begin(), alg_vals.end());
  std::sort(thetas.begin(), thetas.end(), std::greater<>());
  thetas.erase(std::unique(thetas.begin(), thetas.end()), thetas.end());

  // Sweep both sides in descending theta with cumulative sums.
  struct Point {
    double v;
    double q;
  };
  auto points = [&](const Schedule& s, std::int64_t horizon) {
    std::vector<Point> p;
    for (const auto& e : s.entries) {
      if (e.t < 1 || e.t > horizon) continue;
      const auto& tx = txs.at(e.id);
      p.push_back({tx.unit_value, e.fraction * static_cast<double>(tx.value_units())});
    }
    std::sort(p.begin(), p.end(), [](const Point& a, const Point& b) { return a.v > b.v; });
    return p;
  };
  const auto lhs_pts = points(bench, T);
  const auto rhs_pts = points(alg, T + gamma);
  const double shrink = std::exp(-eta);

  ThresholdReport report;
  CompensatedSum lhs;
  CompensatedSum rhs;
  std::size_t li = 0;
  std::size_t ri = 0;
  for (double theta : thetas) {
    while (li < lhs_pts.size() && lhs_pts[li].v >= theta) lhs += lhs_pts[li++].q;
    const double cut = theta * shrink;
    while (ri < rhs_pts.size() && rhs_pts[ri].v >= cut) rhs += rhs_pts[ri++].q;
    ++report.thresholds_checked;
    const double l = lhs.value();
    const double r = rhs.value();
    if (l > r + kTheoremRelTol * std::max(1.0, l)) {
      report.pass = false;
      report.violations.push_back({theta, l, r});
    }
  }
  return report;
}

inline WelfareReport check_welfare_dominance(const Schedule& alg, const Schedule& bench,
                                             const TxTable& txs, std::int64_t T,
                                             std::int64_t gamma, double eta,
                                             const BenchConstraint& constraint) {
  if (T < 1 || gamma < 0) throw ContractViolation("check_welfare_dominance: need T >= 1, Gamma >= 0");
  detail::require_bench_constraint(bench, txs, T, constraint);
  WelfareReport r;
  r.alg_welfare = welfare(alg, txs, T + gamma);
  r.bench_welfare = welfare(bench, txs, T);
  r.factor = std::exp(-eta);
  r.ratio = r.bench_welfare > 0.0 ? r.alg_welfare / r.bench_welfare
                                  : std::numeric_limits<double>::infinity();
  r.pass = r.alg_welfare >= r.factor * r.bench_welfare * (1.0 - kTheoremRelTol);
  return r;
}

struct GreedyDominanceReport {
  bool pass = true;
  double greedy_welfare = 0.0;  // SW(greedy,[1,T+1])
  double opt_welfare = 0.0;     // SW(opt_fractional,[1,T])
  double max_block = 0.0;
};

/// Runs greedy_online to T+1 and opt_fractional to T on the arrivals greedy saw.
inline GreedyDominanceReport greedy_dominance_check(const Scenario& scenario, double B,
                                                    std::int64_t T) {
  if (T < 1) throw ContractViolation("greedy_dominance_check: T must be >= 1");
  const auto run = greedy_online(scenario, B, T + 1);
  const TxTable table(run.realized);
  const auto opt = opt_fractional(std::span<const Transaction>(run.realized), B, T);
  GreedyDominanceReport r;
  r.greedy_welfare = welfare(run.schedule, table, T + 1);
  r.opt_welfare = welfare(opt, table, T);
  for (const auto& b : run.trace.blocks) r.max_block = std::max(r.max_block, b.size[0]);
  r.pass = r.greedy_welfare >= r.opt_welfare - 1e-9 * r.opt_welfare;
  return r;
}

}  // namespace feemarket
