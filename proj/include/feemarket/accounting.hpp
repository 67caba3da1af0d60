#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "feemarket/types.hpp"

namespace feemarket {

/// Throws InvalidSchedule unless every entry references a known transaction,
/// none precedes its arrival, fractions lie in (0,1] and sum to at most 1 per
/// transaction, and an integral schedule lists each transaction once at x=1.
inline void validate_schedule(const Schedule& s, const TxTable& txs) {
  std::unordered_map<TxId, double> total;
  for (const auto& e : s.entries) {
    const auto& tx = txs.at(e.id);
    if (e.t < tx.arrival) {
      throw InvalidSchedule("transaction " + std::to_string(e.id) + " scheduled at t=" +
                            std::to_string(e.t) + " before its arrival " +
                            std::to_string(tx.arrival));
    }
    if (!(e.fraction > 0.0 && e.fraction <= 1.0 + kFractionTol)) {
      throw InvalidSchedule("transaction " + std::to_string(e.id) + " has fraction outside (0,1]");
    }
    double& acc = total[e.id];
    if (s.integral && (acc > 0.0 || e.fraction != 1.0)) {
      throw InvalidSchedule("integral schedule splits or repeats transaction " +
                            std::to_string(e.id));
    }
    acc += e.fraction;
    if (acc > 1.0 + kFractionTol) {
      throw InvalidSchedule("transaction " + std::to_string(e.id) + " scheduled more than once");
    }
  }
}

/// SW(S,[1,T]): sum of x * q * (time-adjusted per-unit value).
inline double welfare(const Schedule& s, const TxTable& txs, std::int64_t T) {
  CompensatedSum sum;
  for (const auto& e : s.entries) {
    const auto& tx = txs.at(e.id);
    if (e.t > T) continue;
    sum += e.fraction * static_cast<double>(tx.value_units()) * tx.unit_value_at(e.t);
  }
  return sum.value();
}

/// Q_[a,b](S, theta): scheduled size of transactions with v >= theta (inclusive).
inline double quantity_above(const Schedule& s, const TxTable& txs, double theta, std::int64_t a,
                             std::int64_t b) {
  if (a > b) throw ContractViolation("quantity_above: empty window");
  CompensatedSum sum;
  for (const auto& e : s.entries) {
    if (e.t < a || e.t > b) continue;
    const auto& tx = txs.at(e.id);
    if (tx.unit_value >= theta) sum += e.fraction * static_cast<double>(tx.value_units());
  }
  return sum.value();
}

/// Distinct per-unit values among entries with t <= T, descending, deduplicated
/// on the exact bit pattern.
inline std::vector<double> distinct_values(const Schedule& s, const TxTable& txs,
                                           std::int64_t T) {
  std::vector<double> vals;
  for (const auto& e : s.entries) {
    if (e.t <= T) vals.push_back(txs.at(e.id).unit_value);
  }
  std::sort(vals.begin(), vals.end(), std::greater<>());
  vals.erase(std::unique(vals.begin(), vals.end(),
                         [](double x, double y) {
                           return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
                         }),
             vals.end());
  return vals;
}

/// Integral over theta of Q_[1,T](S, theta), evaluated exactly as a sum of
/// rectangles between consecutive distinct values. Patient values only.
inline double welfare_via_threshold_integral(const Schedule& s, const TxTable& txs,
                                             std::int64_t T) {
  for (const auto& e : s.entries) {
    if (!is_patient(txs.at(e.id).sensitivity)) {
      throw Unsupported("threshold integral identity holds for patient values only");
    }
  }
  const auto vals = distinct_values(s, txs, T);
  CompensatedSum sum;
  for (std::size_t j = 0; j < vals.size(); ++j) {
    const double next = j + 1 < vals.size() ? vals[j + 1] : 0.0;
    if (vals[j] <= 0.0) break;
    sum += (vals[j] - next) * quantity_above(s, txs, vals[j], 1, T);
  }
  return sum.value();
}

/// Per-resource block sizes Q_t for t = 1..horizon (horizon 0: last scheduled block).
inline std::vector<std::vector<double>> block_sizes(const Schedule& s, const TxTable& txs,
                                                    std::size_t resources,
                                                    std::int64_t horizon = 0) {
  const std::int64_t n = horizon > 0 ? horizon : s.last_block();
  std::vector<std::vector<double>> q(resources, std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (const auto& e : s.entries) {
    if (e.t > n) continue;
    const auto& tx = txs.at(e.id);
    if (tx.size.size() != resources) {
      throw InvalidSchedule("transaction " + std::to_string(e.id) + " has wrong resource count");
    }
    for (std::size_t j = 0; j < resources; ++j) {
      q[j][static_cast<std::size_t>(e.t - 1)] += e.fraction * static_cast<double>(tx.size[j]);
    }
  }
  return q;
}

/// Per-resource maximum of Q_t.
inline std::vector<double> max_block_size(const Schedule& s, const TxTable& txs,
                                          std::size_t resources = 1) {
  std::vector<double> out(resources, 0.0);
  const auto q = block_sizes(s, txs, resources);
  for (std::size_t j = 0; j < resources; ++j) {
    for (double x : q[j]) out[j] = std::max(out[j], x);
  }
  return out;
}

using SlackFn = std::function<double(std::int64_t)>;

inline SlackFn constant_slack(double delta) {
  return [delta](std::int64_t) { return delta; };
}

struct WindowViolation {
  std::size_t resource = 0;
  std::int64_t t0 = 0;
  std::int64_t t1 = 0;
  double lhs = 0.0;  // total size in the window
  double rhs = 0.0;  // (k + Delta(k)) * B
};

struct AvgSizeReport {
  bool pass = true;
  std::size_t violation_count = 0;
  /// First kMaxListed violations in (resource, t0, t1) order.
  std::vector<WindowViolation> violations;
  static constexpr std::size_t kMaxListed = 1000;
};

/// Every window [t0,t1] of `sizes` (block t at index t-1) must satisfy
/// sum <= (k + Delta(k)) * B with k = t1 - t0 + 1. O(n^2) via prefix sums.
inline void check_avg_block_size_series(std::span<const double> sizes, double B,
                                        const SlackFn& slack, std::size_t resource,
                                        AvgSizeReport& report) {
  const std::size_t n = sizes.size();
  std::vector<double> prefix(n + 1, 0.0);
  {
    CompensatedSum acc;
    for (std::size_t i = 0; i < n; ++i) {
      acc += sizes[i];
      prefix[i + 1] = acc.value();
    }
  }
  std::vector<double> allowance(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    allowance[k] = (static_cast<double>(k) + slack(static_cast<std::int64_t>(k))) * B;
  }
  for (std::size_t t0 = 0; t0 < n; ++t0) {
    for (std::size_t t1 = t0; t1 < n; ++t1) {
      const std::size_t k = t1 - t0 + 1;
      const double lhs = prefix[t1 + 1] - prefix[t0];
      const double rhs = allowance[k];
      if (lhs > rhs + 1e-12 * std::max(1.0, std::abs(rhs))) {
        report.pass = false;
        ++report.violation_count;
        if (report.violations.size() < AvgSizeReport::kMaxListed) {
          report.violations.push_back({resource, static_cast<std::int64_t>(t0 + 1),
                                       static_cast<std::int64_t>(t1 + 1), lhs, rhs});
        }
      }
    }
  }
}

inline AvgSizeReport check_avg_block_size(const std::vector<std::vector<double>>& sizes,
                                          std::span<const double> B, const SlackFn& slack) {
  if (sizes.size() != B.size()) throw ContractViolation("check_avg_block_size: resource mismatch");
  AvgSizeReport report;
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    check_avg_block_size_series(sizes[j], B[j], slack, j, report);
  }
  return report;
}

inline AvgSizeReport check_avg_block_size(const Schedule& s, const TxTable& txs,
                                          std::span<const double> B, const SlackFn& slack) {
  return check_avg_block_size(block_sizes(s, txs, B.size()), B, slack);
}

inline AvgSizeReport check_avg_block_size(const Schedule& s, const TxTable& txs, double B,
                                          const SlackFn& slack) {
  const double caps[1] = {B};
  return check_avg_block_size(s, txs, std::span<const double>(caps), slack);
}

/// max over windows of (sum Q / B - k): the smallest constant slackness the
/// series satisfies (0 when every window is within k*B).
inline double measured_slackness(std::span<const double> sizes, double B) {
  const std::size_t n = sizes.size();
  std::vector<double> prefix(n + 1, 0.0);
  CompensatedSum acc;
  for (std::size_t i = 0; i < n; ++i) {
    acc += sizes[i];
    prefix[i + 1] = acc.value();
  }
  double best = 0.0;
  for (std::size_t t0 = 0; t0 < n; ++t0) {
    for (std::size_t t1 = t0; t1 < n; ++t1) {
      const double k = static_cast<double>(t1 - t0 + 1);
      best = std::max(best, (prefix[t1 + 1] - prefix[t0]) / B - k);
    }
  }
  return best;
}

}  // namespace feemarket
