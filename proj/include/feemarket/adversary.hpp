#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "feemarket/rng.hpp"
#include "feemarket/types.hpp"

namespace feemarket {

/// How the block builder orders eligible transactions. Whatever the order,
/// the resulting block is maximal by inclusion.
struct InclusionPolicy {
  enum class Kind { TipPriority, ValueAscending, ValueDescending, SeededRandom };

  Kind kind = Kind::ValueAscending;
  /// TipPriority only; transactions without an entry tip 0.
  std::map<TxId, double> tips;
  /// SeededRandom only.
  std::uint64_t seed = 0;

  static InclusionPolicy value_ascending() { return {Kind::ValueAscending, {}, 0}; }
  static InclusionPolicy value_descending() { return {Kind::ValueDescending, {}, 0}; }
  static InclusionPolicy tip_priority(std::map<TxId, double> tips) {
    return {Kind::TipPriority, std::move(tips), 0};
  }
  static InclusionPolicy seeded_random(std::uint64_t seed) { return {Kind::SeededRandom, {}, seed}; }

  [[nodiscard]] double tip(TxId id) const {
    auto it = tips.find(id);
    return it == tips.end() ? 0.0 : it->second;
  }
};

inline const char* to_string(InclusionPolicy::Kind k) {
  switch (k) {
    case InclusionPolicy::Kind::TipPriority: return "tip";
    case InclusionPolicy::Kind::ValueAscending: return "value_asc";
    case InclusionPolicy::Kind::ValueDescending: return "value_desc";
    case InclusionPolicy::Kind::SeededRandom: return "random";
  }
  return "?";
}

inline InclusionPolicy::Kind policy_kind_from_string(const std::string& s) {
  if (s == "tip") return InclusionPolicy::Kind::TipPriority;
  if (s == "value_asc") return InclusionPolicy::Kind::ValueAscending;
  if (s == "value_desc") return InclusionPolicy::Kind::ValueDescending;
  if (s == "random") return InclusionPolicy::Kind::SeededRandom;
  throw InvalidInput("unknown policy '" + s + "' (expected tip|value_asc|value_desc|random)");
}

namespace detail {

/// Strict "comes first" order for the deterministic policies.
inline auto policy_before(std::span<const Transaction* const> eligible, const InclusionPolicy& policy) {
  return [eligible, &policy](std::size_t a, std::size_t b) {
    const auto& x = *eligible[a];
    const auto& y = *eligible[b];
    switch (policy.kind) {
      case InclusionPolicy::Kind::TipPriority: {
        const double ta = policy.tip(x.id);
        const double tb = policy.tip(y.id);
        if (ta != tb) return ta > tb;
        return x.id < y.id;
      }
      case InclusionPolicy::Kind::ValueAscending:
      case InclusionPolicy::Kind::ValueDescending: {
        if (x.unit_value != y.unit_value) {
          return policy.kind == InclusionPolicy::Kind::ValueAscending ? x.unit_value < y.unit_value
                                                                      : x.unit_value > y.unit_value;
        }
        if (x.arrival != y.arrival) return x.arrival < y.arrival;
        return x.id < y.id;
      }
      case InclusionPolicy::Kind::SeededRandom:
        break;
    }
    return x.id < y.id;
  };
}

inline std::vector<std::size_t> policy_order(std::span<const Transaction* const> eligible,
                                             const InclusionPolicy& policy,
                                             std::int64_t block_index) {
  std::vector<std::size_t> order(eligible.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (policy.kind != InclusionPolicy::Kind::SeededRandom) {
    std::sort(order.begin(), order.end(), policy_before(eligible, policy));
    return order;
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return eligible[a]->id < eligible[b]->id; });
  auto rng = SplitMix64::derive(policy.seed, static_cast<std::uint64_t>(block_index));
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_int(0, i - 1)]);
  }
  return order;
}

}  // namespace detail

/// Admits eligible transactions in policy order whenever they still fit the
/// residual capacity in every resource. Transactions larger than the
/// capacity are skipped and stay pending. A single pass is already maximal:
/// residual capacity only shrinks, so anything rejected earlier still does
/// not fit at the end. Returns indices into `eligible`, in admission order.
inline std::vector<std::size_t> select_block_indices(std::span<const Transaction* const> eligible,
                                                     std::span<const double> capacity,
                                                     const InclusionPolicy& policy,
                                                     std::int64_t block_index) {
  const std::size_t m = capacity.size();
  std::vector<double> residual(capacity.begin(), capacity.end());
  std::vector<double> smallest(m, std::numeric_limits<double>::infinity());
  for (const auto* tx : eligible) {
    if (tx->size.size() != m) {
      throw ContractViolation("transaction " + std::to_string(tx->id) +
                              " size vector does not match the resource count");
    }
    for (std::size_t j = 0; j < m; ++j) smallest[j] = std::min(smallest[j], static_cast<double>(tx->size[j]));
  }
  auto exhausted = [&] {
    for (std::size_t j = 0; j < m; ++j) {
      if (residual[j] < smallest[j]) return true;
    }
    return false;
  };
  std::vector<std::size_t> admitted;
  auto offer = [&](std::size_t idx) {
    const auto& tx = *eligible[idx];
    for (std::size_t j = 0; j < m; ++j) {
      if (static_cast<double>(tx.size[j]) > residual[j]) return;
    }
    for (std::size_t j = 0; j < m; ++j) residual[j] -= static_cast<double>(tx.size[j]);
    admitted.push_back(idx);
  };

  if (policy.kind == InclusionPolicy::Kind::SeededRandom) {
    for (std::size_t idx : detail::policy_order(eligible, policy, block_index)) {
      if (exhausted()) break;
      offer(idx);
    }
    return admitted;
  }
  // Lazy ordering: only the prefix that is actually offered gets sorted.
  std::vector<std::size_t> heap(eligible.size());
  std::iota(heap.begin(), heap.end(), std::size_t{0});
  const auto before = detail::policy_before(eligible, policy);
  const auto after = [&](std::size_t a, std::size_t b) { return before(b, a); };
  std::make_heap(heap.begin(), heap.end(), after);
  while (!heap.empty() && !exhausted()) {
    std::pop_heap(heap.begin(), heap.end(), after);
    offer(heap.back());
    heap.pop_back();
  }
  return admitted;
}

inline std::vector<TxId> select_block(std::span<const Transaction* const> eligible,
                                      std::span<const double> capacity,
                                      const InclusionPolicy& policy, std::int64_t block_index) {
  std::vector<TxId> ids;
  for (std::size_t idx : select_block_indices(eligible, capacity, policy, block_index)) {
    ids.push_back(eligible[idx]->id);
  }
  return ids;
}

/// True when no eligible transaction outside `chosen` fits the residual capacity.
inline bool is_maximal(std::span<const Transaction* const> eligible, std::span<const double> capacity,
                       std::span<const TxId> chosen) {
  std::vector<double> residual(capacity.begin(), capacity.end());
  for (TxId id : chosen) {
    auto it = std::find_if(eligible.begin(), eligible.end(),
                           [&](const Transaction* tx) { return tx->id == id; });
    if (it == eligible.end()) return false;
    for (std::size_t j = 0; j < residual.size(); ++j) residual[j] -= static_cast<double>((*it)->size[j]);
  }
  for (double r : residual) {
    if (r < 0.0) return false;
  }
  for (const auto* tx : eligible) {
    if (std::find(chosen.begin(), chosen.end(), tx->id) != chosen.end()) continue;
    bool fits = true;
    for (std::size_t j = 0; j < residual.size() && fits; ++j) {
      fits = static_cast<double>(tx->size[j]) <= residual[j];
    }
    if (fits) return false;
  }
  return true;
}

}  // namespace feemarket
