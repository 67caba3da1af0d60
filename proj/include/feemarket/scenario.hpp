#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "feemarket/types.hpp"

namespace feemarket {

/// What an adaptive source sees of the block just built.
struct BlockOutcome {
  std::int64_t t = 0;  // 0 before the first block
  std::vector<Executed> executed;
  std::vector<double> size;
};

/// Produces the arrivals of block t. Adaptive sources may react to the
/// previous block's outcome; they must be deterministic in (seed, history).
class ArrivalSource {
 public:
  virtual ~ArrivalSource() = default;
  virtual std::vector<Transaction> next(std::int64_t t, const BlockOutcome& previous) = 0;
  /// Branch decisions and closed-form figures, recomputable from the trace.
  [[nodiscard]] virtual nlohmann::json audit() const { return nlohmann::json::object(); }
};

class StaticSource final : public ArrivalSource {
 public:
  explicit StaticSource(std::vector<Transaction> txs) : txs_(std::move(txs)) {
    std::stable_sort(txs_.begin(), txs_.end(),
                     [](const Transaction& a, const Transaction& b) { return a.arrival < b.arrival; });
  }

  std::vector<Transaction> next(std::int64_t t, const BlockOutcome&) override {
    std::vector<Transaction> out;
    while (cursor_ < txs_.size() && txs_[cursor_].arrival < t) ++cursor_;  // skipped blocks
    while (cursor_ < txs_.size() && txs_[cursor_].arrival == t) out.push_back(txs_[cursor_++]);
    return out;
  }

 private:
  std::vector<Transaction> txs_;
  std::size_t cursor_ = 0;
};

struct Scenario {
  /// Per-resource target capacities B_j; size() is the resource count m.
  std::vector<double> capacities{1.0};
  std::vector<Transaction> arrivals;
  /// Set for adaptive scenarios; called once per run for fresh state.
  std::function<std::unique_ptr<ArrivalSource>()> adaptive;
  std::optional<std::int64_t> horizon_hint;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t resources() const noexcept { return capacities.size(); }
  [[nodiscard]] bool is_adaptive() const noexcept { return static_cast<bool>(adaptive); }

  [[nodiscard]] std::unique_ptr<ArrivalSource> open() const {
    if (adaptive) {
      auto src = adaptive();
      if (!src) throw ScenarioError("adaptive generator returned no source");
      return src;
    }
    return std::make_unique<StaticSource>(arrivals);
  }

  void validate() const {
    if (capacities.empty()) throw InvalidInput("scenario needs at least one resource");
    for (double b : capacities) {
      if (!(b > 0.0)) throw InvalidInput("resource capacities must be positive");
    }
    for (const auto& tx : arrivals) tx.validate(resources());
  }
};

inline Scenario make_static(std::vector<Transaction> txs, std::vector<double> capacities,
                            std::uint64_t seed = 0) {
  Scenario s;
  s.capacities = std::move(capacities);
  s.arrivals = std::move(txs);
  s.seed = seed;
  return s;
}

}  // namespace feemarket
