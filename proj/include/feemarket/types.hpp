#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace feemarket {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A schedule entry is inconsistent with the transactions it references.
class InvalidSchedule : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition (e.g. Q_t above the block cap).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class InfeasibleParameters : public Error {
 public:
  using Error::Error;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

/// Instance too large for an exact solver's guards.
class TooLarge : public Error {
 public:
  using Error::Error;
};

class ScenarioError : public Error {
 public:
  using Error::Error;
};

/// Malformed external input (files, configs, transactions at ingestion).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class PreconditionFailed : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Numerics
// ---------------------------------------------------------------------------

/// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Absolute tolerance on ln-values for price eligibility (inclusive).
inline constexpr double kLogEligibilityTol = 1e-12;
/// Relative slack for theorem inequalities.
inline constexpr double kTheoremRelTol = 1e-9;
/// Slack on per-transaction fraction sums.
inline constexpr double kFractionTol = 1e-9;

// ---------------------------------------------------------------------------
// Transactions
// ---------------------------------------------------------------------------

using TxId = std::int64_t;
using Size = std::uint64_t;

struct Patient {
  friend bool operator==(const Patient&, const Patient&) = default;
};

/// Value decays by (1 - rho) per block after arrival.
struct Discount {
  double rho = 0.0;
  friend bool operator==(const Discount&, const Discount&) = default;
};

/// Full value while t <= arrival + window, zero afterwards.
struct Patience {
  std::int64_t window = 0;
  friend bool operator==(const Patience&, const Patience&) = default;
};

using Sensitivity = std::variant<Patient, Discount, Patience>;

inline bool is_patient(const Sensitivity& s) noexcept {
  return std::holds_alternative<Patient>(s);
}

struct Transaction {
  TxId id = 0;
  std::int64_t arrival = 1;
  std::vector<Size> size{1};
  double unit_value = 0.0;
  Sensitivity sensitivity = Patient{};

  [[nodiscard]] std::size_t resources() const noexcept { return size.size(); }

  /// Size units that carry value. For one resource this is q_i; for bundles
  /// it is the largest component, so {X,Z} and {X} bundles of one unit each
  /// are worth one unit at their per-unit value.
  [[nodiscard]] Size value_units() const noexcept {
    return size.empty() ? 0 : *std::max_element(size.begin(), size.end());
  }

  /// Per-unit value if executed at block t (t >= arrival).
  [[nodiscard]] double unit_value_at(std::int64_t t) const {
    return std::visit(
        [&](const auto& s) -> double {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Patient>) {
            return unit_value;
          } else if constexpr (std::is_same_v<S, Discount>) {
            return unit_value * std::pow(1.0 - s.rho, static_cast<double>(t - arrival));
          } else {
            return t <= arrival + s.window ? unit_value : 0.0;
          }
        },
        sensitivity);
  }

  /// ln of unit_value_at(t); -inf when the value is zero.
  [[nodiscard]] double log_unit_value_at(std::int64_t t) const {
    return std::visit(
        [&](const auto& s) -> double {
          using S = std::decay_t<decltype(s)>;
          const double base = unit_value > 0 ? std::log(unit_value)
                                             : -std::numeric_limits<double>::infinity();
          if constexpr (std::is_same_v<S, Patient>) {
            return base;
          } else if constexpr (std::is_same_v<S, Discount>) {
            return base + static_cast<double>(t - arrival) * std::log1p(-s.rho);
          } else {
            return t <= arrival + s.window ? base : -std::numeric_limits<double>::infinity();
          }
        },
        sensitivity);
  }

  /// Throws InvalidInput when the transaction breaks its invariants.
  void validate(std::size_t expected_resources) const {
    const std::string where = "transaction " + std::to_string(id);
    if (size.size() != expected_resources) {
      throw InvalidInput(where + ": size vector has " + std::to_string(size.size()) +
                         " entries, expected " + std::to_string(expected_resources));
    }
    if (std::none_of(size.begin(), size.end(), [](Size q) { return q > 0; })) {
      throw InvalidInput(where + ": size has no positive entry");
    }
    if (!(unit_value >= 0.0) || !std::isfinite(unit_value)) {
      throw InvalidInput(where + ": unit value must be finite and nonnegative");
    }
    if (arrival < 1) throw InvalidInput(where + ": arrival must be >= 1");
    if (const auto* d = std::get_if<Discount>(&sensitivity); d && !(d->rho >= 0.0 && d->rho < 1.0)) {
      throw InvalidInput(where + ": discount rho must lie in [0,1)");
    }
    if (const auto* p = std::get_if<Patience>(&sensitivity); p && p->window < 0) {
      throw InvalidInput(where + ": patience must be nonnegative");
    }
  }
};

/// id -> transaction lookup.
class TxTable {
 public:
  TxTable() = default;
  explicit TxTable(std::span<const Transaction> txs) {
    by_id_.reserve(txs.size());
    for (const auto& tx : txs) {
      if (!by_id_.emplace(tx.id, tx).second) {
        throw InvalidInput("duplicate transaction id " + std::to_string(tx.id));
      }
    }
  }

  [[nodiscard]] const Transaction& at(TxId id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) {
      throw InvalidSchedule("schedule references unknown transaction id " + std::to_string(id));
    }
    return it->second;
  }
  [[nodiscard]] bool contains(TxId id) const { return by_id_.count(id) != 0; }
  [[nodiscard]] std::size_t size() const noexcept { return by_id_.size(); }

 private:
  std::unordered_map<TxId, Transaction> by_id_;
};

// ---------------------------------------------------------------------------
// Schedules and traces
// ---------------------------------------------------------------------------

struct ScheduleEntry {
  TxId id = 0;
  std::int64_t t = 1;
  double fraction = 1.0;
  friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

struct Schedule {
  std::vector<ScheduleEntry> entries;
  bool integral = true;

  [[nodiscard]] bool empty() const noexcept { return entries.empty(); }
  [[nodiscard]] std::int64_t last_block() const noexcept {
    std::int64_t last = 0;
    for (const auto& e : entries) last = std::max(last, e.t);
    return last;
  }
  friend bool operator==(const Schedule&, const Schedule&) = default;
};

struct Executed {
  TxId id = 0;
  double fraction = 1.0;
  friend bool operator==(const Executed&, const Executed&) = default;
};

struct BlockRecord {
  std::int64_t t = 1;
  /// ln p_t per resource; -inf when the block posted no price.
  std::vector<double> log_price;
  /// Posted capacity B_t per resource.
  std::vector<double> capacity;
  std::vector<Executed> executed;
  /// Block size Q_t per resource.
  std::vector<double> size;
  double cum_welfare = 0.0;
  friend bool operator==(const BlockRecord&, const BlockRecord&) = default;
};

struct RunTrace {
  std::vector<BlockRecord> blocks;

  /// Q_t of resource j for t = 1..blocks.size().
  [[nodiscard]] std::vector<double> sizes(std::size_t resource = 0) const {
    std::vector<double> out;
    out.reserve(blocks.size());
    for (const auto& b : blocks) out.push_back(b.size.at(resource));
    return out;
  }
  [[nodiscard]] std::vector<double> log_prices(std::size_t resource = 0) const {
    std::vector<double> out;
    out.reserve(blocks.size());
    for (const auto& b : blocks) out.push_back(b.log_price.at(resource));
    return out;
  }
  friend bool operator==(const RunTrace&, const RunTrace&) = default;
};

}  // namespace feemarket
