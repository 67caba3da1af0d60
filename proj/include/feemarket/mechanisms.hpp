#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "feemarket/accounting.hpp"
#include "feemarket/adversary.hpp"
#include "feemarket/scenario.hpp"
#include "feemarket/types.hpp"

namespace feemarket {

enum class UpdateRule { Exponential, LinearApprox };

/// Parameters (B, c, eta, p_min, p_1) of an EIP-1559-style price mechanism.
struct MechanismParams {
  double B = 1.0;
  double c = 2.0;
  double eta = 0.125;
  double p_min = 1.0;
  double p_1 = 1.0;
  UpdateRule update_rule = UpdateRule::Exponential;
  /// Eligibility on the current (discounted / patience-aware) value.
  bool discounted_eligibility = false;

  [[nodiscard]] double capacity() const noexcept { return c * B; }

  void validate() const {
    if (!(B > 0.0)) throw InvalidInput("mechanism: B must be positive");
    if (!(c > 1.0)) throw InvalidInput("mechanism: c must exceed 1");
    if (!(eta > 0.0)) throw InvalidInput("mechanism: eta must be positive");
    if (!(p_min > 0.0)) throw InvalidInput("mechanism: p_min must be positive");
    if (!(p_1 >= p_min)) throw InvalidInput("mechanism: p_1 must be at least p_min");
  }

  /// Mainnet launch values: 15M gas target, 2x cap, eta = 1/8, 1 gwei start, 1 wei floor.
  static MechanismParams ethereum() {
    return {15'000'000.0, 2.0, 0.125, 1e-18, 1e-9, UpdateRule::Exponential, false};
  }
};

/// ln p_{t+1} from ln p_t and the block size Q_t.
/// Exponential: max(ln p_min, ln p_t + eta (Q_t - B) / B).
/// LinearApprox: ln max(p_min, p_t (1 + eta (Q_t - B) / B)).
inline double eip_next_price(const MechanismParams& params, double log_p, double block_size) {
  if (block_size < 0.0 || block_size > params.capacity()) {
    throw ContractViolation("eip_next_price: block size " + std::to_string(block_size) +
                            " outside [0, c*B]");
  }
  const double log_floor = std::log(params.p_min);
  const double step = params.eta * (block_size - params.B) / params.B;
  if (params.update_rule == UpdateRule::Exponential) {
    return std::max(log_floor, log_p + step);
  }
  const double factor = 1.0 + step;
  if (factor <= 0.0) return log_floor;
  return std::max(log_floor, log_p + std::log(factor));
}

/// What a price-based algorithm may learn about an executed transaction.
struct ExecutedItem {
  Size size = 0;
  double unit_value = 0.0;
  double fraction = 1.0;
};

/// An online algorithm that posts (price, capacity) for each block from the
/// executed history alone. `observe` receives the block just built.
template <class A>
concept PriceBasedAlgorithm = std::copyable<A> && requires(A a, const A ca, std::span<const ExecutedItem> items) {
  { ca.posted_log_price() } -> std::convertible_to<double>;
  { ca.posted_capacity() } -> std::convertible_to<double>;
  a.observe(items);
};

class EipAlgorithm {
 public:
  explicit EipAlgorithm(MechanismParams params) : params_(params), log_price_(std::log(params.p_1)) {
    params_.validate();
  }

  [[nodiscard]] double posted_log_price() const noexcept { return log_price_; }
  [[nodiscard]] double posted_capacity() const noexcept { return params_.capacity(); }
  [[nodiscard]] const MechanismParams& params() const noexcept { return params_; }

  void observe(std::span<const ExecutedItem> items) {
    CompensatedSum q;
    for (const auto& it : items) q += it.fraction * static_cast<double>(it.size);
    log_price_ = eip_next_price(params_, log_price_, q.value());
  }

 private:
  MechanismParams params_;
  double log_price_;
};

static_assert(PriceBasedAlgorithm<EipAlgorithm>);

struct RunResult {
  Schedule schedule;
  RunTrace trace;
  /// Arrival stream as realized during the run (adaptive scenarios included).
  std::vector<Transaction> realized;
  std::vector<double> capacities;
  nlohmann::json audit = nlohmann::json::object();

  [[nodiscard]] TxTable table() const { return TxTable(realized); }
};

enum class Eligibility {
  /// v_i >= p_t on the declared per-unit value.
  Declared,
  /// Current value v_i (1 - rho_i)^(t - t_i) >= p_t, and inside any patience window.
  TimeAware,
};

namespace detail {

struct BlockPlan {
  std::vector<std::size_t> chosen;  // indices into pending
  std::vector<double> log_price;
  std::vector<double> capacity;
};

/// Shared block loop: pulls arrivals, asks `plan` for the block, records it,
/// then hands the executed transactions to `observe`.
template <class Plan, class Observe, class Ingest>
RunResult drive(const Scenario& scenario, std::int64_t horizon, Plan&& plan, Observe&& observe,
                Ingest&& ingest) {
  if (horizon < 1) throw ContractViolation("run horizon must be at least 1");
  scenario.validate();
  const std::size_t m = scenario.resources();
  auto source = scenario.open();

  RunResult out;
  out.capacities = scenario.capacities;
  std::vector<Transaction> pending;
  std::vector<double> pending_log_value;  // ln of declared unit value
  BlockOutcome previous;
  CompensatedSum cum;

  for (std::int64_t t = 1; t <= horizon; ++t) {
    std::vector<Transaction> arrivals;
    try {
      arrivals = source->next(t, previous);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw ScenarioError(std::string("arrival generator failed at t=") + std::to_string(t) +
                          ": " + e.what());
    }
    for (auto& tx : arrivals) {
      if (tx.arrival != t) {
        throw ScenarioError("generator emitted transaction " + std::to_string(tx.id) +
                            " with arrival " + std::to_string(tx.arrival) + " at block " +
                            std::to_string(t));
      }
      tx.validate(m);
      ingest(tx);
      out.realized.push_back(tx);
      pending_log_value.push_back(tx.unit_value > 0 ? std::log(tx.unit_value)
                                                    : -std::numeric_limits<double>::infinity());
      pending.push_back(std::move(tx));
    }

    BlockPlan p = plan(t, std::as_const(pending), std::as_const(pending_log_value));
    BlockRecord rec;
    rec.t = t;
    rec.log_price = std::move(p.log_price);
    rec.capacity = std::move(p.capacity);
    rec.size.assign(m, 0.0);

    std::vector<const Transaction*> executed;
    for (std::size_t idx : p.chosen) {
      const auto& tx = pending[idx];
      executed.push_back(&tx);
      rec.executed.push_back({tx.id, 1.0});
      out.schedule.entries.push_back({tx.id, t, 1.0});
      for (std::size_t j = 0; j < m; ++j) rec.size[j] += static_cast<double>(tx.size[j]);
      cum += static_cast<double>(tx.value_units()) * tx.unit_value_at(t);
    }
    rec.cum_welfare = cum.value();
    observe(rec, std::as_const(executed));

    previous.t = t;
    previous.executed = rec.executed;
    previous.size = rec.size;
    out.trace.blocks.push_back(std::move(rec));

    // Pending order carries no meaning (every policy breaks ties by id), so
    // executed entries are swap-removed.
    std::vector<std::size_t> gone(p.chosen.begin(), p.chosen.end());
    std::sort(gone.begin(), gone.end(), std::greater<>());
    for (std::size_t idx : gone) {
      if (idx + 1 != pending.size()) {
        pending[idx] = std::move(pending.back());
        pending_log_value[idx] = pending_log_value.back();
      }
      pending.pop_back();
      pending_log_value.pop_back();
    }
  }
  out.audit = source->audit();
  return out;
}

inline bool eligible_single(const Transaction& tx, double declared_log_value, std::int64_t t,
                            double log_price, Eligibility mode) {
  const double lv = mode == Eligibility::TimeAware ? tx.log_unit_value_at(t) : declared_log_value;
  return lv >= log_price - kLogEligibilityTol;
}

}  // namespace detail

/// Runs a price-based algorithm for `horizon` blocks. Each block: post
/// (p_t, B_t), let the adversary pick a maximal subset of the pending
/// transactions with value >= p_t, then feed the block back to the algorithm.
template <PriceBasedAlgorithm Alg>
RunResult run_price_based(const Scenario& scenario, Alg alg, const InclusionPolicy& policy,
                          std::int64_t horizon, Eligibility mode = Eligibility::Declared) {
  if (scenario.resources() != 1) {
    throw ContractViolation("run_price_based needs a single-resource scenario");
  }
  return detail::drive(
      scenario, horizon,
      [&](std::int64_t t, const std::vector<Transaction>& pending, const std::vector<double>& logv) {
        detail::BlockPlan plan;
        const double lp = alg.posted_log_price();
        const double cap = alg.posted_capacity();
        plan.log_price = {lp};
        plan.capacity = {cap};
        std::vector<const Transaction*> eligible;
        std::vector<std::size_t> where;
        for (std::size_t i = 0; i < pending.size(); ++i) {
          if (detail::eligible_single(pending[i], logv[i], t, lp, mode)) {
            eligible.push_back(&pending[i]);
            where.push_back(i);
          }
        }
        const double caps[1] = {cap};
        for (std::size_t k : select_block_indices(eligible, caps, policy, t)) {
          plan.chosen.push_back(where[k]);
        }
        return plan;
      },
      [&](const BlockRecord&, const std::vector<const Transaction*>& executed) {
        std::vector<ExecutedItem> items;
        items.reserve(executed.size());
        for (const auto* tx : executed) items.push_back({tx->size[0], tx->unit_value, 1.0});
        alg.observe(items);
      },
      [](const Transaction&) {});
}

inline RunResult run_price_based(const Scenario& scenario, const MechanismParams& params,
                                 const InclusionPolicy& policy, std::int64_t horizon) {
  return run_price_based(scenario, EipAlgorithm(params), policy, horizon,
                         params.discounted_eligibility ? Eligibility::TimeAware
                                                       : Eligibility::Declared);
}

/// Rebuilds the posted log-prices of an EIP run from its executed block sizes.
inline std::vector<double> replay_eip_prices(const MechanismParams& params, const RunTrace& trace) {
  EipAlgorithm alg(params);
  std::vector<double> out;
  out.reserve(trace.blocks.size());
  for (const auto& b : trace.blocks) {
    out.push_back(alg.posted_log_price());
    // Only the block size matters to the update rule.
    const ExecutedItem item{static_cast<Size>(std::llround(b.size.at(0))), 0.0, 1.0};
    alg.observe(std::span<const ExecutedItem>(&item, 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Greedy online baseline
// ---------------------------------------------------------------------------

struct GreedyOptions {
  /// Hard per-block cap (e.g. c*B); transactions that would overflow it are skipped.
  std::optional<double> block_cap;
};

/// Schedules pending transactions by descending per-unit value (ties: earlier
/// arrival, then smaller id) until the cumulative scheduled size reaches t*B.
/// Never splits a transaction. Behind the real pool sits an unlimited supply
/// of zero-value filler: when the pool runs short, filler tops the block up
/// to the target (within the cap), counts toward the cumulative size, and is
/// left out of the recorded block. The recorded log-price of block t is ln of
/// its lowest scheduled value.
inline RunResult greedy_online(const Scenario& scenario, double B, std::int64_t horizon,
                               GreedyOptions options = {}) {
  if (scenario.resources() != 1) throw ContractViolation("greedy_online needs one resource");
  if (!(B > 0.0)) throw InvalidInput("greedy_online: B must be positive");
  CompensatedSum cumulative;  // includes filler
  double filler = 0.0;
  return detail::drive(
      scenario, horizon,
      [&](std::int64_t t, const std::vector<Transaction>& pending, const std::vector<double>&) {
        detail::BlockPlan plan;
        std::vector<double> value(pending.size());
        double smallest = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pending.size(); ++i) {
          value[i] = pending[i].unit_value_at(t);
          smallest = std::min(smallest, static_cast<double>(pending[i].size[0]));
        }
        // Max-heap on (value desc, arrival asc, id asc); popped lazily.
        const auto after = [&](std::size_t a, std::size_t b) {
          if (value[a] != value[b]) return value[a] < value[b];
          if (pending[a].arrival != pending[b].arrival) return pending[a].arrival > pending[b].arrival;
          return pending[a].id > pending[b].id;
        };
        std::vector<std::size_t> heap(pending.size());
        for (std::size_t i = 0; i < heap.size(); ++i) heap[i] = i;
        std::make_heap(heap.begin(), heap.end(), after);

        const double limit = options.block_cap ? *options.block_cap : std::numeric_limits<double>::infinity();

        const double target = static_cast<double>(t) * B;
        double scheduled = cumulative.value();
        double block = 0.0;
        double lowest = std::numeric_limits<double>::infinity();
        while (!heap.empty() && scheduled < target && block + smallest <= limit) {
          std::pop_heap(heap.begin(), heap.end(), after);
          const std::size_t idx = heap.back();
          heap.pop_back();
          const double q = static_cast<double>(pending[idx].size[0]);
          if (block + q > limit) continue;
          plan.chosen.push_back(idx);
          block += q;
          scheduled += q;
          lowest = std::min(lowest, value[idx]);
        }
        filler = std::max(0.0, std::min(target - scheduled, limit - block));
        plan.log_price = {plan.chosen.empty() ? -std::numeric_limits<double>::infinity()
                                              : std::log(lowest)};
        plan.capacity = {options.block_cap ? *options.block_cap : target - cumulative.value()};
        return plan;
      },
      [&](const BlockRecord& rec, const std::vector<const Transaction*>&) {
        cumulative += rec.size[0];
        cumulative += filler;
      },
      [B](const Transaction& tx) {
        if (static_cast<double>(tx.size[0]) > B) {
          throw InvalidInput("greedy_online: transaction " + std::to_string(tx.id) + " has size " +
                             std::to_string(tx.size[0]) + " > B = " + std::to_string(B));
        }
      });
}

// ---------------------------------------------------------------------------
// Closed-form guarantees
// ---------------------------------------------------------------------------

/// Right-hand side of the extension bound before rounding:
/// max{ ln(p_1/p_min)/eta, ln(v_max/p_min)/(eta (c'-1)) + c - 1 + (c-2)/(c'-1) } + Delta',
/// with c' = c - q_max/B.
inline double theorem_gamma_bound(const MechanismParams& params, double v_max, double q_max,
                                  double delta_prime) {
  params.validate();
  const double c_eff = params.c - q_max / params.B;
  if (!(c_eff > 1.0)) {
    throw InfeasibleParameters("extension bound needs c > 1 + q_max/B (c = " +
                               std::to_string(params.c) + ", q_max/B = " +
                               std::to_string(q_max / params.B) + ")");
  }
  if (!(v_max >= params.p_min * std::exp(params.eta) * (1.0 - 1e-12))) {
    throw InfeasibleParameters("extension bound needs v_max >= e^eta * p_min");
  }
  const double start = std::log(params.p_1 / params.p_min) / params.eta;
  const double climb = std::log(v_max / params.p_min) / (params.eta * (c_eff - 1.0)) +
                       (params.c - 1.0) + (params.c - 2.0) / (c_eff - 1.0);
  return std::max(start, climb) + delta_prime;
}

/// Smallest admissible integer extension Gamma.
inline std::int64_t theorem_gamma(const MechanismParams& params, double v_max, double q_max,
                                  std::int64_t delta_prime = 0) {
  const double x = theorem_gamma_bound(params, v_max, q_max, static_cast<double>(delta_prime));
  // Absorb float noise in the logarithms so that an exact integer bound stays put.
  return static_cast<std::int64_t>(std::ceil(x - 1e-9 * std::max(1.0, std::abs(x))));
}

/// Constant slackness of any EIP schedule: ln(v_max/p_min)/eta + (c - 1).
inline double theorem_slackness(const MechanismParams& params, double v_max) {
  params.validate();
  if (!(v_max >= params.p_min)) throw InfeasibleParameters("slackness bound needs v_max >= p_min");
  return std::log(v_max / params.p_min) / params.eta + (params.c - 1.0);
}

// ---------------------------------------------------------------------------
// Per-resource price mechanism
// ---------------------------------------------------------------------------

/// One independent EIP price per resource. A transaction is eligible when its
/// value v * units covers sum_j p_j q_j.
inline RunResult multi_resource_mechanism(const Scenario& scenario,
                                          std::span<const MechanismParams> per_resource,
                                          const InclusionPolicy& policy, std::int64_t horizon) {
  const std::size_t m = scenario.resources();
  if (per_resource.size() != m) {
    throw ContractViolation("multi_resource_mechanism: " + std::to_string(per_resource.size()) +
                            " parameter sets for " + std::to_string(m) + " resources");
  }
  std::vector<double> log_prices;
  for (const auto& p : per_resource) {
    p.validate();
    log_prices.push_back(std::log(p.p_1));
  }
  return detail::drive(
      scenario, horizon,
      [&](std::int64_t t, const std::vector<Transaction>& pending, const std::vector<double>& logv) {
        detail::BlockPlan plan;
        plan.log_price = log_prices;
        for (const auto& p : per_resource) plan.capacity.push_back(p.capacity());
        std::vector<const Transaction*> eligible;
        std::vector<std::size_t> where;
        for (std::size_t i = 0; i < pending.size(); ++i) {
          const auto& tx = pending[i];
          std::size_t nonzero = 0;
          std::size_t only = 0;
          for (std::size_t j = 0; j < m; ++j) {
            if (tx.size[j] > 0) {
              ++nonzero;
              only = j;
            }
          }
          bool ok = false;
          if (nonzero == 1) {
            // Same comparison as the single-resource runner: v >= p_j.
            ok = detail::eligible_single(tx, logv[i], t, log_prices[only], Eligibility::Declared);
          } else {
            double lmax = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < m; ++j) {
              if (tx.size[j] > 0) lmax = std::max(lmax, log_prices[j] + std::log(static_cast<double>(tx.size[j])));
            }
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
              if (tx.size[j] > 0) acc += std::exp(log_prices[j] + std::log(static_cast<double>(tx.size[j])) - lmax);
            }
            const double log_cost = lmax + std::log(acc);
            const double log_value = tx.unit_value > 0
                                         ? std::log(tx.unit_value) + std::log(static_cast<double>(tx.value_units()))
                                         : -std::numeric_limits<double>::infinity();
            ok = log_value >= log_cost - kLogEligibilityTol;
          }
          if (ok) {
            eligible.push_back(&tx);
            where.push_back(i);
          }
        }
        for (std::size_t k : select_block_indices(eligible, plan.capacity, policy, t)) {
          plan.chosen.push_back(where[k]);
        }
        return plan;
      },
      [&](const BlockRecord& rec, const std::vector<const Transaction*>&) {
        for (std::size_t j = 0; j < m; ++j) {
          log_prices[j] = eip_next_price(per_resource[j], log_prices[j], rec.size[j]);
        }
      },
      [](const Transaction&) {});
}

}  // namespace feemarket
