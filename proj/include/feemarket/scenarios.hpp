#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "feemarket/adversary.hpp"
#include "feemarket/mechanisms.hpp"
#include "feemarket/rng.hpp"
#include "feemarket/scenario.hpp"
#include "feemarket/types.hpp"

namespace feemarket {

/// A generated instance with the horizon it is meant for, the inclusion
/// policy it assumes (if any), and its closed-form figures. Adaptive
/// constructions put branch-dependent figures in the source audit instead.
struct Construction {
  Scenario scenario;
  std::int64_t horizon = 0;
  std::optional<InclusionPolicy> policy;
  nlohmann::json info = nlohmann::json::object();
};

namespace detail {

inline Transaction make_tx(TxId id, std::int64_t t, std::vector<Size> size, double v,
                           Sensitivity s = Patient{}) {
  Transaction tx;
  tx.id = id;
  tx.arrival = t;
  tx.size = std::move(size);
  tx.unit_value = v;
  tx.sensitivity = s;
  return tx;
}

inline Size to_size(double x, const char* what) {
  if (!(x >= 1.0) || x > 1e15) throw ScenarioError(std::string(what) + " must be a size >= 1");
  return static_cast<Size>(std::llround(x));
}

/// Empty blocks needed for the price to decay from p_1 to p_min.
inline std::int64_t decay_prefix(const MechanismParams& params) {
  const double gap = std::log(params.p_1 / params.p_min);
  if (gap <= 0.0) return 0;
  return static_cast<std::int64_t>(std::ceil(gap / params.eta - 1e-9));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Random family
// ---------------------------------------------------------------------------

struct RandomFamilyConfig {
  std::uint64_t seed = 0;
  std::int64_t T = 100;
  double v_lo = 2.0;
  double v_hi = 100.0;
  Size q_max = 1;
  double load_factor = 1.0;
  double B = 1.0;
  /// Used only to enforce v_lo >= e^eta * p_min.
  double eta = 0.125;
  double p_min = 1.0;
};

/// Per-block arrivals with log-uniform unit values in [v_lo, v_hi] and sizes
/// uniform in [1, q_max]. Each block draws a budget in [0, 2 load B]; sizes
/// are emitted while they fit the cumulative budget, so the expected size per
/// block is load B.
inline Scenario random_family(const RandomFamilyConfig& cfg) {
  if (cfg.v_lo < std::exp(cfg.eta) * cfg.p_min * (1.0 - 1e-12)) {
    throw InvalidInput("random_family: v_lo must be at least e^eta * p_min");
  }
  if (!(cfg.v_hi >= cfg.v_lo)) throw InvalidInput("random_family: v_hi must be >= v_lo");
  if (cfg.q_max < 1) throw InvalidInput("random_family: q_max must be >= 1");
  if (cfg.load_factor < 0.0) throw InvalidInput("random_family: load factor must be >= 0");
  if (!(cfg.B > 0.0)) throw InvalidInput("random_family: B must be positive");

  Scenario s;
  s.capacities = {cfg.B};
  s.seed = cfg.seed;
  s.horizon_hint = cfg.T;
  if (cfg.load_factor == 0.0) return s;

  auto budget_rng = SplitMix64::derive(cfg.seed, 1);
  auto size_rng = SplitMix64::derive(cfg.seed, 2);
  auto value_rng = SplitMix64::derive(cfg.seed, 3);
  double budget = 0.0;
  double emitted = 0.0;
  TxId next_id = 1;
  Size q = static_cast<Size>(size_rng.uniform_int(1, cfg.q_max));
  for (std::int64_t t = 1; t <= cfg.T; ++t) {
    budget += budget_rng.uniform(0.0, 2.0 * cfg.load_factor * cfg.B);
    while (emitted + static_cast<double>(q) <= budget) {
      s.arrivals.push_back(
          detail::make_tx(next_id++, t, {q}, value_rng.log_uniform(cfg.v_lo, cfg.v_hi)));
      emitted += static_cast<double>(q);
      q = static_cast<Size>(size_rng.uniform_int(1, cfg.q_max));
    }
  }
  return s;
}

/// Independent uniform [0,1) tips for a tip-priority adversary.
inline InclusionPolicy random_tips(std::span<const Transaction> txs, std::uint64_t seed) {
  std::map<TxId, double> tips;
  for (const auto& tx : txs) {
    tips[tx.id] = SplitMix64::derive(seed, static_cast<std::uint64_t>(tx.id)).uniform01();
  }
  return InclusionPolicy::tip_priority(std::move(tips));
}

// ---------------------------------------------------------------------------
// EIP-specific static constructions
// ---------------------------------------------------------------------------

/// With c = 2: once the price sits at p_min, each block offers one high
/// transaction (size B, value 10 p_min) and low demand of size (1+eps)B at
/// value 2 p_min that the builder prefers. The low transaction fits, the high
/// one then does not, and the price creeps up by eta*eps per block.
inline Construction eip_c2_failure(const MechanismParams& params, double eps,
                                   std::int64_t horizon) {
  params.validate();
  if (params.c != 2.0) throw InvalidInput("eip_c2_failure needs c = 2");
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("eip_c2_failure: eps must lie in (0,1)");
  const Size big = detail::to_size(params.B, "B");
  const Size low = detail::to_size((1.0 + eps) * params.B, "(1+eps)B");
  if (low <= big) throw ScenarioError("eip_c2_failure: (1+eps)B rounds to B; raise B or eps");
  const std::int64_t prefix = detail::decay_prefix(params);

  Construction c;
  c.scenario.capacities = {params.B};
  c.horizon = horizon;
  std::map<TxId, double> tips;
  TxId id = 1;
  for (std::int64_t t = prefix + 1; t <= horizon; ++t) {
    c.scenario.arrivals.push_back(detail::make_tx(id, t, {big}, 10.0 * params.p_min));
    tips[id++] = 0.0;
    c.scenario.arrivals.push_back(detail::make_tx(id, t, {low}, 2.0 * params.p_min));
    tips[id++] = 1.0;
  }
  c.policy = InclusionPolicy::tip_priority(std::move(tips));
  const double eps_eff = (static_cast<double>(low) - params.B) / params.B;
  const double climb = std::log(2.0) / (eps_eff * params.eta);
  c.info = {{"construction", "eip_c2_failure"},
            {"prefix", prefix},
            {"eps_effective", eps_eff},
            {"climb_blocks_expected", climb},
            {"T_star", climb / 2.0},
            {"opt_welfare_per_block", 10.0 * params.p_min * params.B}};
  return c;
}

/// Closed-form OPT_B of eip_c2_failure over [1,T].
inline double eip_c2_failure_opt(const MechanismParams& params, std::int64_t T) {
  const auto live = std::max<std::int64_t>(0, T - detail::decay_prefix(params));
  return static_cast<double>(live) * 10.0 * params.p_min * params.B;
}

/// Unbounded demand at value H and builder-preferred unbounded demand at
/// value L, both enough to fill c*B every block.
inline Construction log_range(const MechanismParams& params, double H, double L,
                              std::int64_t horizon) {
  params.validate();
  if (!(H > L && L > params.p_min)) throw InvalidInput("log_range needs H > L > p_min");
  const double cap = params.capacity();
  const bool whole = std::abs(params.c - std::round(params.c)) < 1e-12;
  const Size q = whole ? detail::to_size(params.B, "B") : 1;
  const auto per_block = static_cast<std::int64_t>(std::ceil(cap / static_cast<double>(q) - 1e-9));
  const std::int64_t prefix = detail::decay_prefix(params);

  Construction c;
  c.scenario.capacities = {params.B};
  c.horizon = horizon;
  std::map<TxId, double> tips;
  TxId id = 1;
  for (std::int64_t t = prefix + 1; t <= horizon; ++t) {
    for (std::int64_t k = 0; k < per_block; ++k) {
      c.scenario.arrivals.push_back(detail::make_tx(id, t, {q}, L));
      tips[id++] = 1.0;
      c.scenario.arrivals.push_back(detail::make_tx(id, t, {q}, H));
      tips[id++] = 0.0;
    }
  }
  c.policy = InclusionPolicy::tip_priority(std::move(tips));
  c.info = {{"construction", "log_range"},
            {"prefix", prefix},
            {"climb_blocks_expected", std::log(L / params.p_min) / ((params.c - 1.0) * params.eta)},
            {"per_unit_ratio", L / H}};
  return c;
}


// ---------------------------------------------------------------------------
// Adaptive constructions
// ---------------------------------------------------------------------------

namespace detail {

/// Base for sources that branch once on a count taken over the first blocks.
class BranchingSource : public ArrivalSource {
 protected:
  TxId next_id_ = 1;
  std::set<TxId> watched_;
  double watched_executed_ = 0.0;
  std::optional<bool> case_one_;

  void tally(const BlockOutcome& previous, std::int64_t last_counted_block) {
    if (previous.t < 1 || previous.t > last_counted_block) return;
    for (const auto& e : previous.executed) {
      if (watched_.count(e.id)) watched_executed_ += e.fraction;
    }
  }
  Transaction emit(std::int64_t t, std::vector<Size> size, double v, Sensitivity s = Patient{}) {
    return make_tx(next_id_++, t, std::move(size), v, s);
  }
  [[nodiscard]] std::string branch_name() const {
    if (!case_one_) return "undecided";
    return *case_one_ ? "I" : "II";
  }
};

}  // namespace detail

struct CBelowTwoConfig {
  std::int64_t T = 4000;
  double c = 1.5;
  Size B = 6400;
  double eps = 0.01;
  /// Dust size is B / gamma_divisor.
  Size gamma_divisor = 64;
};

/// First T/2 blocks: one red (size B, value 1 per unit) and one green
/// (size (c/2+eps)B, total value 2B) per block. After block T/2 the source
/// counts executed greens G. G <= T/4 starts Case I: one size-B transaction of
/// value 2 per unit each block. Otherwise Case II: ceil(cB/gamma) dust
/// transactions of size gamma and value 1 per unit each block.
class CBelowTwoSource final : public detail::BranchingSource {
 public:
  explicit CBelowTwoSource(const CBelowTwoConfig& cfg) : cfg_(cfg) {
    green_ = static_cast<Size>(std::llround((cfg.c / 2.0 + cfg.eps) * static_cast<double>(cfg.B)));
    gamma_ = std::max<Size>(1, cfg.B / cfg.gamma_divisor);
    dust_per_block_ = static_cast<std::int64_t>(
        std::ceil(cfg.c * static_cast<double>(cfg.B) / static_cast<double>(gamma_) - 1e-9));
  }

  std::vector<Transaction> next(std::int64_t t, const BlockOutcome& previous) override {
    const std::int64_t half = cfg_.T / 2;
    tally(previous, half);
    std::vector<Transaction> out;
    const double B = static_cast<double>(cfg_.B);
    if (t <= half) {
      out.push_back(emit(t, {cfg_.B}, 1.0));
      out.push_back(emit(t, {green_}, 2.0 * B / static_cast<double>(green_)));
      watched_.insert(out.back().id);
    } else if (t <= cfg_.T) {
      if (!case_one_) case_one_ = watched_executed_ <= static_cast<double>(cfg_.T) / 4.0;
      if (*case_one_) {
        out.push_back(emit(t, {cfg_.B}, 2.0));
      } else {
        for (std::int64_t k = 0; k < dust_per_block_; ++k) out.push_back(emit(t, {gamma_}, 1.0));
      }
    }
    return out;
  }

  [[nodiscard]] double opt_welfare() const {
    const double B = static_cast<double>(cfg_.B);
    const double half = static_cast<double>(cfg_.T / 2);
    if (!case_one_) return std::numeric_limits<double>::quiet_NaN();
    if (*case_one_) return 2.0 * static_cast<double>(cfg_.T) * B;
    // Reds first, then each green shares its block with dust filling B - green.
    const double fill = static_cast<double>((cfg_.B - green_) / gamma_ * gamma_);
    return half * B + half * (2.0 * B + fill);
  }

  [[nodiscard]] nlohmann::json audit() const override {
    const double B = static_cast<double>(cfg_.B);
    nlohmann::json j = {{"construction", "c_below_two"},
                        {"T", cfg_.T},
                        {"c", cfg_.c},
                        {"green_size", green_},
                        {"dust_size", gamma_},
                        {"greens_executed", watched_executed_},
                        {"case_one_predicate", watched_executed_ <= static_cast<double>(cfg_.T) / 4.0},
                        {"branch", branch_name()}};
    if (case_one_) {
      j["opt_welfare"] = opt_welfare();
      j["claimed_opt_welfare"] = (*case_one_ ? 2.0 : 1.5) * static_cast<double>(cfg_.T) * B;
    }
    return j;
  }

 private:
  CBelowTwoConfig cfg_;
  Size green_ = 0;
  Size gamma_ = 1;
  std::int64_t dust_per_block_ = 0;
};

inline Construction c_below_two(const CBelowTwoConfig& cfg) {
  if (!(cfg.c > 1.0 && cfg.c < 2.0)) throw InvalidInput("c_below_two needs 1 < c < 2");
  if (cfg.T < 2 || cfg.T % 2 != 0) throw InvalidInput("c_below_two needs an even T >= 2");
  if (!(cfg.eps > 0.0) || cfg.c / 2.0 + cfg.eps >= 1.0) {
    throw InvalidInput("c_below_two needs 0 < eps < 1 - c/2");
  }
  if (cfg.B < 2 || cfg.gamma_divisor < 1) throw InvalidInput("c_below_two: bad B or dust divisor");
  const auto green = std::llround((cfg.c / 2.0 + cfg.eps) * static_cast<double>(cfg.B));
  if (static_cast<double>(green) + static_cast<double>(cfg.B) <= cfg.c * static_cast<double>(cfg.B)) {
    throw InvalidInput("c_below_two: a red and a green must not share a c*B block");
  }
  Construction out;
  out.scenario.capacities = {static_cast<double>(cfg.B)};
  out.scenario.horizon_hint = cfg.T;
  out.scenario.adaptive = [cfg] { return std::make_unique<CBelowTwoSource>(cfg); };
  out.horizon = cfg.T;
  out.info = {{"construction", "c_below_two"},
              {"claimed_loss_floor", std::min(1.0 / 8.0, (2.0 - cfg.c) / 3.0)}};
  return out;
}

struct DiscountMixConfig {
  double rho = 0.01;
  Size B = 1;
  std::int64_t K = 4;
  std::int64_t gamma = 0;
  std::int64_t delta = 0;
};

/// Smallest multiple of 6 with (1-rho)^(T/3) <= 1/2 and T >= K (Gamma + Delta).
inline std::int64_t discount_mix_horizon(const DiscountMixConfig& cfg) {
  if (!(cfg.rho > 0.0 && cfg.rho < 1.0)) throw InvalidInput("discount_mix needs 0 < rho < 1");
  const double third = std::log(0.5) / std::log1p(-cfg.rho);
  auto T = static_cast<std::int64_t>(std::ceil(3.0 * third - 1e-9));
  T = std::max(T, cfg.K * (cfg.gamma + cfg.delta));
  T = std::max<std::int64_t>(T, 6);
  return (T + 5) / 6 * 6;
}

/// p = T/3. Block 1 brings p patient transactions of value 2; blocks 1..p
/// each bring one hasty transaction of value 1 discounting at rho. If at
/// least p/2 hasty ones ran by block p (Case I), block p+1 brings 2p more
/// patient value-2 transactions. Otherwise (Case II) blocks p+1..2p each
/// bring one fresh value-2 transaction discounting at rho.
class DiscountMixSource final : public detail::BranchingSource {
 public:
  DiscountMixSource(const DiscountMixConfig& cfg, std::int64_t T) : cfg_(cfg), p_(T / 3) {}

  std::vector<Transaction> next(std::int64_t t, const BlockOutcome& previous) override {
    tally(previous, p_);
    std::vector<Transaction> out;
    if (t == 1) {
      for (std::int64_t k = 0; k < p_; ++k) out.push_back(emit(t, {cfg_.B}, 2.0));
    }
    if (t <= p_) {
      out.push_back(emit(t, {cfg_.B}, 1.0, Discount{cfg_.rho}));
      watched_.insert(out.back().id);
      return out;
    }
    if (!case_one_) case_one_ = watched_executed_ >= static_cast<double>(p_) / 2.0;
    if (*case_one_ && t == p_ + 1) {
      for (std::int64_t k = 0; k < 2 * p_; ++k) out.push_back(emit(t, {cfg_.B}, 2.0));
    } else if (!*case_one_ && t <= 2 * p_) {
      out.push_back(emit(t, {cfg_.B}, 2.0, Discount{cfg_.rho}));
    }
    return out;
  }

  [[nodiscard]] double opt_welfare() const {
    if (!case_one_) return std::numeric_limits<double>::quiet_NaN();
    return (*case_one_ ? 6.0 : 5.0) * static_cast<double>(p_) * static_cast<double>(cfg_.B);
  }

  [[nodiscard]] nlohmann::json audit() const override {
    nlohmann::json j = {{"construction", "discount_mix"},
                        {"p", p_},
                        {"T", 3 * p_},
                        {"hasty_executed", watched_executed_},
                        {"case_one_predicate", watched_executed_ >= static_cast<double>(p_) / 2.0},
                        {"branch", branch_name()}};
    if (case_one_) j["opt_welfare"] = opt_welfare();
    return j;
  }

 private:
  DiscountMixConfig cfg_;
  std::int64_t p_;
};

inline Construction discount_mix(const DiscountMixConfig& cfg) {
  if (cfg.K < 1 || cfg.gamma < 0 || cfg.delta < 0) throw InvalidInput("discount_mix: bad K, Gamma or Delta");
  const std::int64_t T = discount_mix_horizon(cfg);
  Construction out;
  out.scenario.capacities = {static_cast<double>(cfg.B)};
  out.scenario.horizon_hint = T;
  out.scenario.adaptive = [cfg, T] { return std::make_unique<DiscountMixSource>(cfg, T); };
  out.horizon = T;
  out.info = {{"construction", "discount_mix"}, {"p", T / 3}, {"claimed_loss_floor", 1.0 / 20.0}};
  return out;
}

/// Global patience p, T = 2p. Block 1 brings p green transactions (value 1);
/// blocks 1..p-1 one red (value 2) each. If at least p/2 reds ran by block p
/// (Case I) nothing else arrives; otherwise (Case II) block p+1 brings p new
/// value-2 transactions.
class PatienceGlobalSource final : public detail::BranchingSource {
 public:
  PatienceGlobalSource(std::int64_t p, Size B) : p_(p), B_(B) {}

  std::vector<Transaction> next(std::int64_t t, const BlockOutcome& previous) override {
    tally(previous, p_);
    std::vector<Transaction> out;
    const Sensitivity s = Patience{p_};
    if (t == 1) {
      for (std::int64_t k = 0; k < p_; ++k) out.push_back(emit(t, {B_}, 1.0, s));
    }
    if (t <= p_ - 1) {
      out.push_back(emit(t, {B_}, 2.0, s));
      watched_.insert(out.back().id);
    }
    if (t == p_ + 1) {
      case_one_ = watched_executed_ >= static_cast<double>(p_) / 2.0;
      if (!*case_one_) {
        for (std::int64_t k = 0; k < p_; ++k) out.push_back(emit(t, {B_}, 2.0, s));
      }
    }
    return out;
  }

  [[nodiscard]] double opt_welfare() const {
    if (!case_one_) return std::numeric_limits<double>::quiet_NaN();
    const double p = static_cast<double>(p_);
    return (*case_one_ ? 3.0 * p - 2.0 : 4.0 * p - 1.0) * static_cast<double>(B_);
  }

  [[nodiscard]] nlohmann::json audit() const override {
    nlohmann::json j = {{"construction", "patience_global"},
                        {"p", p_},
                        {"T", 2 * p_},
                        {"reds_executed", watched_executed_},
                        {"case_one_predicate", watched_executed_ >= static_cast<double>(p_) / 2.0},
                        {"branch", branch_name()}};
    if (case_one_) {
      j["opt_welfare"] = opt_welfare();
      if (!*case_one_) j["claimed_opt_welfare"] = 4.0 * static_cast<double>(p_ * static_cast<std::int64_t>(B_));
    }
    return j;
  }

 private:
  std::int64_t p_;
  Size B_;
};

inline Construction patience_global(std::int64_t p, Size B = 1) {
  if (p < 2) throw InvalidInput("patience_global needs p >= 2");
  if (B < 1) throw InvalidInput("patience_global needs B >= 1");
  Construction out;
  out.scenario.capacities = {static_cast<double>(B)};
  out.scenario.horizon_hint = 2 * p;
  out.scenario.adaptive = [p, B] { return std::make_unique<PatienceGlobalSource>(p, B); };
  out.horizon = 2 * p;
  out.info = {{"construction", "patience_global"}, {"p", p}, {"claimed_loss_floor", 0.1}};
  return out;
}

/// Resources (X, Y, Z), all with capacity B. Block 1 brings t bundles {X,Z}
/// and t bundles {Y,Z} of value 1 per unit. Block t+1 brings t singletons of
/// whichever of X/Y had fewer bundles executed (ties pick X).
class ThreeResourcesSource final : public ArrivalSource {
 public:
  ThreeResourcesSource(std::int64_t t, Size B) : t_(t), B_(B) {}

  std::vector<Transaction> next(std::int64_t t, const BlockOutcome& previous) override {
    if (previous.t >= 1 && previous.t <= t_) {
      for (const auto& e : previous.executed) {
        if (e.id <= t_) {
          xz_ += e.fraction;
        } else if (e.id <= 2 * t_) {
          yz_ += e.fraction;
        }
      }
    }
    std::vector<Transaction> out;
    if (t == 1) {
      for (std::int64_t k = 0; k < t_; ++k) out.push_back(detail::make_tx(next_id_++, t, {B_, 0, B_}, 1.0));
      for (std::int64_t k = 0; k < t_; ++k) out.push_back(detail::make_tx(next_id_++, t, {0, B_, B_}, 1.0));
    }
    if (t == t_ + 1) {
      singleton_x_ = xz_ <= yz_;
      for (std::int64_t k = 0; k < t_; ++k) {
        out.push_back(detail::make_tx(next_id_++, t, *singleton_x_ ? std::vector<Size>{B_, 0, 0}
                                                                    : std::vector<Size>{0, B_, 0},
                                      1.0));
      }
    }
    return out;
  }

  [[nodiscard]] double opt_welfare() const { return 3.0 * static_cast<double>(t_) * static_cast<double>(B_); }

  [[nodiscard]] nlohmann::json audit() const override {
    nlohmann::json j = {{"construction", "three_resources"},
                        {"t", t_},
                        {"xz_executed", xz_},
                        {"yz_executed", yz_},
                        {"opt_welfare", opt_welfare()}};
    j["singleton"] = singleton_x_ ? (*singleton_x_ ? "X" : "Y") : "undecided";
    return j;
  }

 private:
  std::int64_t t_;
  Size B_;
  TxId next_id_ = 1;
  double xz_ = 0.0;
  double yz_ = 0.0;
  std::optional<bool> singleton_x_;
};

inline Construction three_resources(std::int64_t t, Size B = 1) {
  if (t < 1) throw InvalidInput("three_resources needs t >= 1");
  if (B < 1) throw InvalidInput("three_resources needs B >= 1");
  Construction out;
  const double b = static_cast<double>(B);
  out.scenario.capacities = {b, b, b};
  out.scenario.horizon_hint = 2 * t;
  out.scenario.adaptive = [t, B] { return std::make_unique<ThreeResourcesSource>(t, B); };
  out.horizon = 2 * t;
  out.info = {{"construction", "three_resources"},
              {"opt_welfare", 3.0 * static_cast<double>(t) * b},
              {"claimed_ratio_ceiling", 5.0 / 6.0}};
  return out;
}

// ---------------------------------------------------------------------------
// Price-transcript adversary
// ---------------------------------------------------------------------------

struct PriceAdversaryResult {
  bool found = false;
  /// Two scenario indices with identical executed histories, m < m_prime.
  std::int64_t m = -1;
  std::int64_t m_prime = -1;
  std::int64_t T = 0;
  std::int64_t R = 0;
  std::int64_t supply = 0;  // transactions per value level
  double log_r = 0.0;
  /// Per block, (level, count) executed in the shared history.
  std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>> transcript;
  /// SW(alg on m', [1,R]) / OPT_B(m', [1,T]).
  double fraction = 0.0;
  double bound = 0.0;  // 2/r
  bool pass = false;
  std::int64_t nodes = 0;
};

/// Scenario m: at block 1, `supply` transactions of size B at each value r^i, i = 0..m.
inline Scenario level_scenario(std::int64_t m, std::int64_t supply, Size B, double log_r) {
  Scenario s;
  s.capacities = {static_cast<double>(B)};
  TxId id = 1;
  for (std::int64_t i = 0; i <= m; ++i) {
    const double v = std::exp(static_cast<double>(i) * log_r);
    for (std::int64_t k = 0; k < supply; ++k) s.arrivals.push_back(detail::make_tx(id++, 1, {B}, v));
  }
  return s;
}

/// Simulates the algorithm against all scenarios m = 0..2^R at once, where
/// R = T + Gamma and T = Gamma + Delta. The builder answers each posted price
/// with the lowest-value eligible transactions, so scenarios only diverge
/// when a block reaches a level some of them lack. Depth-first search over
/// groups of scenarios that still share a history finds two that share all
/// R blocks; the algorithm then earns at most about 1/r of OPT on the larger.
template <PriceBasedAlgorithm Alg>
PriceAdversaryResult adaptive_price_adversary(const Alg& alg, std::int64_t gamma, std::int64_t delta,
                                              double log_H, Size B = 1) {
  if (gamma < 0 || delta < 0 || gamma + delta < 1) {
    throw InvalidInput("adaptive_price_adversary needs Gamma, Delta >= 0 and Gamma + Delta >= 1");
  }
  PriceAdversaryResult res;
  res.T = gamma + delta;
  res.R = res.T + gamma;
  if (res.R > 60) throw TooLarge("adaptive_price_adversary: R = T + Gamma exceeds 60");
  if (res.T > 500) throw TooLarge("adaptive_price_adversary: 4^(Gamma+Delta) overflows");
  res.log_r = log_H / std::pow(4.0, static_cast<double>(res.T));
  if (!(res.log_r >= std::log(2.0) * (1.0 - 1e-12))) {
    throw InfeasibleParameters("adaptive_price_adversary: H too small for r = H^(4^-(Gamma+Delta)) >= 2");
  }
  res.supply = res.R + delta;
  res.bound = 2.0 * std::exp(-res.log_r);
  const std::int64_t top = std::int64_t{1} << res.R;
  const double b = static_cast<double>(B);

  using Block = std::vector<std::pair<std::int64_t, std::int64_t>>;
  struct Node {
    Alg alg;
    std::int64_t lo;
    std::int64_t hi;
    std::map<std::int64_t, std::int64_t> used;
    std::vector<Block> history;
  };

  auto dfs = [&](auto&& self, Node node, std::int64_t t) -> bool {
    ++res.nodes;
    if (t > res.R) {
      res.found = true;
      res.m = node.lo;
      res.m_prime = node.hi;
      res.transcript = std::move(node.history);
      return true;
    }
    const double lp = node.alg.posted_log_price();
    auto units = static_cast<std::int64_t>(std::floor(node.alg.posted_capacity() / b + 1e-9));
    const auto i0 = std::max<std::int64_t>(
        0, static_cast<std::int64_t>(std::ceil((lp - kLogEligibilityTol) / res.log_r)));
    // Lowest-first fill for a scenario that has every level up to hi.
    Block fill;
    std::int64_t iend = node.hi + 1;
    for (std::int64_t i = i0; i <= node.hi && units > 0; ++i) {
      auto it = node.used.find(i);
      const std::int64_t avail = res.supply - (it == node.used.end() ? 0 : it->second);
      const std::int64_t take = std::min(avail, units);
      if (take > 0) fill.emplace_back(i, take);
      units -= take;
      if (units == 0) iend = i;
    }

    struct Child {
      std::int64_t lo, hi;
      bool full;
    };
    std::vector<Child> children;
    if (i0 > node.lo) children.push_back({node.lo, std::min(node.hi, i0 - 1), false});
    if (iend <= node.hi) children.push_back({std::max(node.lo, iend), node.hi, true});
    std::erase_if(children, [](const Child& c) { return c.hi - c.lo < 1; });
    std::sort(children.begin(), children.end(),
              [](const Child& a, const Child& b2) { return a.hi - a.lo > b2.hi - b2.lo; });

    for (const auto& c : children) {
      Node next{node.alg, c.lo, c.hi, node.used, node.history};
      std::vector<ExecutedItem> items;
      Block block;
      if (c.full) {
        block = fill;
        for (const auto& [level, count] : fill) {
          next.used[level] += count;
          const double v = std::exp(static_cast<double>(level) * res.log_r);
          for (std::int64_t k = 0; k < count; ++k) items.push_back({B, v, 1.0});
        }
      }
      next.alg.observe(items);
      next.history.push_back(std::move(block));
      if (self(self, std::move(next), t + 1)) return true;
    }
    return false;
  };
  dfs(dfs, Node{alg, 0, top, {}, {}}, 1);

  if (res.found) {
    CompensatedSum frac;
    for (const auto& block : res.transcript) {
      for (const auto& [level, count] : block) {
        frac += static_cast<double>(count) * std::exp(static_cast<double>(level - res.m_prime) * res.log_r);
      }
    }
    res.fraction = frac.value() / static_cast<double>(res.T);
    res.pass = res.fraction <= res.bound * (1.0 + kTheoremRelTol);
  }
  return res;
}

}  // namespace feemarket
