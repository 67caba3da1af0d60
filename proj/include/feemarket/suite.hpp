#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "feemarket/accounting.hpp"
#include "feemarket/benchmarks.hpp"
#include "feemarket/mechanisms.hpp"
#include "feemarket/scenarios.hpp"

namespace feemarket::suite {

/// One CSV row. `suite` names the suite and check, `metric` is the measured
/// number and `bound` the number it is compared against.
struct Row {
  std::string suite;
  std::uint64_t seed = 0;
  double metric = 0.0;
  double bound = 0.0;
  bool pass = false;
};

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline void write_csv(std::ostream& os, const std::vector<Row>& rows) {
  os << "suite,seed,metric,bound,pass\n";
  for (const auto& r : rows) {
    os << r.suite << ',' << r.seed << ',' << format_number(r.metric) << ',' << format_number(r.bound)
       << ',' << (r.pass ? "true" : "false") << '\n';
  }
}

/// Worker count: FEEMARKET_THREADS if set and positive, else the hardware count.
inline unsigned thread_count() {
  if (const char* env = std::getenv("FEEMARKET_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs job(i) for i in [0,n) across threads; results keep index order.
template <class F>
auto parallel_map(std::size_t n, F&& job) -> std::vector<decltype(job(std::size_t{0}))> {
  using R = decltype(job(std::size_t{0}));
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned k = static_cast<unsigned>(std::min<std::size_t>(thread_count(), std::max<std::size_t>(n, 1)));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < k; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shared trace checks
// ---------------------------------------------------------------------------

inline double max_unit_value(std::span<const Transaction> txs) {
  double v = 0.0;
  for (const auto& tx : txs) v = std::max(v, tx.unit_value);
  return v;
}

/// Largest ln p_t - (ln v_max + eta (c-1)) over blocks after the first nonempty one.
inline double price_excess(const RunTrace& trace, double v_max, const MechanismParams& p,
                           std::size_t resource = 0) {
  const double cap = std::log(v_max) + p.eta * (p.c - 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  bool seen = false;
  for (const auto& b : trace.blocks) {
    if (seen) worst = std::max(worst, b.log_price[resource] - cap);
    if (b.size[resource] > 0.0) seen = true;
  }
  return worst;
}

inline AvgSizeReport eip_slackness_report(const RunTrace& trace, const MechanismParams& p, double v_max,
                                          std::size_t resource = 0) {
  const auto sizes = trace.sizes(resource);
  AvgSizeReport report;
  check_avg_block_size_series(sizes, p.B, constant_slack(theorem_slackness(p, v_max)), resource, report);
  return report;
}

// ---------------------------------------------------------------------------
// Theorem suite
// ---------------------------------------------------------------------------

struct TheoremConfig {
  std::int64_t T = 500;
  double B = 100.0;
  Size q_max = 100;
  double c = 3.0;
  double eta = 0.125;
  double p_min = 1.0;
  double p_1 = 100.0;
  double v_hi_over_p_min = 1e6;
  std::vector<double> loads{0.5, 1.0, 2.0, 5.0};
};

struct TheoremInstance {
  Scenario scenario;
  MechanismParams params;
  std::int64_t gamma = 0;
  double v_max = 0.0;
};

inline TheoremInstance theorem_instance(const TheoremConfig& cfg, std::uint64_t seed) {
  TheoremInstance inst;
  inst.params = {cfg.B, cfg.c, cfg.eta, cfg.p_min, cfg.p_1};
  RandomFamilyConfig rf;
  rf.seed = seed;
  rf.T = cfg.T;
  rf.B = cfg.B;
  rf.q_max = cfg.q_max;
  rf.eta = cfg.eta;
  rf.p_min = cfg.p_min;
  rf.v_lo = std::exp(cfg.eta) * cfg.p_min;
  rf.v_hi = cfg.v_hi_over_p_min * cfg.p_min;
  rf.load_factor = cfg.loads[seed % cfg.loads.size()];
  inst.scenario = random_family(rf);
  inst.v_max = rf.v_hi;
  inst.gamma = theorem_gamma(inst.params, inst.v_max, static_cast<double>(cfg.q_max));
  return inst;
}

/// Per-policy outcome of one theorem instance.
struct TheoremOutcome {
  std::string policy;
  WelfareReport welfare;
  ThresholdReport threshold;
  AvgSizeReport slack;
  double slack_measured = 0.0;
  double slack_bound = 0.0;
  double price_excess = 0.0;
};

inline std::vector<TheoremOutcome> run_theorem_instance(const TheoremConfig& cfg, std::uint64_t seed) {
  const auto inst = theorem_instance(cfg, seed);
  const auto opt = opt_fractional(inst.scenario, cfg.B, cfg.T);
  const TxTable table(inst.scenario.arrivals);
  const BenchConstraint bench{cfg.B, constant_slack(0.0)};
  const double v_max = std::max(max_unit_value(inst.scenario.arrivals), inst.params.p_1);

  std::vector<TheoremOutcome> out;
  for (const char* name : {"value_asc", "tip"}) {
    const InclusionPolicy policy = std::string(name) == "tip"
                                       ? random_tips(inst.scenario.arrivals, seed ^ 0x5eedULL)
                                       : InclusionPolicy::value_ascending();
    const auto run = run_price_based(inst.scenario, inst.params, policy, cfg.T + inst.gamma);
    TheoremOutcome o;
    o.policy = name;
    o.welfare = check_welfare_dominance(run.schedule, opt, table, cfg.T, inst.gamma, cfg.eta, bench);
    o.threshold = check_threshold_dominance(run.schedule, opt, table, cfg.T, inst.gamma, cfg.eta, bench);
    o.slack = eip_slackness_report(run.trace, inst.params, v_max);
    o.slack_measured = measured_slackness(run.trace.sizes(), cfg.B);
    o.slack_bound = theorem_slackness(inst.params, v_max);
    o.price_excess = price_excess(run.trace, v_max, inst.params);
    out.push_back(std::move(o));
  }
  return out;
}

inline std::vector<Row> theorem_rows(const TheoremConfig& cfg, std::uint64_t seeds) {
  auto results = parallel_map(static_cast<std::size_t>(seeds),
                              [&](std::size_t i) { return run_theorem_instance(cfg, i + 1); });
  std::vector<Row> rows;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::uint64_t seed = i + 1;
    for (const auto& o : results[i]) {
      rows.push_back({"theorems/welfare_ratio." + o.policy, seed, o.welfare.ratio, o.welfare.factor, o.welfare.pass});
      rows.push_back({"theorems/threshold_violations." + o.policy, seed,
                      static_cast<double>(o.threshold.violations.size()), 0.0, o.threshold.pass});
      rows.push_back({"theorems/slackness." + o.policy, seed, o.slack_measured, o.slack_bound, o.slack.pass});
      rows.push_back({"theorems/log_price_excess." + o.policy, seed, o.price_excess, 0.0,
                      o.price_excess <= 1e-9});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Greedy warm-up suite
// ---------------------------------------------------------------------------

struct GreedyConfig {
  std::int64_t T = 200;
  double B = 100.0;
  Size q_max = 100;
  std::vector<double> loads{0.5, 1.0, 2.0, 5.0};
};

struct GreedyOutcome {
  GreedyDominanceReport dominance;
  bool never_empty = false;
  /// Windows [t0,t1] within 1..T whose real size leaves [(Z-1)B, (Z+1)B).
  std::size_t band_violations = 0;
};

inline GreedyOutcome run_greedy_instance(const GreedyConfig& cfg, std::uint64_t seed) {
  RandomFamilyConfig rf;
  rf.seed = seed;
  rf.T = cfg.T;
  rf.B = cfg.B;
  rf.q_max = cfg.q_max;
  rf.v_lo = 2.0;
  rf.v_hi = 1000.0;
  rf.load_factor = cfg.loads[seed % cfg.loads.size()];
  const auto scenario = random_family(rf);

  GreedyOutcome out;
  out.dominance = greedy_dominance_check(scenario, cfg.B, cfg.T);

  const auto run = greedy_online(scenario, cfg.B, cfg.T);
  std::int64_t arrived = 0;
  std::int64_t executed = 0;
  std::size_t cursor = 0;
  out.never_empty = true;
  for (const auto& b : run.trace.blocks) {
    while (cursor < run.realized.size() && run.realized[cursor].arrival <= b.t) {
      ++arrived;
      ++cursor;
    }
    executed += static_cast<std::int64_t>(b.executed.size());
    if (arrived - executed <= 0) out.never_empty = false;
  }
  if (out.never_empty) {
    const auto q = run.trace.sizes();
    std::vector<double> prefix(q.size() + 1, 0.0);
    for (std::size_t i = 0; i < q.size(); ++i) prefix[i + 1] = prefix[i] + q[i];
    for (std::size_t a = 0; a < q.size(); ++a) {
      for (std::size_t b = a; b < q.size(); ++b) {
        const double z = static_cast<double>(b - a + 1);
        const double s = prefix[b + 1] - prefix[a];
        if (s < (z - 1.0) * cfg.B - 1e-9 || s >= (z + 1.0) * cfg.B - 1e-9) ++out.band_violations;
      }
    }
  }
  return out;
}

inline std::vector<Row> greedy_rows(const GreedyConfig& cfg, std::uint64_t seeds) {
  auto results = parallel_map(static_cast<std::size_t>(seeds),
                              [&](std::size_t i) { return run_greedy_instance(cfg, i + 1); });
  std::vector<Row> rows;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& o = results[i];
    const std::uint64_t seed = i + 1;
    const double ratio = o.dominance.opt_welfare > 0 ? o.dominance.greedy_welfare / o.dominance.opt_welfare
                                                     : std::numeric_limits<double>::infinity();
    rows.push_back({"greedy/welfare_ratio", seed, ratio, 1.0, o.dominance.pass});
    rows.push_back({"greedy/max_block_over_B", seed, o.dominance.max_block / cfg.B, 2.0,
                    o.dominance.max_block <= 2.0 * cfg.B});
    if (o.never_empty) {
      rows.push_back({"greedy/window_band_violations", seed, static_cast<double>(o.band_violations), 0.0,
                      o.band_violations == 0});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Lower-bound constructions
// ---------------------------------------------------------------------------

inline std::int64_t sqrt_extension(std::int64_t T) {
  return static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(T))));
}

struct C2Outcome {
  std::int64_t climb = 0;
  double climb_expected = 0.0;
  std::int64_t t_star = 0;
  double ratio = 0.0;
  bool full_low_blocks = true;  // every climb block has size exactly (1+eps)B
};

/// Runs eip_c2_failure, measures the climb to 2 p_min, then the welfare ratio
/// at T = T* with Gamma = T*.
inline C2Outcome eip_c2_outcome(double eps = 0.01, double eta = 0.125) {
  const MechanismParams p{100.0, 2.0, eta, 1.0, 1.0};
  C2Outcome o;
  {
    auto probe = eip_c2_failure(p, eps, 4000);
    const auto run = run_price_based(probe.scenario, p, *probe.policy, 4000);
    const double low = static_cast<double>(std::llround((1.0 + eps) * p.B));
    for (const auto& b : run.trace.blocks) {
      if (b.log_price[0] > std::log(2.0 * p.p_min) + kLogEligibilityTol) break;
      ++o.climb;
      if (b.size[0] != low) o.full_low_blocks = false;
    }
    o.climb_expected = probe.info["climb_blocks_expected"].get<double>();
  }
  o.t_star = o.climb / 2;
  auto c = eip_c2_failure(p, eps, 2 * o.t_star);
  const auto run = run_price_based(c.scenario, p, *c.policy, 2 * o.t_star);
  o.ratio = welfare(run.schedule, run.table(), 2 * o.t_star) / eip_c2_failure_opt(p, o.t_star);
  return o;
}

struct CBelowTwoOutcome {
  double c = 0.0;
  double bound = 0.0;
  double eip_loss = 0.0;
  std::string eip_branch;
  double greedy_loss = 0.0;
  std::string greedy_branch;
};

inline CBelowTwoOutcome c_below_two_outcome(double c, std::int64_t T = 2000) {
  CBelowTwoConfig cfg;
  cfg.T = T;
  cfg.c = c;
  auto con = c_below_two(cfg);
  const double B = static_cast<double>(cfg.B);
  CBelowTwoOutcome o;
  o.c = c;
  o.bound = con.info["claimed_loss_floor"].get<double>() - 0.01;

  const MechanismParams p{B, c, 0.125, 1e-3, 1e-3};
  const std::int64_t R = T + sqrt_extension(T);
  const auto eip = run_price_based(con.scenario, p, InclusionPolicy::value_ascending(), R);
  o.eip_loss = 1.0 - welfare(eip.schedule, eip.table(), R) / eip.audit["opt_welfare"].get<double>();
  o.eip_branch = eip.audit["branch"].get<std::string>();

  GreedyOptions g;
  g.block_cap = c * B;
  const auto gr = greedy_online(con.scenario, B, T + 1, g);
  o.greedy_loss = 1.0 - welfare(gr.schedule, gr.table(), T + 1) / gr.audit["opt_welfare"].get<double>();
  o.greedy_branch = gr.audit["branch"].get<std::string>();
  return o;
}

struct LogRangeOutcome {
  std::int64_t climb = 0;
  double climb_expected = 0.0;
  double climb_slack = 0.0;     // max window slackness within the climb
  double climb_slack_expected = 0.0;
  bool full_blocks = true;
};

inline LogRangeOutcome log_range_outcome(double c = 2.0, double eta = 0.125, double L = std::exp(1.0),
                                         double H = 1e6) {
  const MechanismParams p{100.0, c, eta, 1.0, 1.0};
  auto con = log_range(p, H, L, 400);
  const auto run = run_price_based(con.scenario, p, *con.policy, 400);
  LogRangeOutcome o;
  std::vector<double> sizes;
  for (const auto& b : run.trace.blocks) {
    if (b.log_price[0] > std::log(L) + kLogEligibilityTol) break;
    ++o.climb;
    sizes.push_back(b.size[0]);
    if (std::abs(b.size[0] - p.capacity()) > 1e-9) o.full_blocks = false;
  }
  o.climb_expected = con.info["climb_blocks_expected"].get<double>();
  o.climb_slack = measured_slackness(sizes, p.B);
  o.climb_slack_expected = static_cast<double>(o.climb) * (c - 1.0);
  return o;
}

struct AdversaryOutcome {
  std::int64_t gamma = 0;
  std::int64_t delta = 0;
  PriceAdversaryResult result;
  bool transcripts_identical = false;
};

/// EIP against the price-transcript adversary; for small R the two colliding
/// scenarios are materialized and replayed to compare traces bit for bit.
inline AdversaryOutcome adversary_outcome(std::int64_t gamma, std::int64_t delta, double r = 2.0) {
  const MechanismParams p{1.0, 2.0, 0.125, 1.0, 1.0};
  AdversaryOutcome o;
  o.gamma = gamma;
  o.delta = delta;
  const double log_H = std::pow(4.0, static_cast<double>(gamma + delta)) * std::log(r);
  o.result = adaptive_price_adversary(EipAlgorithm(p), gamma, delta, log_H);
  if (!o.result.found) return o;
  if (o.result.m_prime > 4096) return o;
  const auto sa = level_scenario(o.result.m, o.result.supply, 1, o.result.log_r);
  const auto sb = level_scenario(o.result.m_prime, o.result.supply, 1, o.result.log_r);
  const auto ra = run_price_based(sa, p, InclusionPolicy::value_ascending(), o.result.R);
  const auto rb = run_price_based(sb, p, InclusionPolicy::value_ascending(), o.result.R);
  bool same = ra.trace == rb.trace;
  // The replay must also match the adversary's own transcript.
  for (std::size_t t = 0; same && t < ra.trace.blocks.size(); ++t) {
    std::int64_t count = 0;
    for (const auto& [level, n] : o.result.transcript[t]) count += n;
    same = static_cast<std::int64_t>(ra.trace.blocks[t].executed.size()) == count;
  }
  o.transcripts_identical = same;
  return o;
}

struct SensitivityOutcome {
  double loss = 0.0;
  std::string branch;
  std::int64_t T = 0;
};

inline MechanismParams sensitivity_params() {
  MechanismParams p{1.0, 2.0, 0.125, 0.5, 0.5};
  p.discounted_eligibility = true;
  return p;
}

inline SensitivityOutcome discount_mix_outcome() {
  const auto p = sensitivity_params();
  DiscountMixConfig cfg;
  cfg.rho = 0.01;
  cfg.gamma = 15;
  cfg.delta = static_cast<std::int64_t>(std::ceil(theorem_slackness(p, 2.0)));
  cfg.K = 4;
  auto con = discount_mix(cfg);
  const std::int64_t R = con.horizon + cfg.gamma;
  const auto run = run_price_based(con.scenario, p, InclusionPolicy::value_ascending(), R);
  return {1.0 - welfare(run.schedule, run.table(), R) / run.audit["opt_welfare"].get<double>(),
          run.audit["branch"].get<std::string>(), con.horizon};
}

inline SensitivityOutcome patience_outcome(std::int64_t patience = 100, std::int64_t gamma = 15) {
  const auto p = sensitivity_params();
  auto con = patience_global(patience, 1);
  const std::int64_t R = con.horizon + gamma;
  const auto run = run_price_based(con.scenario, p, InclusionPolicy::value_ascending(), R);
  return {1.0 - welfare(run.schedule, run.table(), R) / run.audit["opt_welfare"].get<double>(),
          run.audit["branch"].get<std::string>(), con.horizon};
}

/// Feeds an adaptive construction a hand-picked execution history: each block
/// executes greedily, in `prefer` order, whatever fits capacity B among the
/// pending transactions. Returns the realized arrivals and the source audit.
struct Realized {
  std::vector<Transaction> arrivals;
  nlohmann::json audit;
};

inline Realized realize_with(const Scenario& scenario, std::int64_t horizon,
                             const std::function<bool(const Transaction&, const Transaction&)>& prefer) {
  auto src = scenario.open();
  Realized out;
  std::vector<Transaction> pending;
  BlockOutcome prev;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    for (auto& tx : src->next(t, prev)) {
      out.arrivals.push_back(tx);
      pending.push_back(std::move(tx));
    }
    std::sort(pending.begin(), pending.end(), prefer);
    std::vector<double> residual = scenario.capacities;
    BlockOutcome now;
    now.t = t;
    now.size.assign(residual.size(), 0.0);
    std::vector<Transaction> keep;
    for (auto& tx : pending) {
      bool fits = tx.unit_value_at(t) > 0.0;
      for (std::size_t j = 0; j < residual.size() && fits; ++j) fits = static_cast<double>(tx.size[j]) <= residual[j];
      if (!fits) {
        keep.push_back(std::move(tx));
        continue;
      }
      for (std::size_t j = 0; j < residual.size(); ++j) {
        residual[j] -= static_cast<double>(tx.size[j]);
        now.size[j] += static_cast<double>(tx.size[j]);
      }
      now.executed.push_back({tx.id, 1.0});
    }
    pending = std::move(keep);
    prev = std::move(now);
  }
  out.audit = src->audit();
  return out;
}

struct MiniatureOutcome {
  std::string name;
  std::string branch;
  double closed_form = 0.0;
  double exact = 0.0;
};

/// Closed-form optima of the single-resource constructions against
/// opt_integral_small on <= 12-block miniatures, driven into both branches.
inline std::vector<MiniatureOutcome> miniature_outcomes() {
  std::vector<MiniatureOutcome> out;
  auto by_value = [](bool high_first) {
    return [high_first](const Transaction& a, const Transaction& b) {
      if (a.unit_value != b.unit_value) return high_first ? a.unit_value > b.unit_value : a.unit_value < b.unit_value;
      return a.id < b.id;
    };
  };
  auto add = [&](const std::string& name, const Construction& con, bool high_first) {
    const auto rz = realize_with(con.scenario, con.horizon, by_value(high_first));
    const double B = con.scenario.capacities[0];
    const auto exact = opt_integral_small(rz.arrivals, B, con.horizon);
    out.push_back({name, rz.audit["branch"].get<std::string>(), rz.audit["opt_welfare"].get<double>(),
                   welfare(exact, TxTable(rz.arrivals), con.horizon)});
  };
  CBelowTwoConfig cb{8, 1.5, 8, 0.125, 8};
  add("c_below_two", c_below_two(cb), true);
  add("c_below_two", c_below_two(cb), false);
  DiscountMixConfig dm{0.2, 1, 1, 0, 0};
  add("discount_mix", discount_mix(dm), true);
  add("discount_mix", discount_mix(dm), false);
  add("patience_global", patience_global(5, 1), true);
  add("patience_global", patience_global(5, 1), false);
  return out;
}

inline double three_resources_ratio(std::int64_t t = 300) {
  auto con = three_resources(t, 1);
  const MechanismParams p{1.0, 1.5, 0.125, 0.01, 0.01};
  const std::vector<MechanismParams> per(3, p);
  const std::int64_t R = con.horizon + sqrt_extension(con.horizon);
  const auto run = multi_resource_mechanism(con.scenario, per, InclusionPolicy::value_ascending(), R);
  return welfare(run.schedule, run.table(), R) / run.audit["opt_welfare"].get<double>();
}

inline std::vector<Row> lower_bound_rows() {
  std::vector<Row> rows;
  const auto c2 = eip_c2_outcome();
  rows.push_back({"lower_bounds/eip_c2_failure.ratio", 0, c2.ratio, 0.5, c2.ratio < 0.5});
  const double tstar_err = std::abs(static_cast<double>(c2.t_star) - c2.climb_expected / 2.0);
  rows.push_back({"lower_bounds/eip_c2_failure.t_star_error", 0, tstar_err, 1.0, tstar_err <= 1.0});

  const std::vector<double> cs{1.25, 1.5, 1.75};
  const auto cb = parallel_map(cs.size(), [&](std::size_t i) { return c_below_two_outcome(cs[i]); });
  for (const auto& o : cb) {
    const std::string tag = format_number(o.c);
    rows.push_back({"lower_bounds/c_below_two.eip.c=" + tag, 0, o.eip_loss, o.bound, o.eip_loss >= o.bound});
    rows.push_back({"lower_bounds/c_below_two.greedy.c=" + tag, 0, o.greedy_loss, o.bound, o.greedy_loss >= o.bound});
  }

  const auto lr = log_range_outcome();
  const double climb_err = std::abs(static_cast<double>(lr.climb) - lr.climb_expected);
  rows.push_back({"lower_bounds/log_range.climb_error", 0, climb_err, 1.0, climb_err <= 1.0});
  const double slack_err = std::abs(lr.climb_slack - lr.climb_slack_expected);
  rows.push_back({"lower_bounds/log_range.slack_error", 0, slack_err, 0.0, slack_err <= 1e-9});

  for (auto [g, d] : std::vector<std::pair<std::int64_t, std::int64_t>>{{1, 1}, {1, 2}, {2, 1}, {2, 2}}) {
    const auto a = adversary_outcome(g, d);
    const std::string tag = ".G=" + std::to_string(g) + ".D=" + std::to_string(d);
    rows.push_back({"lower_bounds/price_adversary.fraction" + tag, 0, a.result.fraction, a.result.bound,
                    a.result.found && a.result.pass});
    rows.push_back({"lower_bounds/price_adversary.collision" + tag, 0, a.transcripts_identical ? 1.0 : 0.0, 1.0,
                    a.transcripts_identical && a.result.m < a.result.m_prime});
  }

  const auto dm = discount_mix_outcome();
  rows.push_back({"lower_bounds/discount_mix.loss.branch=" + dm.branch, 0, dm.loss, 0.05 - 0.01, dm.loss >= 0.04});
  const auto pg = patience_outcome();
  rows.push_back({"lower_bounds/patience_global.loss.branch=" + pg.branch, 0, pg.loss, 0.1 - 0.02, pg.loss >= 0.08});
  for (const auto& m : miniature_outcomes()) {
    const double err = std::abs(m.closed_form - m.exact);
    rows.push_back({"lower_bounds/miniature." + m.name + ".branch=" + m.branch, 0, err, 1e-9,
                    err <= 1e-9 * std::max(1.0, m.exact)});
  }

  const double tr = three_resources_ratio();
  rows.push_back({"lower_bounds/three_resources.ratio", 0, tr, 5.0 / 6.0 + 0.05, tr <= 5.0 / 6.0 + 0.05});
  return rows;
}

/// name: "theorems", "greedy", "lower_bounds" or "all".
inline std::vector<Row> run_suite(const std::string& name, std::uint64_t seeds) {
  if (name != "theorems" && name != "greedy" && name != "lower_bounds" && name != "all") {
    throw InvalidInput("unknown suite '" + name + "' (expected theorems|greedy|lower_bounds|all)");
  }
  std::vector<Row> rows;
  auto append = [&](std::vector<Row> more) { rows.insert(rows.end(), more.begin(), more.end()); };
  if (name == "theorems" || name == "all") append(theorem_rows(TheoremConfig{}, seeds));
  if (name == "greedy" || name == "all") append(greedy_rows(GreedyConfig{}, seeds));
  if ((name == "lower_bounds" || name == "all") && seeds > 0) append(lower_bound_rows());
  return rows;
}

}  // namespace feemarket::suite
