#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "feemarket/accounting.hpp"
#include "feemarket/adversary.hpp"
#include "feemarket/benchmarks.hpp"
#include "feemarket/mechanisms.hpp"
#include "feemarket/scenario.hpp"
#include "feemarket/types.hpp"

namespace feemarket::io {

using nlohmann::json;

namespace detail {

inline std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

template <class T>
T field(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) throw InvalidInput(ctx + "missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidInput(ctx + "field '" + key + "' has the wrong type");
  }
}

inline json number_or_inf(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return nullptr;
  return x;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Transactions and scenarios
// ---------------------------------------------------------------------------

inline json to_json(const Sensitivity& s) {
  if (const auto* d = std::get_if<Discount>(&s)) return {{"kind", "discount"}, {"rho", d->rho}};
  if (const auto* p = std::get_if<Patience>(&s)) return {{"kind", "patience"}, {"p", p->window}};
  return {{"kind", "patient"}};
}

inline json to_json(const Transaction& tx) {
  return {{"t", tx.arrival}, {"id", tx.id}, {"q", tx.size}, {"v", tx.unit_value}, {"sens", to_json(tx.sensitivity)}};
}

inline Transaction transaction_from_json(const json& j, std::size_t m, const std::string& ctx) {
  Transaction tx;
  tx.arrival = detail::field<std::int64_t>(j, "t", ctx);
  tx.id = detail::field<TxId>(j, "id", ctx);
  const auto q = detail::field<std::vector<std::int64_t>>(j, "q", ctx);
  tx.size.clear();
  for (auto x : q) {
    if (x < 0) throw InvalidInput(ctx + "negative size");
    tx.size.push_back(static_cast<Size>(x));
  }
  tx.unit_value = detail::field<double>(j, "v", ctx);
  if (j.contains("sens")) {
    const auto& s = j.at("sens");
    const auto kind = detail::field<std::string>(s, "kind", ctx);
    if (kind == "patient") {
      tx.sensitivity = Patient{};
    } else if (kind == "discount") {
      tx.sensitivity = Discount{detail::field<double>(s, "rho", ctx)};
    } else if (kind == "patience") {
      tx.sensitivity = Patience{detail::field<std::int64_t>(s, "p", ctx)};
    } else {
      throw InvalidInput(ctx + "unknown sensitivity kind '" + kind + "'");
    }
  }
  try {
    tx.validate(m);
  } catch (const InvalidInput& e) {
    throw InvalidInput(ctx + e.what());
  }
  return tx;
}

/// Header line {"m","B","seed"} followed by one transaction per line.
inline void write_scenario_jsonl(std::ostream& os, std::span<const Transaction> txs,
                                 const std::vector<double>& capacities, std::uint64_t seed) {
  os << json{{"m", capacities.size()}, {"B", capacities}, {"seed", seed}}.dump() << '\n';
  for (const auto& tx : txs) os << to_json(tx).dump() << '\n';
}

inline void write_scenario_jsonl(std::ostream& os, const Scenario& s) {
  if (s.is_adaptive()) {
    throw Unsupported("adaptive scenarios export their realized arrivals after a run");
  }
  write_scenario_jsonl(os, s.arrivals, s.capacities, s.seed);
}

inline Scenario read_scenario_jsonl(std::istream& is, const std::string& source = "<scenario>") {
  Scenario s;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::size_t m = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto ctx = detail::where(source, lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InvalidInput(ctx + "malformed JSON (" + e.what() + ")");
    }
    if (!header) {
      m = detail::field<std::size_t>(j, "m", ctx);
      s.capacities = detail::field<std::vector<double>>(j, "B", ctx);
      if (m < 1 || s.capacities.size() != m) throw InvalidInput(ctx + "header B must list m capacities");
      for (double b : s.capacities) {
        if (!(b > 0.0)) throw InvalidInput(ctx + "capacities must be positive");
      }
      if (j.contains("seed")) s.seed = detail::field<std::uint64_t>(j, "seed", ctx);
      header = true;
      continue;
    }
    s.arrivals.push_back(transaction_from_json(j, m, ctx));
  }
  if (!header) throw InvalidInput(source + ": missing header line");
  (void)TxTable(s.arrivals);  // rejects duplicate ids
  return s;
}

// ---------------------------------------------------------------------------
// Mechanism configuration
// ---------------------------------------------------------------------------

inline MechanismParams params_from_json(const json& j, const std::string& ctx = "mechanism: ") {
  MechanismParams p;
  if (!j.is_object()) throw InvalidInput(ctx + "expected an object");
  if (j.contains("B")) p.B = detail::field<double>(j, "B", ctx);
  if (j.contains("c")) p.c = detail::field<double>(j, "c", ctx);
  if (j.contains("eta")) p.eta = detail::field<double>(j, "eta", ctx);
  if (j.contains("p_min")) p.p_min = detail::field<double>(j, "p_min", ctx);
  p.p_1 = j.contains("p_1") ? detail::field<double>(j, "p_1", ctx) : p.p_min;
  if (j.contains("update_rule")) {
    const auto r = detail::field<std::string>(j, "update_rule", ctx);
    if (r == "exponential") {
      p.update_rule = UpdateRule::Exponential;
    } else if (r == "linear") {
      p.update_rule = UpdateRule::LinearApprox;
    } else {
      throw InvalidInput(ctx + "update_rule must be 'exponential' or 'linear'");
    }
  }
  if (j.contains("discounted_eligibility")) {
    p.discounted_eligibility = detail::field<bool>(j, "discounted_eligibility", ctx);
  }
  try {
    p.validate();
  } catch (const InvalidInput& e) {
    throw InvalidInput(ctx + e.what());
  }
  return p;
}

inline json to_json(const MechanismParams& p) {
  return {{"B", p.B},
          {"c", p.c},
          {"eta", p.eta},
          {"p_min", p.p_min},
          {"p_1", p.p_1},
          {"update_rule", p.update_rule == UpdateRule::Exponential ? "exponential" : "linear"},
          {"discounted_eligibility", p.discounted_eligibility}};
}

/// Optional "policy", "tips" ({id: tip}) and "seed" keys of a mechanism config.
inline InclusionPolicy policy_from_json(const json& j, const std::string& ctx = "mechanism: ") {
  InclusionPolicy pol;
  if (j.contains("policy")) pol.kind = policy_kind_from_string(detail::field<std::string>(j, "policy", ctx));
  if (j.contains("seed")) pol.seed = detail::field<std::uint64_t>(j, "seed", ctx);
  if (j.contains("tips")) {
    const auto& t = j.at("tips");
    if (!t.is_object()) throw InvalidInput(ctx + "tips must map ids to numbers");
    for (const auto& [k, v] : t.items()) {
      if (!v.is_number()) throw InvalidInput(ctx + "tip for id " + k + " is not a number");
      try {
        pol.tips[std::stoll(k)] = v.get<double>();
      } catch (const std::logic_error&) {
        throw InvalidInput(ctx + "tip key '" + k + "' is not an id");
      }
    }
  }
  return pol;
}

// ---------------------------------------------------------------------------
// Schedules and traces
// ---------------------------------------------------------------------------

inline json to_json(const Schedule& s) {
  json entries = json::array();
  for (const auto& e : s.entries) entries.push_back({{"id", e.id}, {"t", e.t}, {"x", e.fraction}});
  return {{"integral", s.integral}, {"entries", std::move(entries)}};
}

inline Schedule schedule_from_json(const json& j, const std::string& ctx = "schedule: ") {
  Schedule s;
  s.integral = j.contains("integral") ? detail::field<bool>(j, "integral", ctx) : false;
  if (!j.contains("entries") || !j.at("entries").is_array()) throw InvalidInput(ctx + "missing entries array");
  std::size_t k = 0;
  for (const auto& e : j.at("entries")) {
    const auto c = ctx + "entry " + std::to_string(k++) + ": ";
    s.entries.push_back({detail::field<TxId>(e, "id", c), detail::field<std::int64_t>(e, "t", c),
                         e.contains("x") ? detail::field<double>(e, "x", c) : 1.0});
  }
  return s;
}

inline json to_json(const BlockRecord& b) {
  json executed = json::array();
  for (const auto& e : b.executed) executed.push_back({{"id", e.id}, {"frac", e.fraction}});
  auto scalar_or_list = [&](const std::vector<double>& v, bool as_price) -> json {
    json arr = json::array();
    for (double x : v) arr.push_back(as_price ? (std::isinf(x) ? json(nullptr) : json(std::exp(x))) : json(x));
    return v.size() == 1 ? arr[0] : arr;
  };
  json capacity = json::array();
  for (double x : b.capacity) capacity.push_back(detail::number_or_inf(x));
  return {{"t", b.t},
          {"p", scalar_or_list(b.log_price, true)},
          {"B_t", b.capacity.size() == 1 ? capacity[0] : capacity},
          {"executed", std::move(executed)},
          {"Q", scalar_or_list(b.size, false)},
          {"cum_welfare", b.cum_welfare}};
}

inline void write_trace_jsonl(std::ostream& os, const RunTrace& trace) {
  for (const auto& b : trace.blocks) os << to_json(b).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json to_json(const ThresholdReport& r) {
  json v = json::array();
  for (const auto& x : r.violations) v.push_back({{"theta", x.theta}, {"lhs", x.lhs}, {"rhs", x.rhs}});
  return {{"check", "threshold_dominance"},
          {"pass", r.pass},
          {"thresholds_checked", r.thresholds_checked},
          {"violations", std::move(v)}};
}

inline json to_json(const WelfareReport& r) {
  return {{"check", "welfare_dominance"},
          {"pass", r.pass},
          {"violations", json::array()},
          {"ratio", detail::number_or_inf(r.ratio)},
          {"alg_welfare", r.alg_welfare},
          {"bench_welfare", r.bench_welfare},
          {"factor", r.factor}};
}

inline json to_json(const AvgSizeReport& r) {
  json v = json::array();
  for (const auto& x : r.violations) {
    v.push_back({{"window", {x.t0, x.t1}}, {"resource", x.resource}, {"lhs", x.lhs}, {"rhs", x.rhs}});
  }
  return {{"check", "avg_block_size"},
          {"pass", r.pass},
          {"violation_count", r.violation_count},
          {"violations", std::move(v)}};
}

}  // namespace feemarket::io
