// feemarket: run mechanisms on scenarios, verify schedules, run check suites.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "feemarket/feemarket.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace feemarket;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

// Writes next to the target and renames, so readers never see partial files.
void write_atomic(const fs::path& path, const std::string& body) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw InvalidInput("cannot write " + tmp.string());
    os << body;
    if (!os.flush()) throw InvalidInput("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // byte offset -> line number
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw InvalidInput(source + ":" + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
  }
}

// Inline JSON object or a path to a JSON file.
json json_arg(const std::string& arg) {
  if (arg.empty()) return json::object();
  if (arg.front() == '{') return parse_json_text(arg, "<inline>");
  return parse_json_text(slurp(arg), arg);
}

// --set key=value overrides for builtin parameters.
class Settings {
 public:
  explicit Settings(const std::vector<std::string>& kv) {
    for (const auto& s : kv) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw InvalidInput("--set expects key=value, got '" + s + "'");
      const auto key = s.substr(0, eq);
      const auto val = s.substr(eq + 1);
      try {
        std::size_t used = 0;
        values_[key] = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
      } catch (const std::logic_error&) {
        throw InvalidInput("--set " + key + ": '" + val + "' is not a number");
      }
    }
  }

  double get(const std::string& key, double fallback) {
    seen_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }
  std::int64_t get_int(const std::string& key, std::int64_t fallback) {
    const double x = get(key, static_cast<double>(fallback));
    if (x != std::floor(x)) throw InvalidInput("--set " + key + " must be an integer");
    return static_cast<std::int64_t>(x);
  }
  void finish(const std::string& builtin) const {
    for (const auto& [k, v] : values_) {
      if (!seen_.count(k)) throw InvalidInput("builtin '" + builtin + "' has no parameter '" + k + "'");
    }
  }

 private:
  std::map<std::string, double> values_;
  std::set<std::string> seen_;
};

struct Prepared {
  std::string name;
  Construction con;
  json mechanism;  // defaults, later patched by --mechanism
  InclusionPolicy policy;
  std::optional<std::int64_t> bench_T;  // benchmark horizon for the summary ratio
  std::optional<double> bench_opt;      // closed-form benchmark welfare over [1, bench_T]
};

const std::vector<std::string> kBuiltins = {"random_family",  "eip_c2_failure",  "log_range",
                                            "c_below_two",    "discount_mix",    "patience_global",
                                            "three_resources"};

Prepared builtin(const std::string& name, Settings& set, std::uint64_t seed) {
  Prepared p;
  p.name = name;
  if (name == "random_family") {
    RandomFamilyConfig cfg;
    cfg.seed = seed;
    cfg.T = set.get_int("T", 500);
    cfg.B = set.get("B", 100.0);
    cfg.q_max = set.get_int("q_max", static_cast<std::int64_t>(cfg.B));
    cfg.load_factor = set.get("load", 1.0);
    cfg.eta = set.get("eta", 0.125);
    cfg.p_min = set.get("p_min", 1.0);
    cfg.v_lo = set.get("v_lo", std::exp(cfg.eta) * cfg.p_min);
    cfg.v_hi = set.get("v_hi", 1e6 * cfg.p_min);
    const MechanismParams mp{cfg.B, set.get("c", 3.0), cfg.eta, cfg.p_min, set.get("p_1", 100.0 * cfg.p_min)};
    p.con.scenario = random_family(cfg);
    const auto gamma = theorem_gamma(mp, cfg.v_hi, static_cast<double>(cfg.q_max));
    p.con.horizon = cfg.T + gamma;
    p.con.info = {{"construction", name}, {"T", cfg.T}, {"theorem_gamma", gamma}};
    p.mechanism = io::to_json(mp);
    p.policy = InclusionPolicy::value_ascending();
    p.bench_T = cfg.T;
  } else if (name == "eip_c2_failure") {
    const MechanismParams mp{set.get("B", 100.0), 2.0, set.get("eta", 0.125), 1.0, 1.0};
    const double eps = set.get("eps", 0.01);
    const auto probe = eip_c2_failure(mp, eps, 1);
    const auto t_star = static_cast<std::int64_t>(std::floor(probe.info["T_star"].get<double>()));
    p.con = eip_c2_failure(mp, eps, 2 * t_star);
    p.mechanism = io::to_json(mp);
    p.policy = *p.con.policy;
    p.bench_T = t_star;
    p.bench_opt = eip_c2_failure_opt(mp, t_star);
  } else if (name == "log_range") {
    MechanismParams mp{set.get("B", 100.0), set.get("c", 2.0), set.get("eta", 0.125), 1.0, 1.0};
    const double L = set.get("L", std::exp(1.0));
    const double H = set.get("H", 1e6);
    p.con = log_range(mp, H, L, set.get_int("T", 40));
    p.mechanism = io::to_json(mp);
    p.policy = *p.con.policy;
  } else if (name == "c_below_two") {
    CBelowTwoConfig cfg;
    cfg.T = set.get_int("T", 2000);
    cfg.c = set.get("c", 1.5);
    cfg.B = set.get_int("B", 6400);
    cfg.eps = set.get("eps", 0.01);
    cfg.gamma_divisor = set.get_int("gamma_divisor", 64);
    p.con = c_below_two(cfg);
    p.con.horizon = cfg.T + suite::sqrt_extension(cfg.T);
    const MechanismParams mp{static_cast<double>(cfg.B), cfg.c, set.get("eta", 0.125), 1e-3, 1e-3};
    p.mechanism = io::to_json(mp);
    p.policy = InclusionPolicy::value_ascending();
    p.bench_T = cfg.T;
  } else if (name == "discount_mix") {
    const auto mp = suite::sensitivity_params();
    DiscountMixConfig cfg;
    cfg.rho = set.get("rho", 0.01);
    cfg.B = set.get_int("B", 1);
    cfg.K = set.get_int("K", 4);
    cfg.gamma = set.get_int("gamma", 15);
    cfg.delta = set.get_int("delta", static_cast<std::int64_t>(std::ceil(theorem_slackness(mp, 2.0))));
    p.con = discount_mix(cfg);
    p.bench_T = p.con.horizon;
    p.con.horizon += cfg.gamma;
    auto m = mp;
    m.B = static_cast<double>(cfg.B);
    p.mechanism = io::to_json(m);
    p.policy = InclusionPolicy::value_ascending();
  } else if (name == "patience_global") {
    auto mp = suite::sensitivity_params();
    const auto B = set.get_int("B", 1);
    mp.B = static_cast<double>(B);
    p.con = patience_global(set.get_int("p", 100), B);
    p.bench_T = p.con.horizon;
    p.con.horizon += set.get_int("gamma", 15);
    p.mechanism = io::to_json(mp);
    p.policy = InclusionPolicy::value_ascending();
  } else if (name == "three_resources") {
    const auto t = set.get_int("t", 300);
    const auto B = set.get_int("B", 1);
    p.con = three_resources(t, B);
    p.bench_T = p.con.horizon;
    p.con.horizon += suite::sqrt_extension(p.con.horizon);
    MechanismParams mp{static_cast<double>(B), 1.5, 0.125, 0.01, 0.01};
    p.mechanism = io::to_json(mp);
    p.mechanism["algorithm"] = "multi_resource";
    p.policy = InclusionPolicy::value_ascending();
  } else {
    std::string list;
    for (const auto& b : kBuiltins) list += (list.empty() ? "" : ", ") + b;
    throw InvalidInput("unknown builtin scenario '" + name + "' (known: " + list + ")");
  }
  set.finish(name);
  if (p.con.policy) p.policy = *p.con.policy;
  return p;
}

Prepared from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidInput("cannot open scenario file " + path);
  Prepared p;
  p.name = fs::path(path).filename().string();
  p.con.scenario = io::read_scenario_jsonl(is, path);
  std::int64_t last = 0;
  for (const auto& tx : p.con.scenario.arrivals) last = std::max(last, tx.arrival);
  p.con.horizon = last;
  p.con.info = {{"construction", "file"}, {"source", path}};
  MechanismParams mp;
  mp.B = p.con.scenario.capacities.front();
  mp.p_1 = mp.p_min;
  p.mechanism = io::to_json(mp);
  p.policy = InclusionPolicy::value_ascending();
  return p;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

struct RunOptions {
  std::string scenario;
  std::vector<std::string> sets;
  std::string mechanism;
  std::string policy;
  std::optional<std::int64_t> horizon;
  std::uint64_t seed = 0;
  std::string out = "run";
  std::string format = "json";
};

RunResult execute(const Prepared& p, const json& mech, const InclusionPolicy& policy, std::int64_t R,
                  std::string& algorithm) {
  algorithm = mech.value("algorithm", std::string("eip"));
  json params = mech;
  for (const char* k : {"algorithm", "block_cap", "policy", "tips", "seed", "resources"}) params.erase(k);
  if (algorithm == "eip") {
    return run_price_based(p.con.scenario, io::params_from_json(params), policy, R);
  }
  if (algorithm == "greedy") {
    GreedyOptions opt;
    if (mech.contains("block_cap")) opt.block_cap = mech.at("block_cap").get<double>();
    const double B = params.contains("B") ? params.at("B").get<double>() : p.con.scenario.capacities.front();
    return greedy_online(p.con.scenario, B, R, opt);
  }
  if (algorithm == "multi_resource") {
    std::vector<MechanismParams> per;
    if (mech.contains("resources")) {
      for (const auto& r : mech.at("resources")) per.push_back(io::params_from_json(r));
    } else {
      for (double b : p.con.scenario.capacities) {
        auto j = params;
        j["B"] = b;
        per.push_back(io::params_from_json(j));
      }
    }
    return multi_resource_mechanism(p.con.scenario, per, policy, R);
  }
  throw InvalidInput("mechanism: algorithm must be eip|greedy|multi_resource, got '" + algorithm + "'");
}

json summarize(const Prepared& p, const json& mech, const std::string& algorithm, const RunResult& run,
               std::int64_t R) {
  const auto table = run.table();
  json s;
  s["scenario"] = p.name;
  s["algorithm"] = algorithm;
  s["mechanism"] = mech;
  s["horizon"] = R;
  s["arrivals"] = run.realized.size();
  s["welfare"] = welfare(run.schedule, table, R);
  json maxb = json::array();
  json slack = json::array();
  for (std::size_t j = 0; j < run.capacities.size(); ++j) {
    std::vector<double> sizes;
    double mx = 0.0;
    for (const auto& b : run.trace.blocks) {
      sizes.push_back(b.size[j]);
      mx = std::max(mx, b.size[j]);
    }
    maxb.push_back(mx);
    slack.push_back(measured_slackness(sizes, run.capacities[j]));
  }
  s["max_block"] = maxb;
  s["measured_slackness"] = slack;
  if (algorithm == "eip" && !run.realized.empty()) {
    const auto mp = io::params_from_json([&] {
      json j = mech;
      for (const char* k : {"algorithm", "block_cap", "policy", "tips", "seed", "resources"}) j.erase(k);
      return j;
    }());
    const double v_max = std::max(suite::max_unit_value(run.realized), mp.p_min);
    s["theorem_slackness"] = theorem_slackness(mp, v_max);
  }
  std::optional<double> opt = p.bench_opt;
  if (!opt && run.audit.contains("opt_welfare")) opt = run.audit.at("opt_welfare").get<double>();
  if (p.bench_T) {
    s["T"] = *p.bench_T;
    if (!opt && !run.realized.empty()) {
      try {
        const auto bench = opt_fractional(std::span<const Transaction>(run.realized), run.capacities.front(),
                                          *p.bench_T);
        opt = welfare(bench, table, *p.bench_T);
        s["benchmark"] = "opt_fractional";
      } catch (const Unsupported&) {
      }
    }
  }
  if (opt) {
    s["opt_welfare"] = *opt;
    s["ratio"] = *opt > 0.0 ? json(s["welfare"].get<double>() / *opt) : json("inf");
  } else if (run.realized.empty()) {
    s["ratio"] = "inf";
  }
  s["info"] = p.con.info;
  s["audit"] = run.audit;
  return s;
}

std::string summary_csv(const json& s) {
  std::string out = "key,value\n";
  for (const auto& [k, v] : s.items()) {
    if (v.is_object()) continue;
    std::string cell;
    if (v.is_number_float()) {
      cell = suite::format_number(v.get<double>());
    } else if (v.is_array()) {
      for (const auto& x : v) {
        if (!cell.empty()) cell += ';';
        cell += x.is_number() ? suite::format_number(x.get<double>()) : x.dump();
      }
    } else if (v.is_string()) {
      cell = v.get<std::string>();
    } else {
      cell = v.dump();
    }
    out += k + "," + cell + "\n";
  }
  return out;
}

int cmd_run(const RunOptions& o) {
  const bool is_file = fs::exists(o.scenario) && !fs::is_directory(o.scenario);
  Prepared p;
  if (is_file) {
    if (!o.sets.empty()) throw InvalidInput("--set applies to builtin scenarios only");
    p = from_file(o.scenario);
  } else {
    Settings set(o.sets);
    p = builtin(o.scenario, set, o.seed);
  }
  json mech = p.mechanism;
  const json patch = json_arg(o.mechanism);
  if (!patch.is_object()) throw InvalidInput("mechanism: expected a JSON object");
  mech.merge_patch(patch);

  InclusionPolicy policy = p.policy;
  if (patch.contains("policy") || patch.contains("tips") || patch.contains("seed")) {
    policy = io::policy_from_json(mech);
  }
  if (!o.policy.empty()) policy.kind = policy_kind_from_string(o.policy);
  if (policy.kind == InclusionPolicy::Kind::SeededRandom && !patch.contains("seed")) policy.seed = o.seed;

  const std::int64_t R = o.horizon.value_or(p.con.horizon);
  if (R < 0) throw InvalidInput("--horizon must be >= 0");

  std::string algorithm;
  const auto run = execute(p, mech, policy, R, algorithm);

  fs::create_directories(o.out);
  const fs::path dir(o.out);
  {
    std::ostringstream ss;
    io::write_scenario_jsonl(ss, run.realized, run.capacities, p.con.scenario.seed);
    write_atomic(dir / "arrivals.jsonl", ss.str());
  }
  {
    std::ostringstream ss;
    io::write_trace_jsonl(ss, run.trace);
    write_atomic(dir / "trace.jsonl", ss.str());
  }
  write_atomic(dir / "schedule.json", io::to_json(run.schedule).dump(1) + "\n");
  const json s = summarize(p, mech, algorithm, run, R);
  if (o.format == "csv") {
    write_atomic(dir / "summary.csv", summary_csv(s));
  } else {
    write_atomic(dir / "summary.json", s.dump(1) + "\n");
  }
  std::cout << s.dump() << "\n";
  return kPass;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifyOptions {
  std::string run;
  std::string bench = "opt_fractional";
  std::optional<std::int64_t> T;
  std::optional<std::int64_t> gamma;
  std::optional<double> eta;
  double bench_slack = 0.0;
  std::string format = "json";
};

std::vector<Transaction> load_arrivals(const fs::path& path, std::vector<double>& capacities) {
  std::ifstream is(path);
  if (!is) throw InvalidInput("cannot open " + path.string());
  auto s = io::read_scenario_jsonl(is, path.string());
  capacities = s.capacities;
  return std::move(s.arrivals);
}

int cmd_verify(const VerifyOptions& o) {
  const fs::path dir(o.run);
  std::vector<double> caps;
  const auto arrivals = load_arrivals(dir / "arrivals.jsonl", caps);
  if (caps.size() != 1) throw InvalidInput("verify handles single-resource runs only");
  const TxTable table(arrivals);
  const auto sched_path = (dir / "schedule.json").string();
  const Schedule alg = io::schedule_from_json(parse_json_text(slurp(sched_path), sched_path), sched_path + ": ");
  validate_schedule(alg, table);

  json summary = json::object();
  if (fs::exists(dir / "summary.json")) summary = json_arg((dir / "summary.json").string());

  const std::int64_t horizon = summary.value("horizon", std::int64_t{0});
  const std::int64_t T = o.T ? *o.T : summary.value("T", horizon);
  if (T < 1) throw InvalidInput("verify: benchmark horizon T unknown; pass --horizon");
  const std::int64_t gamma = o.gamma ? *o.gamma : std::max<std::int64_t>(0, horizon - T);
  double eta = 0.125;
  if (summary.contains("mechanism")) eta = summary["mechanism"].value("eta", eta);
  if (o.eta) eta = *o.eta;
  const double B = caps.front();

  Schedule bench;
  BenchConstraint constraint{B, constant_slack(0.0)};
  if (o.bench == "opt_fractional") {
    bench = opt_fractional(std::span<const Transaction>(arrivals), B, T);
  } else if (o.bench == "opt_integral") {
    bench = opt_integral_small(std::span<const Transaction>(arrivals), B, T);
  } else {
    bench = io::schedule_from_json(json_arg(o.bench), o.bench + ": ");
    validate_schedule(bench, table);
    constraint.slack = constant_slack(o.bench_slack);
  }

  const auto th = check_threshold_dominance(alg, bench, table, T, gamma, eta, constraint);
  const auto wf = check_welfare_dominance(alg, bench, table, T, gamma, eta, constraint);
  const bool pass = th.pass && wf.pass;
  if (o.format == "csv") {
    std::cout << "check,pass,metric\n";
    std::cout << "threshold_dominance," << (th.pass ? "true" : "false") << "," << th.violations.size() << "\n";
    std::cout << "welfare_dominance," << (wf.pass ? "true" : "false") << "," << suite::format_number(wf.ratio)
              << "\n";
  } else {
    json r = {{"pass", pass}, {"T", T}, {"gamma", gamma}, {"eta", eta}, {"benchmark", o.bench},
              {"threshold", io::to_json(th)}, {"welfare", io::to_json(wf)}};
    std::cout << r.dump(1) << "\n";
  }
  return pass ? kPass : kFail;
}

// ---------------------------------------------------------------------------
// suite
// ---------------------------------------------------------------------------

int cmd_suite(const std::string& name, std::uint64_t seeds, const std::string& out, const std::string& format) {
  const auto rows = suite::run_suite(name, seeds);
  std::string body;
  if (format == "json") {
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"suite", r.suite}, {"seed", r.seed}, {"metric", io::detail::number_or_inf(r.metric)},
                     {"bound", io::detail::number_or_inf(r.bound)}, {"pass", r.pass}});
    }
    body = arr.dump(1) + "\n";
  } else {
    std::ostringstream ss;
    suite::write_csv(ss, rows);
    body = ss.str();
  }
  if (out.empty() || out == "-") {
    std::cout << body;
  } else {
    write_atomic(out, body);
  }
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.pass ? 0 : 1;
  std::cerr << rows.size() << " rows, " << failed << " failed\n";
  return failed == 0 ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fee market simulator: mechanisms, benchmarks, adversarial constructions"};
  app.require_subcommand(1);

  RunOptions ro;
  std::int64_t run_horizon = -1;
  auto* run = app.add_subcommand("run", "Run a mechanism on a scenario and write trace, schedule and summary");
  run->add_option("--scenario", ro.scenario, "Builtin name or scenario JSONL file")->required();
  run->add_option("--set", ro.sets, "Builtin parameter override key=value (repeatable)");
  run->add_option("--mechanism", ro.mechanism, "Mechanism config: JSON file or inline object");
  run->add_option("--policy", ro.policy, "Inclusion policy")
      ->check(CLI::IsMember({"tip", "value_asc", "value_desc", "random"}));
  run->add_option("--horizon", run_horizon, "Blocks to simulate (default: scenario horizon)");
  run->add_option("--seed", ro.seed, "Seed for generated scenarios and the random policy");
  run->add_option("--out", ro.out, "Output directory");
  run->add_option("--format", ro.format, "Summary format")->check(CLI::IsMember({"json", "csv"}));

  VerifyOptions vo;
  std::int64_t verify_T = -1;
  std::int64_t verify_gamma = -1;
  double verify_eta = -1.0;
  auto* verify = app.add_subcommand("verify", "Check a run against a benchmark schedule");
  verify->add_option("--run", vo.run, "Directory written by 'run'")->required();
  verify->add_option("--bench", vo.bench, "opt_fractional, opt_integral, or a schedule JSON file");
  verify->add_option("--horizon", verify_T, "Benchmark horizon T (default: from summary)");
  verify->add_option("--gamma", verify_gamma, "Extension Gamma (default: run horizon - T)");
  verify->add_option("--eta", verify_eta, "Learning rate eta (default: from summary)");
  verify->add_option("--bench-slack", vo.bench_slack, "Slackness the benchmark file may use");
  verify->add_option("--format", vo.format, "Report format")->check(CLI::IsMember({"json", "csv"}));

  std::string suite_name;
  std::uint64_t seeds = 100;
  std::string suite_out;
  std::string suite_format = "csv";
  auto* suite_cmd = app.add_subcommand("suite", "Run a check suite and emit (suite,seed,metric,bound,pass) rows");
  suite_cmd->add_option("name", suite_name, "theorems | greedy | lower_bounds | all")
      ->required()
      ->check(CLI::IsMember({"theorems", "greedy", "lower_bounds", "all"}));
  suite_cmd->add_option("--seeds", seeds, "Seeds per randomized suite");
  suite_cmd->add_option("--out", suite_out, "Output file (default: stdout)");
  suite_cmd->add_option("--format", suite_format, "Output format")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run) {
      if (run_horizon >= 0) ro.horizon = run_horizon;
      return cmd_run(ro);
    }
    if (*verify) {
      if (verify_T >= 0) vo.T = verify_T;
      if (verify_gamma >= 0) vo.gamma = verify_gamma;
      if (verify_eta >= 0.0) vo.eta = verify_eta;
      return cmd_verify(vo);
    }
    return cmd_suite(suite_name, seeds, suite_out, suite_format);
  } catch (const Error& e) {
    std::cerr << "feemarket: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "feemarket: " << e.what() << "\n";
    return kUsage;
  }
}
