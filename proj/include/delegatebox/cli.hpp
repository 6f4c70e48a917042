#pragma once

// Command-line front end: eval | audit | repro | gen. Needs CLI11 on the include path.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "delegatebox/delegatebox.hpp"
#include "delegatebox/sampling.hpp"

namespace delegatebox::cli {

enum class Command { Eval, Audit, Repro, Gen };

struct RunConfig {
  Command command = Command::Eval;
  std::string instance_path;
  std::string mechanism;
  std::string regime;
  std::optional<std::string> alpha;
  std::string signals_path;
  std::string agent;  ///< agent JSON path, or "cost-ordered"
  std::string threshold_rule = "half-expected-max";
  ArithmeticMode mode = ArithmeticMode::Exact;
  Limits limits{};
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  std::string format = "table";
  bool emit_policy = false;
  std::size_t corpus_size = 200;
  std::string output_path;

  // gen
  std::string family;
  std::size_t n = 0;
  std::string p = "1/2", v = "1", c = "0", eps = "1/10";
  std::size_t support = 3;
  std::string value_range = "0,4", cost_range = "0,2", cdel_range = "0,0";
  unsigned grid = 4;
  bool equal_costs = false;
};

/// Exit status for checks that ran but did not pass.
inline constexpr int kCheckFailed = 1;
/// Exit status for usage, I/O, schema and limit errors.
inline constexpr int kError = 2;

namespace detail {

// Two-column table; exact fractions also get a decimal.
inline std::string render_kv(const json& j) {
  std::size_t width = 0;
  for (const auto& [key, value] : j.items()) width = std::max(width, key.size());
  std::ostringstream out;
  for (const auto& [key, value] : j.items()) {
    out << std::left << std::setw(static_cast<int>(width + 2)) << key;
    if (value.is_string()) {
      const std::string text = value.get<std::string>();
      out << text;
      if (text.find('/') != std::string::npos) {
        try {
          const std::string approx = to_display(parse_scalar<Rational>(text));
          out << "  (~" << approx << ")";
        } catch (const Error&) {
        }
      }
    } else {
      out << value.dump();
    }
    out << "\n";
  }
  return out.str();
}

inline void emit(const json& j, const RunConfig& cfg, std::ostream& out) {
  if (cfg.format == "json") {
    out << j.dump(2) << "\n";
  } else {
    out << render_kv(j);
  }
}

template <Scalar T>
std::pair<T, T> parse_range(const std::string& text) {
  auto comma = text.find(',');
  if (comma == std::string::npos) throw Error(ErrorKind::InvalidParameters, "range must be 'lo,hi': " + text);
  return {parse_scalar<T>(text.substr(0, comma)), parse_scalar<T>(text.substr(comma + 1))};
}

template <Scalar T>
ThresholdRule threshold_rule(const RunConfig& cfg) {
  if (cfg.threshold_rule == "median") return ThresholdRule::Median;
  return ThresholdRule::HalfExpectedMax;
}

inline bool over_limit(std::uint64_t points, const Limits& limits) { return points > limits.max_points; }

inline json monte_carlo_json(const MonteCarloEstimate& e) {
  return {{"method", "monte-carlo"},
          {"estimate", e.mean},
          {"std_error", e.std_error},
          {"band_3se", json::array({e.lower(), e.upper()})},
          {"trials", e.trials},
          {"seed", e.seed}};
}

template <Scalar T>
AgentProfile<T> load_agent(const RunConfig& cfg, const Instance<T>& inst) {
  if (cfg.agent.empty() || cfg.agent == "cost-ordered") return cost_ordered_agent(inst);
  return agent_from_json<T>(read_json_file(cfg.agent));
}

template <Scalar T>
SignalingMechanism<T> load_signals(const RunConfig& cfg, const Instance<T>& inst) {
  if (!cfg.signals_path.empty()) return mechanism_from_json<T>(read_json_file(cfg.signals_path), inst.size());
  const json j = read_json_file(cfg.instance_path);
  if (!j.contains("mechanism"))
    throw Error(ErrorKind::InvalidParameters, "signaling needs --signals or a \"mechanism\" entry in the instance file");
  return mechanism_from_json<T>(j.at("mechanism"), inst.size());
}

template <Scalar T>
json base_record(const std::string& mechanism) {
  json j;
  j["schema"] = kSchemaVersion;
  j["mechanism"] = mechanism;
  j["mode"] = std::string(to_string(ScalarTraits<T>::mode));
  return j;
}

// Over-limit instances are sampled only when asked to, and only with a seed.
template <Scalar T, class G>
std::optional<json> maybe_sample(const RunConfig& cfg, const Instance<T>& inst, const std::string& mechanism, G&& g) {
  if (!over_limit(product_support_size(inst), cfg.limits)) return std::nullopt;
  if (!cfg.trials) return std::nullopt;  // exact evaluation will raise the limit error
  if (!cfg.seed) throw Error(ErrorKind::InvalidParameters, "--trials requires --seed");
  json j = base_record<T>(mechanism);
  j.update(monte_carlo_json(monte_carlo(inst, *cfg.trials, *cfg.seed, std::forward<G>(g))));
  return j;
}

template <Scalar T>
json eval_record(const RunConfig& cfg, const Instance<T>& inst) {
  const std::string& m = cfg.mechanism;
  const Limits& lim = cfg.limits;
  if (m == "pnoi") {
    const auto sol = pnoi_optimal(inst, lim);
    json j = base_record<T>(m);
    j["value"] = scalar_to_json(sol.value);
    j["states"] = sol.states_visited;
    j["delegated"] = false;
    if (cfg.emit_policy) j["policy"] = policy_to_json(sol.policy);
    return j;
  }
  if (m == "weitzman") {
    const auto caps = reservation_caps(inst);
    const auto order = descending_cap_order(caps);
    if (auto s = maybe_sample(cfg, inst, m, [&](const Realization<T>& x) {
          return principal_utility(inst, x, run_descending_cap_policy(caps, order, x));
        }))
      return *s;
    json j = base_record<T>(m);
    j["value"] = scalar_to_json(weitzman_value(inst, lim));
    json cap_list = json::array();
    for (const auto& cap : caps)
      cap_list.push_back({{"index", cap.alternative_index},
                          {"sigma", scalar_to_json(cap.sigma)},
                          {"never_inspect_worthwhile", cap.never_inspect_worthwhile}});
    j["caps"] = std::move(cap_list);
    return j;
  }
  if (m == "spmi") {
    const auto spmi = build_spmi(inst, threshold_rule<T>(cfg));
    const bool worst = cfg.agent.empty() || cfg.agent == "worst-case";
    std::optional<AgentProfile<T>> agent;
    if (!worst) agent = load_agent(cfg, inst);
    if (auto s = maybe_sample(cfg, inst, m, [&](const Realization<T>& x) {
          const std::vector<T>* y = nullptr;
          if (agent) {
            auto* det = std::get_if<DeterministicAgent<T>>(&*agent);
            if (det == nullptr) throw Error(ErrorKind::InvalidAgent, "sampling supports deterministic agents only");
            y = &det->utilities;
          }
          return principal_utility(inst, x, delegatebox::detail::spmi_outcome<T>(
                                                delegatebox::detail::spmi_proposal<T>(inst, spmi, x, y)));
        })) {
      (*s)["threshold"] = scalar_to_json(spmi.threshold);
      return *s;
    }
    json j = base_record<T>(m);
    j["threshold"] = scalar_to_json(spmi.threshold);
    j["value"] = scalar_to_json(worst ? evaluate_spmi(inst, spmi, WorstCaseAgent{}, lim)
                                      : evaluate_spmi(inst, spmi, *agent, lim));
    j["delegated"] = true;
    j["agent_model"] = worst ? delegatebox::detail::kSpmiAgentModel : "explicit agent profile";
    return j;
  }
  if (m == "signaling") {
    const auto mech = load_signals(cfg, inst);
    const auto agent = load_agent(cfg, inst);
    if (auto s = maybe_sample(cfg, inst, m, [&](const Realization<T>& x) {
          auto* det = std::get_if<DeterministicAgent<T>>(&agent);
          if (det == nullptr) throw Error(ErrorKind::InvalidAgent, "sampling supports deterministic agents only");
          const std::size_t sig = agent_best_response(inst, mech, x, std::span<const T>(det->utilities));
          Outcome out = run_policy(inst, mech.policies[sig], x);
          out.delegated = true;
          return principal_utility(inst, x, out);
        }))
      return *s;
    json j = base_record<T>(m);
    j["value"] = scalar_to_json(evaluate_signaling(inst, mech, agent, lim));
    j["overinspection_utility"] = scalar_to_json(overinspection_utility(inst, mech, agent, lim));
    j["uninspected_selection_utility"] = scalar_to_json(uninspected_selection_utility(inst, mech, agent, lim));
    j["max_expected"] = scalar_to_json(max_expected(inst).second);
    j["agent_model"] = cfg.agent.empty() || cfg.agent == "cost-ordered" ? "cost-ordered" : "explicit agent profile";
    return j;
  }
  if (m == "maximal") return report_to_json(maximal_mechanism_costless(inst, lim));
  if (m == "costly") return report_to_json(costly_mechanism(inst, exact_pnoi_oracle<T>(), lim));
  if (m == "identical") return report_to_json(identical_cost_mechanism(inst, lim));
  throw Error(ErrorKind::InvalidParameters, "unknown mechanism '" + m + "'");
}

template <Scalar T>
int run_eval(const RunConfig& cfg, std::ostream& out) {
  if (cfg.instance_path.empty()) throw Error(ErrorKind::InvalidParameters, "eval needs --instance");
  const auto inst = load_instance<T>(cfg.instance_path);
  const json j = eval_record(cfg, inst);
  json record;
  record["schema"] = kSchemaVersion;
  record["instance"] = instance_digest(inst);
  for (const auto& [key, value] : j.items()) record[key] = value;
  emit(record, cfg, out);
  return 0;
}

template <Scalar T>
MechanismReport<T> report_for(const RunConfig& cfg, const Instance<T>& inst, const std::string& regime) {
  std::string m = cfg.mechanism;
  if (m.empty()) m = regime == "costless" ? "maximal" : regime;
  if (m == "maximal") return maximal_mechanism_costless(inst, cfg.limits);
  if (m == "costly") return costly_mechanism(inst, exact_pnoi_oracle<T>(), cfg.limits);
  if (m == "identical") return identical_cost_mechanism(inst, cfg.limits);
  throw Error(ErrorKind::InvalidParameters, "audit supports maximal, costly and identical mechanisms, not '" + m + "'");
}

template <Scalar T>
int run_audit(const RunConfig& cfg, std::ostream& out) {
  if (cfg.instance_path.empty()) throw Error(ErrorKind::InvalidParameters, "audit needs --instance");
  if (cfg.trials) throw Error(ErrorKind::InvalidParameters, "audits are exact; Monte Carlo is not accepted");
  const auto inst = load_instance<T>(cfg.instance_path);
  Regime<T> regime;
  if (cfg.regime == "costless") {
    regime = CostlessRegime{};
  } else if (cfg.regime == "identical") {
    regime = IdenticalCostsRegime{};
  } else if (cfg.regime == "costly") {
    T alpha(0);
    if (cfg.alpha) {
      alpha = parse_scalar<T>(*cfg.alpha);
    } else {
      const T shifted = expected_of_max(inst, MaxTransform::ShiftedPositive, cfg.limits);
      if (shifted <= 0) throw Error(ErrorKind::RegimeMismatch, "cannot infer alpha: E[max Z] = 0");
      alpha = inst.delegation_cost() / shifted;
    }
    regime = CostlyRegime<T>{alpha};
  } else {
    throw Error(ErrorKind::InvalidParameters, "--regime must be costless, costly or identical");
  }
  check_regime(inst, regime, cfg.limits);
  const auto report = report_for(cfg, inst, cfg.regime);
  const auto a = audit(inst, report, regime, cfg.limits);
  if (cfg.format == "json") {
    json j = audit_to_json(a);
    j["mechanism"] = report_to_json(report);
    out << j.dump(2) << "\n";
  } else {
    out << render_table(a);
  }
  return a.pass ? 0 : kCheckFailed;
}

template <Scalar T>
int run_repro_command(const RunConfig& cfg, std::ostream& out) {
  ReproOptions opt;
  opt.seed = cfg.seed.value_or(7);
  opt.corpus_size = cfg.corpus_size;
  opt.limits = cfg.limits;
  const auto rows = run_repro<T>(opt);
  const json j = repro_to_json<T>(rows, opt);
  if (cfg.format == "json") {
    out << j.dump(2) << "\n";
  } else {
    out << render_repro_table(rows);
  }
  return j.at("all_pass").get<bool>() ? 0 : kCheckFailed;
}

template <Scalar T>
int run_gen(const RunConfig& cfg, std::ostream& out) {
  json params;
  GeneratorSpec<T> spec;
  const std::string& f = cfg.family;
  if (f == "identical-binary") {
    spec = IdenticalBinarySpec<T>{cfg.n ? cfg.n : 6, parse_scalar<T>(cfg.p), parse_scalar<T>(cfg.v),
                                  parse_scalar<T>(cfg.c)};
    params = {{"n", cfg.n ? cfg.n : 6}, {"p", cfg.p}, {"v", cfg.v}, {"c", cfg.c}};
  } else if (f == "tightness") {
    spec = TightnessSpec<T>{parse_scalar<T>(cfg.eps)};
    params = {{"eps", cfg.eps}};
  } else if (f == "inapx-firstbest") {
    spec = InapproxFirstBestSpec{cfg.n ? cfg.n : 10};
    params = {{"n", cfg.n ? cfg.n : 10}};
  } else if (f == "info-value") {
    spec = InfoValueSpec<T>{cfg.n ? cfg.n : 5, parse_scalar<T>(cfg.eps)};
    params = {{"n", cfg.n ? cfg.n : 5}, {"eps", cfg.eps}};
  } else if (f == "spmi-fail") {
    spec = SpmiFailSpec{cfg.n ? cfg.n : 2};
    params = {{"n", cfg.n ? cfg.n : 2}};
  } else if (f == "random") {
    if (!cfg.seed) throw Error(ErrorKind::InvalidParameters, "random instances need --seed");
    RandomSpec<T> r;
    r.seed = *cfg.seed;
    r.n = cfg.n ? cfg.n : 3;
    r.support_size = cfg.support;
    std::tie(r.value_lo, r.value_hi) = parse_range<T>(cfg.value_range);
    std::tie(r.cost_lo, r.cost_hi) = parse_range<T>(cfg.cost_range);
    std::tie(r.cdel_lo, r.cdel_hi) = parse_range<T>(cfg.cdel_range);
    r.grid = cfg.grid;
    r.equal_costs = cfg.equal_costs;
    spec = r;
    params = {{"seed", *cfg.seed},          {"n", r.n},         {"support", r.support_size},
              {"value_range", cfg.value_range}, {"cost_range", cfg.cost_range}, {"cdel_range", cfg.cdel_range},
              {"grid", r.grid},             {"equal_costs", r.equal_costs}};
  } else {
    throw Error(ErrorKind::InvalidParameters,
                "--family must be identical-binary, tightness, inapx-firstbest, info-value, spmi-fail or random");
  }
  const auto g = gen<T>(spec);
  json j = instance_to_json(g.instance);
  j["generator"] = {{"family", f}, {"params", params}};
  if (g.mechanism) j["mechanism"] = mechanism_to_json(*g.mechanism);
  const std::string text = j.dump(2) + "\n";
  if (cfg.output_path.empty()) {
    out << text;
  } else {
    write_text_file(cfg.output_path, text);
  }
  return 0;
}

template <Scalar T>
int dispatch(const RunConfig& cfg, std::ostream& out) {
  switch (cfg.command) {
    case Command::Eval: return run_eval<T>(cfg, out);
    case Command::Audit: return run_audit<T>(cfg, out);
    case Command::Repro: return run_repro_command<T>(cfg, out);
    case Command::Gen: return run_gen<T>(cfg, out);
  }
  return kError;
}

}  // namespace detail

/// Executes a parsed configuration. Library errors become a JSON error record on
/// `err` and exit status 2.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    return cfg.mode == ArithmeticMode::Exact ? detail::dispatch<Rational>(cfg, out)
                                             : detail::dispatch<double>(cfg, out);
  } catch (const Error& e) {
    err << error_to_json(e).dump() << "\n";
    return kError;
  } catch (const json::exception& e) {
    err << error_to_json(Error(ErrorKind::SchemaError, e.what())).dump() << "\n";
    return kError;
  } catch (const std::exception& e) {
    err << error_to_json(Error(ErrorKind::InternalInconsistency, e.what())).dump() << "\n";
    return kError;
  }
}

/// Parses argv into a RunConfig and runs it.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Delegated choice with inspection costs: evaluate, audit, reproduce, generate."};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string mode_text = "exact";
  bool exact_flag = false;
  bool float_flag = false;
  std::uint64_t limit = cfg.limits.max_points;
  std::uint64_t state_limit = cfg.limits.max_states;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;

  std::vector<CLI::Option*> seed_opts;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--mode", mode_text, "exact or float")->envname("DELEGATEBOX_MODE")->check(
        CLI::IsMember({"exact", "float"}));
    sub->add_flag("--exact", exact_flag, "exact rational arithmetic (default)");
    sub->add_flag("--float", float_flag, "double precision with tolerance 1e-9");
    sub->add_option("--limit", limit, "max product-support points enumerated")->envname("DELEGATEBOX_LIMIT");
    sub->add_option("--state-limit", state_limit, "max PNOI dynamic-programming states")
        ->envname("DELEGATEBOX_STATE_LIMIT");
    sub->add_option("--format", cfg.format, "table or json")->envname("DELEGATEBOX_FORMAT")->check(
        CLI::IsMember({"table", "json"}));
    seed_opts.push_back(sub->add_option("--seed", seed, "random seed")->envname("DELEGATEBOX_SEED"));
  };

  auto* eval = app.add_subcommand("eval", "evaluate a mechanism on an instance");
  auto* aud = app.add_subcommand("audit", "check a mechanism against its approximation guarantee");
  auto* repro = app.add_subcommand("repro", "run the fixed suite of numeric claims");
  auto* gen_cmd = app.add_subcommand("gen", "write a generated instance as JSON");
  for (auto* sub : {eval, aud, repro, gen_cmd}) common(sub);

  for (auto* sub : {eval, aud}) {
    sub->add_option("--instance", cfg.instance_path, "instance JSON file")->envname("DELEGATEBOX_INSTANCE");
    sub->add_option("--threshold-rule", cfg.threshold_rule, "half-expected-max or median")
        ->check(CLI::IsMember({"half-expected-max", "median"}));
  }
  eval->add_option("--mechanism", cfg.mechanism, "pnoi, spmi, maximal, costly, identical, weitzman or signaling")
      ->required()
      ->check(CLI::IsMember({"pnoi", "spmi", "maximal", "costly", "identical", "weitzman", "signaling"}));
  eval->add_option("--signals", cfg.signals_path, "signaling mechanism JSON (signaling only)");
  eval->add_option("--agent", cfg.agent, "agent JSON file, 'cost-ordered' or 'worst-case'");
  eval->add_option("--trials", trials, "Monte Carlo trials for instances above --limit")
      ->envname("DELEGATEBOX_TRIALS");
  eval->add_flag("--emit-policy", cfg.emit_policy, "include the PNOI decision table");

  aud->add_option("--mechanism", cfg.mechanism, "maximal, costly or identical (default follows the regime)")
      ->check(CLI::IsMember({"maximal", "costly", "identical"}));
  aud->add_option("--regime", cfg.regime, "costless, costly or identical")
      ->required()
      ->check(CLI::IsMember({"costless", "costly", "identical"}));
  std::string alpha_text;
  auto* alpha_opt = aud->add_option("--alpha", alpha_text, "c_Del / E[max Z] for the costly regime (inferred if omitted)");

  repro->add_option("--corpus", cfg.corpus_size, "instances per seeded corpus row");

  gen_cmd->add_option("--family", cfg.family,
                      "identical-binary, tightness, inapx-firstbest, info-value, spmi-fail or random")
      ->required();
  gen_cmd->add_option("--n", cfg.n, "number of alternatives");
  gen_cmd->add_option("--p", cfg.p, "success probability (identical-binary)");
  gen_cmd->add_option("--v", cfg.v, "success value (identical-binary)");
  gen_cmd->add_option("--c", cfg.c, "inspection cost (identical-binary)");
  gen_cmd->add_option("--eps", cfg.eps, "epsilon (tightness, info-value)");
  gen_cmd->add_option("--support", cfg.support, "max support size (random)");
  gen_cmd->add_option("--value-range", cfg.value_range, "lo,hi (random)");
  gen_cmd->add_option("--cost-range", cfg.cost_range, "lo,hi (random)");
  gen_cmd->add_option("--cdel-range", cfg.cdel_range, "lo,hi (random)");
  gen_cmd->add_option("--grid", cfg.grid, "grid resolution 1/grid (random)");
  gen_cmd->add_flag("--equal-costs", cfg.equal_costs, "one shared inspection cost (random)");
  gen_cmd->add_option("--output,-o", cfg.output_path, "write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << json{{"schema", kSchemaVersion}, {"error", "UsageError"}, {"detail", e.what()}}.dump() << "\n";
    return kError;
  }

  if (exact_flag && float_flag) {
    err << json{{"schema", kSchemaVersion}, {"error", "UsageError"}, {"detail", "--exact and --float conflict"}}.dump()
        << "\n";
    return kError;
  }
  cfg.mode = float_flag ? ArithmeticMode::Float
             : exact_flag ? ArithmeticMode::Exact
             : (mode_text == "float" ? ArithmeticMode::Float : ArithmeticMode::Exact);
  cfg.limits = {limit, state_limit};
  if (trials > 0) cfg.trials = trials;
  for (auto* opt : seed_opts)
    if (opt->count() > 0) cfg.seed = seed;
  if (alpha_opt->count() > 0) cfg.alpha = alpha_text;
  if (eval->parsed()) cfg.command = Command::Eval;
  if (aud->parsed()) cfg.command = Command::Audit;
  if (repro->parsed()) cfg.command = Command::Repro;
  if (gen_cmd->parsed()) cfg.command = Command::Gen;
  return run(cfg, out, err);
}

}  // namespace delegatebox::cli
