#pragma once

// JSON reading and writing. Exact values are written as "p/q" strings; inputs
// may be numbers, decimal strings or fractions.

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "delegatebox/bounds.hpp"

namespace delegatebox {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "delegatebox/1";

namespace detail {

[[noreturn]] inline void schema_error(const std::string& what) { throw Error(ErrorKind::SchemaError, what); }

inline const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) schema_error(where + ": missing \"" + key + "\"");
  return j.at(key);
}

}  // namespace detail

template <Scalar T>
T scalar_from_json(const json& j) {
  if (j.is_string()) return parse_scalar<T>(j.get<std::string>());
  // Decimal numbers go through their shortest text form so 0.1 reads as 1/10.
  if (j.is_number()) return parse_scalar<T>(j.dump());
  detail::schema_error("expected a number or numeric string, got " + j.dump());
}

template <Scalar T>
json scalar_to_json(const T& v) {
  return to_string(v);
}

template <Scalar T>
json optional_to_json(const std::optional<T>& v) {
  return v ? scalar_to_json(*v) : json(nullptr);
}

// ---------------------------------------------------------------------------
// Distributions and instances
// ---------------------------------------------------------------------------

template <Scalar T>
DiscreteDistribution<T> distribution_from_json(const json& j) {
  if (!j.is_array()) detail::schema_error("support must be an array of [value, prob] pairs");
  std::vector<std::pair<T, T>> pairs;
  for (const auto& atom : j) {
    if (!atom.is_array() || atom.size() != 2) detail::schema_error("support atom must be [value, prob]");
    pairs.emplace_back(scalar_from_json<T>(atom[0]), scalar_from_json<T>(atom[1]));
  }
  return make_distribution(std::move(pairs));
}

template <Scalar T>
json distribution_to_json(const DiscreteDistribution<T>& d) {
  json out = json::array();
  for (const auto& a : d.atoms()) out.push_back(json::array({scalar_to_json(a.value), scalar_to_json(a.prob)}));
  return out;
}

/// Set keys are written "{0,2}"; braces are optional on input and "{}" is the empty set.
inline std::string mask_key(Mask m) {
  std::string out = "{";
  bool first = true;
  for (std::size_t i = 0; i < kMaxAlternatives; ++i)
    if (contains(m, i)) {
      if (!first) out += ",";
      out += std::to_string(i);
      first = false;
    }
  return out + "}";
}

inline Mask parse_mask_key(std::string key, std::size_t n) {
  if (!key.empty() && key.front() == '{') key.erase(0, 1);
  if (!key.empty() && key.back() == '}') key.pop_back();
  Mask m = 0;
  std::stringstream in(key);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.find_first_not_of(" ") == std::string::npos) continue;
    std::size_t idx = 0;
    try {
      std::size_t used = 0;
      idx = std::stoul(item, &used);
      if (item.find_first_not_of(" ", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      detail::schema_error("bad subset key '" + key + "'");
    }
    if (idx >= n) detail::schema_error("subset key '" + key + "' names an unknown alternative");
    m |= bit(idx);
  }
  return m;
}

template <Scalar T>
Instance<T> instance_from_json(const json& j) {
  const auto& alts_json = detail::field(j, "alternatives", "instance");
  if (!alts_json.is_array()) detail::schema_error("alternatives must be an array");
  std::vector<Alternative<T>> alts;
  for (const auto& a : alts_json) {
    Alternative<T> alt{distribution_from_json<T>(detail::field(a, "support", "alternative")), T(0)};
    if (a.contains("cost")) alt.inspect_cost = scalar_from_json<T>(a.at("cost"));
    alts.push_back(std::move(alt));
  }
  CostModel<T> model = AdditiveCosts<T>{};
  if (j.contains("cost_model")) {
    const auto& cm = j.at("cost_model");
    const std::string type = detail::field(cm, "type", "cost_model").get<std::string>();
    if (type == "monotone") {
      const auto& table_json = detail::field(cm, "table", "cost_model");
      if (!table_json.is_object()) detail::schema_error("monotone table must be an object keyed by subsets");
      const std::size_t n = alts.size();
      if (n > kMaxSetFunctionAlternatives) detail::schema_error("monotone table supports at most 20 alternatives");
      std::vector<std::optional<T>> table(std::size_t{1} << n);
      for (const auto& [key, value] : table_json.items()) table[parse_mask_key(key, n)] = scalar_from_json<T>(value);
      MonotoneSetCosts<T> set;
      for (std::size_t m = 0; m < table.size(); ++m) {
        if (!table[m]) detail::schema_error("monotone table has no entry for " + mask_key(static_cast<Mask>(m)));
        set.table.push_back(*table[m]);
      }
      model = std::move(set);
    } else if (type != "additive") {
      detail::schema_error("unknown cost_model type '" + type + "'");
    }
  }
  T cdel = j.contains("delegation_cost") ? scalar_from_json<T>(j.at("delegation_cost")) : T(0);
  return Instance<T>(std::move(alts), std::move(model), std::move(cdel));
}

template <Scalar T>
json instance_to_json(const Instance<T>& instance) {
  json out;
  out["schema"] = kSchemaVersion;
  json alts = json::array();
  for (const auto& a : instance.alternatives())
    alts.push_back({{"support", distribution_to_json(a.dist)}, {"cost", scalar_to_json(a.inspect_cost)}});
  out["alternatives"] = std::move(alts);
  if (auto* set = std::get_if<MonotoneSetCosts<T>>(&instance.cost_model())) {
    json table = json::object();
    for (std::size_t m = 0; m < set->table.size(); ++m) table[mask_key(static_cast<Mask>(m))] = scalar_to_json(set->table[m]);
    out["cost_model"] = {{"type", "monotone"}, {"table", std::move(table)}};
  } else {
    out["cost_model"] = {{"type", "additive"}};
  }
  out["delegation_cost"] = scalar_to_json(instance.delegation_cost());
  return out;
}

// ---------------------------------------------------------------------------
// Policies, mechanisms and agents
// ---------------------------------------------------------------------------

inline json indices_to_json(Mask m) {
  json out = json::array();
  for (std::size_t i = 0; i < kMaxAlternatives; ++i)
    if (contains(m, i)) out.push_back(i);
  return out;
}

template <Scalar T>
json policy_to_json(const PnoiPolicy<T>& policy) {
  json rows = json::array();
  for (const auto& [state, action] : policy.rows()) {
    json row;
    row["unopened"] = indices_to_json(state.unopened);
    row["best"] = optional_to_json(state.best);
    row["action"] = std::string(to_string(action.kind));
    if (action.kind == ActionKind::SelectClosed || action.kind == ActionKind::Inspect) row["index"] = action.index;
    rows.push_back(std::move(row));
  }
  return rows;
}

template <Scalar T>
PnoiPolicy<T> policy_from_json(const json& rows, std::size_t n) {
  if (!rows.is_array()) detail::schema_error("policy must be an array of rows");
  PnoiPolicy<T> policy;
  for (const auto& row : rows) {
    Mask unopened = 0;
    const auto& u = detail::field(row, "unopened", "policy row");
    if (!u.is_array()) detail::schema_error("policy row: unopened must be an array");
    for (const auto& i : u) {
      if (!i.is_number_unsigned() || i.get<std::size_t>() >= n) detail::schema_error("policy row: bad index " + i.dump());
      unopened |= bit(i.get<std::size_t>());
    }
    std::optional<T> best;
    if (row.contains("best") && !row.at("best").is_null()) best = scalar_from_json<T>(row.at("best"));
    const std::string kind = detail::field(row, "action", "policy row").get<std::string>();
    auto index = [&]() {
      const auto& i = detail::field(row, "index", "policy row");
      if (!i.is_number_unsigned()) detail::schema_error("policy row: index must be a nonnegative integer");
      return i.get<std::size_t>();
    };
    Action action;
    if (kind == "stop") action = Action::stop();
    else if (kind == "select_opened_best") action = Action::select_opened_best();
    else if (kind == "select_closed") action = Action::select_closed(index());
    else if (kind == "inspect") action = Action::inspect(index());
    else detail::schema_error("policy row: unknown action '" + kind + "'");
    policy.set({unopened, std::move(best)}, action);
  }
  return policy;
}

template <Scalar T>
json mechanism_to_json(const SignalingMechanism<T>& mech) {
  json out;
  out["signals"] = mech.signals;
  json policies = json::object();
  for (std::size_t s = 0; s < mech.size(); ++s) policies[mech.signals[s]] = policy_to_json(mech.policies[s]);
  out["policies"] = std::move(policies);
  return out;
}

template <Scalar T>
SignalingMechanism<T> mechanism_from_json(const json& j, std::size_t n) {
  SignalingMechanism<T> mech;
  const auto& signals = detail::field(j, "signals", "mechanism");
  const auto& policies = detail::field(j, "policies", "mechanism");
  if (!signals.is_array()) detail::schema_error("signals must be an array of names");
  for (const auto& s : signals) {
    const std::string name = s.is_string() ? s.get<std::string>() : s.dump();
    if (!policies.contains(name)) detail::schema_error("no policy for signal '" + name + "'");
    mech.signals.push_back(name);
    mech.policies.push_back(policy_from_json<T>(policies.at(name), n));
  }
  mech.validate();
  return mech;
}

/// {"type":"deterministic","utilities":[...]} or
/// {"type":"distributional","utilities":[support, ...]}.
template <Scalar T>
AgentProfile<T> agent_from_json(const json& j) {
  const std::string type = detail::field(j, "type", "agent").get<std::string>();
  const auto& u = detail::field(j, "utilities", "agent");
  if (!u.is_array()) detail::schema_error("agent utilities must be an array");
  if (type == "deterministic") {
    DeterministicAgent<T> a;
    for (const auto& v : u) a.utilities.push_back(scalar_from_json<T>(v));
    return a;
  }
  if (type == "distributional") {
    DistributionalAgent<T> a;
    for (const auto& d : u) a.utilities.push_back(distribution_from_json<T>(d));
    return a;
  }
  detail::schema_error("unknown agent type '" + type + "'");
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

template <Scalar T>
json report_to_json(const MechanismReport<T>& r) {
  json out;
  out["schema"] = kSchemaVersion;
  out["mechanism"] = r.mechanism;
  out["mode"] = std::string(to_string(ScalarTraits<T>::mode));
  out["branch"] = std::string(to_string(r.chosen_branch));
  out["value"] = scalar_to_json(r.value);
  out["v1"] = optional_to_json(r.v1);
  out["v2"] = optional_to_json(r.v2);
  out["threshold"] = optional_to_json(r.threshold);
  out["closed_index"] = r.closed_index ? json(*r.closed_index) : json(nullptr);
  out["expected_max_shifted"] = scalar_to_json(r.expected_max_shifted);
  out["delegated"] = r.delegated;
  out["agent_model"] = r.agent_model.empty() ? json(nullptr) : json(r.agent_model);
  return out;
}

template <Scalar T>
json audit_to_json(const AuditReport<T>& r) {
  json out;
  out["schema"] = kSchemaVersion;
  out["instance"] = r.instance_digest;
  out["regime"] = r.regime;
  out["mode"] = std::string(to_string(r.mode));
  out["ub_costless"] = scalar_to_json(r.ub_costless);
  out["ub_costly"] = scalar_to_json(r.ub_costly);
  out["ub_used"] = scalar_to_json(r.ub_used);
  out["opt_lower"] = scalar_to_json(r.opt_lower);
  out["mechanism_value"] = scalar_to_json(r.mechanism_value);
  out["ratio"] = optional_to_json(r.ratio);
  out["ratio_lower"] = optional_to_json(r.ratio_lower);
  out["claimed_bound"] = scalar_to_json(r.claimed_bound);
  out["tolerance"] = scalar_to_json(r.tolerance);
  out["pass"] = r.pass;
  return out;
}

inline json error_to_json(const Error& e) {
  return {{"schema", kSchemaVersion}, {"error", std::string(to_string(e.kind()))}, {"detail", e.what()}};
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out || !(out << text)) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
}

template <Scalar T>
Instance<T> load_instance(const std::string& path) {
  return instance_from_json<T>(read_json_file(path));
}

}  // namespace delegatebox
