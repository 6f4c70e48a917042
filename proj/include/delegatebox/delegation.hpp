#pragma once

// Delegation: single-proposal mechanisms with inspection (SPMI), signaling
// mechanisms, agent best responses, and the composed mechanisms.

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "delegatebox/core.hpp"
#include "delegatebox/pandora.hpp"

namespace delegatebox {

// ---------------------------------------------------------------------------
// Agents
// ---------------------------------------------------------------------------

/// Fixed agent utilities y_1..y_n.
template <Scalar T>
struct DeterministicAgent {
  std::vector<T> utilities;
};

/// Independent agent utilities Y_i ~ D_{Y_i}.
template <Scalar T>
struct DistributionalAgent {
  std::vector<DiscreteDistribution<T>> utilities;
};

template <Scalar T>
using AgentProfile = std::variant<DeterministicAgent<T>, DistributionalAgent<T>>;

/// Adversarial proposer inside the SPMI class: among eligible alternatives it
/// proposes the one minimizing X_i - c_i.
struct WorstCaseAgent {};

template <Scalar T>
void validate_agent(const Instance<T>& instance, const AgentProfile<T>& agent) {
  const std::size_t n = std::visit([](const auto& a) { return a.utilities.size(); }, agent);
  if (n != instance.size()) throw Error(ErrorKind::InvalidAgent, "agent profile length differs from instance size");
  if (auto* det = std::get_if<DeterministicAgent<T>>(&agent))
    for (const auto& y : det->utilities)
      if (y < 0) throw Error(ErrorKind::InvalidAgent, "agent utilities must be nonnegative");
}

/// The agent whose utility strictly decreases in (c({i}), i) order: cheaper
/// alternatives are preferred. This is the adversary of the overinspection bound.
template <Scalar T>
DeterministicAgent<T> cost_ordered_agent(const Instance<T>& instance) {
  const std::size_t n = instance.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return instance.singleton_cost(a) < instance.singleton_cost(b); });
  DeterministicAgent<T> agent;
  agent.utilities.assign(n, T(0));
  for (std::size_t rank = 0; rank < n; ++rank) agent.utilities[order[rank]] = T(static_cast<long>(n - rank));
  return agent;
}

// ---------------------------------------------------------------------------
// Thresholds
// ---------------------------------------------------------------------------

enum class ThresholdRule {
  /// Smallest support point of max Z at or above E[max Z] / 2. Guarantees half of
  /// E[max Z] under any choice among eligible alternatives, atoms included.
  HalfExpectedMax,
  /// Largest support point tau of max Z with Pr[max Z >= tau] >= 1/2. Matches the
  /// median rule for continuous laws; can lose the guarantee when Z has atoms.
  Median,
};

/// Single threshold for a prophet-style acceptance rule over independent Z_i.
template <Scalar T>
T prophet_threshold(std::span<const DiscreteDistribution<T>> dists, ThresholdRule rule = ThresholdRule::HalfExpectedMax) {
  const auto max_dist = max_distribution(dists);
  if (rule == ThresholdRule::Median) {
    T tail(0);
    for (std::size_t k = max_dist.size(); k-- > 0;) {
      tail += max_dist[k].prob;
      if (tail * 2 >= 1) return max_dist[k].value;
    }
    return max_dist.min_value();
  }
  const T half = max_dist.mean() / 2;
  if (half <= 0) return T(0);
  for (const auto& a : max_dist.atoms())
    if (a.value >= half) return a.value;
  return max_dist.max_value();
}

template <Scalar T>
struct Spmi {
  T threshold{0};

  /// Accept proposal i after inspecting it iff x_i - c_i >= threshold.
  bool eligible(const T& value, const T& cost) const { return value - cost >= threshold; }
};

/// SPMI with a threshold computed on Z_i = (X_i - c({i}))^+.
template <Scalar T>
Spmi<T> build_spmi(const Instance<T>& instance, ThresholdRule rule = ThresholdRule::HalfExpectedMax) {
  const auto z = shifted_positive(instance);
  return {prophet_threshold<T>(z, rule)};
}

namespace detail {

// SPMI proposal for one realization; nullopt is the null signal.
template <Scalar T>
std::optional<std::size_t> spmi_proposal(const Instance<T>& instance, const Spmi<T>& spmi, const Realization<T>& x,
                                         const std::vector<T>* agent_y) {
  std::optional<std::size_t> pick;
  for (std::size_t i = 0; i < instance.size(); ++i) {
    const T& c = instance.singleton_cost(i);
    if (!spmi.eligible(x.values[i], c)) continue;
    if (!pick) {
      pick = i;
      continue;
    }
    const T net_i = x.values[i] - c;
    const T net_p = x.values[*pick] - instance.singleton_cost(*pick);
    if (agent_y == nullptr) {
      if (net_i < net_p) pick = i;  // adversary
    } else {
      const T& yi = (*agent_y)[i];
      const T& yp = (*agent_y)[*pick];
      // Ties in agent utility resolve in the principal's favour.
      if (yi > yp || (yi == yp && net_i > net_p)) pick = i;
    }
  }
  return pick;
}

template <Scalar T>
Outcome spmi_outcome(const std::optional<std::size_t>& proposal) {
  Outcome out;
  out.delegated = true;
  if (proposal) {
    out.inspected = bit(*proposal);
    out.selected = proposal;
  }
  return out;
}

}  // namespace detail

/// Exact principal payoff of an SPMI against the adversarial proposer. c_Del is
/// charged even when nothing is eligible and the agent sends the null signal.
template <Scalar T>
T evaluate_spmi(const Instance<T>& instance, const Spmi<T>& spmi, WorstCaseAgent, const Limits& limits = {}) {
  return expectation(instance, limits, [&](const Realization<T>& x) {
    return principal_utility(instance, x, detail::spmi_outcome<T>(detail::spmi_proposal<T>(instance, spmi, x, nullptr)));
  });
}

template <Scalar T>
T evaluate_spmi(const Instance<T>& instance, const Spmi<T>& spmi, const AgentProfile<T>& agent,
                const Limits& limits = {}) {
  validate_agent(instance, agent);
  if (auto* det = std::get_if<DeterministicAgent<T>>(&agent)) {
    return expectation(instance, limits, [&](const Realization<T>& x) {
      return principal_utility(instance, x,
                               detail::spmi_outcome<T>(detail::spmi_proposal(instance, spmi, x, &det->utilities)));
    });
  }
  const auto& ydists = std::get<DistributionalAgent<T>>(agent).utilities;
  check_enumeration_limit(product_support_size(instance) * std::max<std::uint64_t>(1, product_support_size<T>(ydists)),
                          limits);
  T total(0);
  for_each_realization(instance, limits, [&](const Realization<T>& x, const T& px) {
    for_each_product<T>(ydists, limits, [&](const std::vector<T>& y, const T& py) {
      total += px * py *
               principal_utility(instance, x, detail::spmi_outcome<T>(detail::spmi_proposal(instance, spmi, x, &y)));
    });
  });
  return total;
}

// ---------------------------------------------------------------------------
// Signaling mechanisms
// ---------------------------------------------------------------------------

/// Finite signal set; each signal commits the principal to an inspection policy.
template <Scalar T>
struct SignalingMechanism {
  std::vector<std::string> signals;
  std::vector<PnoiPolicy<T>> policies;

  std::size_t size() const { return signals.size(); }

  void validate() const {
    if (signals.empty()) throw Error(ErrorKind::InvalidMechanism, "a mechanism needs at least one signal");
    if (signals.size() != policies.size())
      throw Error(ErrorKind::InvalidMechanism, "every signal needs exactly one policy");
  }
};

/// A mechanism that runs `policy` whatever the agent says.
template <Scalar T>
SignalingMechanism<T> signal_independent(const PnoiPolicy<T>& policy, std::size_t copies = 1) {
  SignalingMechanism<T> mech;
  for (std::size_t s = 0; s < copies; ++s) {
    mech.signals.push_back("s" + std::to_string(s));
    mech.policies.push_back(policy);
  }
  return mech;
}

/// SPMI written as a signaling mechanism: signal 0 is the null proposal, signal
/// i+1 proposes alternative i.
template <Scalar T>
SignalingMechanism<T> spmi_as_signaling(const Instance<T>& instance, const Spmi<T>& spmi) {
  SignalingMechanism<T> mech;
  const Mask all = instance.all();
  PnoiPolicy<T> null_policy;
  null_policy.set({all, std::nullopt}, Action::stop());
  mech.signals.push_back("none");
  mech.policies.push_back(std::move(null_policy));
  for (std::size_t i = 0; i < instance.size(); ++i) {
    PnoiPolicy<T> p;
    p.set({all, std::nullopt}, Action::inspect(i));
    for (const auto& atom : instance[i].dist.atoms())
      p.set({all & ~bit(i), atom.value},
            spmi.eligible(atom.value, instance.singleton_cost(i)) ? Action::select_opened_best() : Action::stop());
    mech.signals.push_back("propose:" + std::to_string(i));
    mech.policies.push_back(std::move(p));
  }
  return mech;
}

/// The agent's signal for one realization: maximize the agent's utility of the
/// selected alternative (0 when nothing is selected), then the principal's
/// payoff, then prefer the lowest signal index.
template <Scalar T>
std::size_t agent_best_response(const Instance<T>& instance, const SignalingMechanism<T>& mech,
                                const Realization<T>& x, std::span<const T> agent_utilities) {
  mech.validate();
  std::size_t best = 0;
  T best_agent(0);
  T best_principal(0);
  for (std::size_t s = 0; s < mech.size(); ++s) {
    const Outcome out = run_policy(instance, mech.policies[s], x);
    T agent = out.selected ? agent_utilities[*out.selected] : T(0);
    T principal = principal_utility(instance, x, out);
    if (s == 0 || agent > best_agent || (agent == best_agent && principal > best_principal)) {
      best = s;
      best_agent = std::move(agent);
      best_principal = std::move(principal);
    }
  }
  return best;
}

/// Visits (realization, executed outcome, probability) for a delegated run of
/// `mech` against `agent`. Distributional agents are enumerated jointly with X.
template <Scalar T, class Fn>
void for_each_signaling_outcome(const Instance<T>& instance, const SignalingMechanism<T>& mech,
                                const AgentProfile<T>& agent, const Limits& limits, Fn&& fn) {
  mech.validate();
  validate_agent(instance, agent);
  auto outcome_for = [&](const Realization<T>& x, std::span<const T> y) {
    const std::size_t s = agent_best_response(instance, mech, x, y);
    Outcome out = run_policy(instance, mech.policies[s], x);
    out.delegated = true;
    return out;
  };
  if (auto* det = std::get_if<DeterministicAgent<T>>(&agent)) {
    for_each_realization(instance, limits, [&](const Realization<T>& x, const T& p) {
      fn(x, outcome_for(x, det->utilities), p);
    });
    return;
  }
  const auto& ydists = std::get<DistributionalAgent<T>>(agent).utilities;
  check_enumeration_limit(product_support_size(instance) * std::max<std::uint64_t>(1, product_support_size<T>(ydists)),
                          limits);
  for_each_realization(instance, limits, [&](const Realization<T>& x, const T& px) {
    for_each_product<T>(ydists, limits, [&](const std::vector<T>& y, const T& py) {
      fn(x, outcome_for(x, std::span<const T>(y)), T(px * py));
    });
  });
}

/// E[(sum A_i X_i - c(inspected)) - c_Del] with the agent best-responding.
template <Scalar T>
T evaluate_signaling(const Instance<T>& instance, const SignalingMechanism<T>& mech, const AgentProfile<T>& agent,
                     const Limits& limits = {}) {
  T total(0);
  for_each_signaling_outcome(instance, mech, agent, limits, [&](const Realization<T>& x, const Outcome& out, const T& p) {
    total += p * principal_utility(instance, x, out);
  });
  return total;
}

/// E[sum_i X_i A_i 1{U_i = 0}] where U_i says some j with c_j >= c_i was inspected.
template <Scalar T>
T overinspection_utility(const Instance<T>& instance, const SignalingMechanism<T>& mech, const AgentProfile<T>& agent,
                         const Limits& limits = {}) {
  const std::size_t n = instance.size();
  std::vector<Mask> dominating(n, 0);  // {j : c_j >= c_i}
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (instance.singleton_cost(j) >= instance.singleton_cost(i)) dominating[i] |= bit(j);
  T total(0);
  for_each_signaling_outcome(instance, mech, agent, limits, [&](const Realization<T>& x, const Outcome& out, const T& p) {
    if (out.selected && (out.inspected & dominating[*out.selected]) == 0) total += p * x.values[*out.selected];
  });
  return total;
}

/// E[sum_i X_i A_i 1{I_i = 0}]: value collected from alternatives never inspected.
template <Scalar T>
T uninspected_selection_utility(const Instance<T>& instance, const SignalingMechanism<T>& mech,
                                const AgentProfile<T>& agent, const Limits& limits = {}) {
  T total(0);
  for_each_signaling_outcome(instance, mech, agent, limits, [&](const Realization<T>& x, const Outcome& out, const T& p) {
    if (out.selected && !contains(out.inspected, *out.selected)) total += p * x.values[*out.selected];
  });
  return total;
}

// ---------------------------------------------------------------------------
// Composed mechanisms
// ---------------------------------------------------------------------------

enum class Branch { Spmi, SelectBestClosed, PnoiDirect };

inline constexpr std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::Spmi: return "SPMI";
    case Branch::SelectBestClosed: return "SelectBestClosed";
    case Branch::PnoiDirect: return "PnoiDirect";
  }
  return "?";
}

template <Scalar T>
struct MechanismReport {
  std::string mechanism;
  Branch chosen_branch = Branch::SelectBestClosed;
  T value{0};          ///< realized value of the executed branch
  std::optional<T> v1; ///< non-delegating branch estimate
  std::optional<T> v2; ///< delegating branch estimate
  std::optional<T> threshold;
  std::optional<std::size_t> closed_index;
  T expected_max_shifted{0};  ///< E[max_i (X_i - c_i)^+]
  bool delegated = false;
  /// How the agent was modelled when evaluating the delegating branch.
  std::string agent_model;
};

/// argmax_i E[X_i] (lowest index on ties) and its value; no cost is incurred.
template <Scalar T>
std::pair<std::size_t, T> best_closed_selection(const Instance<T>& instance) {
  return max_expected(instance);
}

namespace detail {

inline constexpr const char* kSpmiAgentModel = "worst case within the SPMI class (adversarial eligible proposal)";

template <Scalar T>
void run_spmi_branch(const Instance<T>& instance, MechanismReport<T>& report, const Limits& limits) {
  const Spmi<T> spmi = build_spmi(instance);
  report.chosen_branch = Branch::Spmi;
  report.threshold = spmi.threshold;
  report.value = evaluate_spmi(instance, spmi, WorstCaseAgent{}, limits);
  report.delegated = true;
  report.agent_model = kSpmiAgentModel;
}

}  // namespace detail

/// Runs the larger of max_i E[X_i] (closed selection) and E[max Z]/2 (SPMI).
/// Requires free delegation.
template <Scalar T>
MechanismReport<T> maximal_mechanism_costless(const Instance<T>& instance, const Limits& limits = {}) {
  if (instance.delegation_cost() != 0)
    throw Error(ErrorKind::NotCostless, "maximal mechanism requires c_Del = 0");
  MechanismReport<T> report;
  report.mechanism = "maximal";
  auto [index, closed] = best_closed_selection(instance);
  report.expected_max_shifted = expected_of_max(instance, MaxTransform::ShiftedPositive, limits);
  report.v1 = closed;
  report.v2 = report.expected_max_shifted / 2;
  if (*report.v2 > *report.v1) {
    detail::run_spmi_branch(instance, report, limits);
  } else {
    report.chosen_branch = Branch::SelectBestClosed;
    report.closed_index = index;
    report.value = closed;
  }
  return report;
}

template <Scalar T>
using PnoiOracle = std::function<T(const Instance<T>&, const Limits&)>;

template <Scalar T>
PnoiOracle<T> exact_pnoi_oracle() {
  return [](const Instance<T>& inst, const Limits& limits) { return pnoi_optimal(inst, limits).value; };
}

/// v1 = PNOI oracle value, v2 = E[max Z]/2 - c_Del; runs the PNOI policy when
/// v1 >= v2, otherwise the SPMI.
template <Scalar T>
MechanismReport<T> costly_mechanism(const Instance<T>& instance, const PnoiOracle<T>& oracle = exact_pnoi_oracle<T>(),
                                    const Limits& limits = {}) {
  MechanismReport<T> report;
  report.mechanism = "costly";
  report.expected_max_shifted = expected_of_max(instance, MaxTransform::ShiftedPositive, limits);
  report.v1 = oracle(instance, limits);
  report.v2 = report.expected_max_shifted / 2 - instance.delegation_cost();
  if (*report.v1 >= *report.v2) {
    report.chosen_branch = Branch::PnoiDirect;
    report.value = *report.v1;
  } else {
    detail::run_spmi_branch(instance, report, limits);
  }
  return report;
}

/// Equal inspection costs and free delegation: runs the larger of max_i E[X_i]
/// and (E[max_i X_i] - c)/2.
template <Scalar T>
MechanismReport<T> identical_cost_mechanism(const Instance<T>& instance, const Limits& limits = {}) {
  const T& c = instance.singleton_cost(0);
  for (std::size_t i = 1; i < instance.size(); ++i)
    if (instance.singleton_cost(i) != c)
      throw Error(ErrorKind::CostsNotIdentical, "alternative " + std::to_string(i) + " has a different cost");
  if (instance.delegation_cost() != 0)
    throw Error(ErrorKind::NotCostless, "identical-cost mechanism requires c_Del = 0");
  MechanismReport<T> report;
  report.mechanism = "identical";
  auto [index, closed] = best_closed_selection(instance);
  report.expected_max_shifted = expected_of_max(instance, MaxTransform::ShiftedPositive, limits);
  report.v1 = closed;
  report.v2 = (expected_of_max(instance, MaxTransform::Identity, limits) - c) / 2;
  if (*report.v2 > *report.v1) {
    detail::run_spmi_branch(instance, report, limits);
  } else {
    report.chosen_branch = Branch::SelectBestClosed;
    report.closed_index = index;
    report.value = closed;
  }
  return report;
}

}  // namespace delegatebox
