#pragma once

// Pandora's box machinery: reservation caps, the descending-cap (Weitzman) policy,
// and an exact optimal policy for nonobligatory inspection.

#include <algorithm>
#include <compare>
#include <map>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <vector>

#include "delegatebox/core.hpp"

namespace delegatebox {

// ---------------------------------------------------------------------------
// Caps
// ---------------------------------------------------------------------------

/// Reservation value sigma solving E[(X - sigma)^+] = c.
template <Scalar T>
struct Cap {
  T sigma{0};
  std::size_t alternative_index = 0;
  /// Set when c > E[X]: no cap exists and sigma is pinned to 0.
  bool never_inspect_worthwhile = false;
};

/// Inverts the decreasing piecewise-linear map sigma -> E[(X - sigma)^+].
/// c = 0 yields the largest support value; c > E[X] yields 0 with the flag set.
template <Scalar T>
Cap<T> reservation_cap(const Alternative<T>& alt, std::size_t index = 0) {
  const auto& dist = alt.dist;
  const T& c = alt.inspect_cost;
  Cap<T> cap;
  cap.alternative_index = index;
  if (c <= 0) {
    cap.sigma = dist.max_value();
    return cap;
  }
  const T mean = dist.mean();
  if (c > mean) {
    cap.never_inspect_worthwhile = true;
    return cap;
  }
  // Walk breakpoints from the top. On [lo, hi] where the atoms strictly above lo
  // are exactly those with index >= k, E[(X - s)^+] = tail_vp - s * tail_p.
  T tail_p(0);
  T tail_vp(0);
  for (std::size_t k = dist.size(); k-- > 0;) {
    tail_p += dist[k].prob;
    tail_vp += dist[k].prob * dist[k].value;
    const T lo = k == 0 ? T(0) : dist[k - 1].value;
    const T excess_at_lo = tail_vp - lo * tail_p;
    if (excess_at_lo >= c) {
      cap.sigma = (tail_vp - c) / tail_p;
      if (cap.sigma < lo) cap.sigma = lo;  // float guard; exact mode never clamps
      return cap;
    }
  }
  // c <= E[X] = excess at 0, so the loop always returns.
  cap.sigma = T(0);
  return cap;
}

template <Scalar T>
std::vector<Cap<T>> reservation_caps(const Instance<T>& instance) {
  if (!instance.additive())
    throw Error(ErrorKind::UnsupportedCostModel, "caps are defined for additive inspection costs");
  std::vector<Cap<T>> caps;
  for (std::size_t i = 0; i < instance.size(); ++i) caps.push_back(reservation_cap(instance[i], i));
  return caps;
}

/// |E[(X - sigma)^+] - c|
template <Scalar T>
T cap_residual(const Alternative<T>& alt, const Cap<T>& cap) {
  T r = alt.dist.expected_excess(cap.sigma) - alt.inspect_cost;
  return r < 0 ? T(-r) : r;
}

/// Distribution of kappa = min(X, sigma).
template <Scalar T>
DiscreteDistribution<T> capped_value_distribution(const Alternative<T>& alt, const Cap<T>& cap) {
  const bool consistent = cap.never_inspect_worthwhile
                              ? (cap.sigma == 0 && alt.inspect_cost > alt.dist.mean())
                              : approx_eq(alt.dist.expected_excess(cap.sigma), alt.inspect_cost);
  if (!consistent) throw Error(ErrorKind::CapMismatch, "cap sigma=" + to_string(cap.sigma) + " does not belong to this alternative");
  return alt.dist.transform([&](const T& v) { return v < cap.sigma ? v : cap.sigma; });
}

// ---------------------------------------------------------------------------
// Descending-cap policy with obligatory inspection
// ---------------------------------------------------------------------------

/// Opening order: caps descending, ties by lowest index.
template <Scalar T>
std::vector<std::size_t> descending_cap_order(const std::vector<Cap<T>>& caps) {
  std::vector<std::size_t> order(caps.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return caps[a].sigma > caps[b].sigma; });
  return order;
}

/// One run of the descending-cap policy: open in cap order while the best observed
/// value (starting from the null outcome 0) is below the next cap.
template <Scalar T>
Outcome run_descending_cap_policy(const std::vector<Cap<T>>& caps, const std::vector<std::size_t>& order,
                                  const Realization<T>& x) {
  Outcome out;
  T best(0);
  for (std::size_t k : order) {
    if (best >= caps[k].sigma) break;
    out.inspected |= bit(k);
    if (x.values[k] > best) {
      best = x.values[k];
      out.selected = k;
    }
  }
  return out;
}

template <Scalar T>
struct WeitzmanPaths {
  T simulated;   ///< expected payoff of the policy, by enumeration
  T capped_max;  ///< E[max_i kappa_i]
};

template <Scalar T>
WeitzmanPaths<T> weitzman_paths(const Instance<T>& instance, const Limits& limits = {}) {
  const auto caps = reservation_caps(instance);
  const auto order = descending_cap_order(caps);
  T simulated = expectation(instance, limits, [&](const Realization<T>& x) {
    return principal_utility(instance, x, run_descending_cap_policy(caps, order, x));
  });
  std::vector<DiscreteDistribution<T>> kappas;
  for (std::size_t i = 0; i < instance.size(); ++i) kappas.push_back(capped_value_distribution(instance[i], caps[i]));
  T capped = expected_of_max<T>(std::span<const DiscreteDistribution<T>>(kappas), limits);
  return {std::move(simulated), std::move(capped)};
}

/// Expected payoff of the descending-cap policy. Both evaluation routes must agree.
template <Scalar T>
T weitzman_value(const Instance<T>& instance, const Limits& limits = {}) {
  auto paths = weitzman_paths(instance, limits);
  if (!approx_eq(paths.simulated, paths.capped_max))
    throw Error(ErrorKind::InternalInconsistency, "descending-cap simulation " + to_string(paths.simulated) +
                                                      " differs from E[max kappa] " + to_string(paths.capped_max));
  return paths.simulated;
}

// ---------------------------------------------------------------------------
// Nonobligatory inspection: policies and the exact optimum
// ---------------------------------------------------------------------------

enum class ActionKind { Stop, SelectOpenedBest, SelectClosed, Inspect };

inline constexpr std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::Stop: return "stop";
    case ActionKind::SelectOpenedBest: return "select_opened_best";
    case ActionKind::SelectClosed: return "select_closed";
    case ActionKind::Inspect: return "inspect";
  }
  return "?";
}

struct Action {
  ActionKind kind = ActionKind::Stop;
  std::size_t index = 0;  ///< meaningful for SelectClosed and Inspect

  static Action stop() { return {ActionKind::Stop, 0}; }
  static Action select_opened_best() { return {ActionKind::SelectOpenedBest, 0}; }
  static Action select_closed(std::size_t i) { return {ActionKind::SelectClosed, i}; }
  static Action inspect(std::size_t i) { return {ActionKind::Inspect, i}; }

  bool operator==(const Action&) const = default;
};

/// Observable search state: which boxes are still closed, and the best value seen.
template <Scalar T>
struct PolicyState {
  Mask unopened = 0;
  std::optional<T> best;

  bool operator==(const PolicyState&) const = default;
  bool operator<(const PolicyState& o) const {
    if (unopened != o.unopened) return unopened < o.unopened;
    if (best.has_value() != o.best.has_value()) return !best.has_value();
    return best.has_value() && *best < *o.best;
  }
};

/// A decision table over search states. Acyclic by construction since every
/// inspection shrinks the unopened set.
template <Scalar T>
class PnoiPolicy {
 public:
  void set(PolicyState<T> state, Action action) { table_[std::move(state)] = action; }

  const Action* find(const PolicyState<T>& state) const {
    auto it = table_.find(state);
    return it == table_.end() ? nullptr : &it->second;
  }

  const std::map<PolicyState<T>, Action>& rows() const { return table_; }
  std::size_t size() const { return table_.size(); }
  bool operator==(const PnoiPolicy&) const = default;

 private:
  std::map<PolicyState<T>, Action> table_;
};

/// Executes `policy` on one realization. Selecting the opened best picks the
/// lowest index among the opened maxima.
template <Scalar T>
Outcome run_policy(const Instance<T>& instance, const PnoiPolicy<T>& policy, const Realization<T>& x) {
  Outcome out;
  PolicyState<T> state{instance.all(), std::nullopt};
  std::optional<std::size_t> best_index;
  for (std::size_t step = 0; step <= instance.size(); ++step) {
    const Action* action = policy.find(state);
    if (action == nullptr)
      throw Error(ErrorKind::InvalidPolicy, "no action for state unopened=" + std::to_string(state.unopened));
    switch (action->kind) {
      case ActionKind::Stop:
        return out;
      case ActionKind::SelectOpenedBest:
        if (!best_index) throw Error(ErrorKind::InvalidPolicy, "select_opened_best with nothing opened");
        out.selected = best_index;
        return out;
      case ActionKind::SelectClosed:
        if (action->index >= instance.size() || !contains(state.unopened, action->index))
          throw Error(ErrorKind::InvalidPolicy, "select_closed on an opened or unknown box");
        out.selected = action->index;
        return out;
      case ActionKind::Inspect: {
        const std::size_t i = action->index;
        if (i >= instance.size() || !contains(state.unopened, i))
          throw Error(ErrorKind::InvalidPolicy, "inspect on an opened or unknown box");
        out.inspected |= bit(i);
        state.unopened &= ~bit(i);
        const T& v = x.values[i];
        if (!state.best || v > *state.best || (v == *state.best && i < *best_index)) {
          state.best = v;
          best_index = i;
        }
        break;
      }
    }
  }
  throw Error(ErrorKind::InvalidPolicy, "policy did not terminate");
}

/// Expected principal payoff of running `policy` without delegation.
template <Scalar T>
T evaluate_policy(const Instance<T>& instance, const PnoiPolicy<T>& policy, const Limits& limits = {}) {
  return expectation(instance, limits, [&](const Realization<T>& x) {
    return principal_utility(instance, x, run_policy(instance, policy, x));
  });
}

template <Scalar T>
struct PnoiSolution {
  T value;
  PnoiPolicy<T> policy;
  std::size_t states_visited = 0;
};

namespace detail {

// Backward induction over (unopened set, best observed value). Independence of the
// boxes makes the continuation depend on nothing else.
template <Scalar T>
class PnoiSolver {
 public:
  explicit PnoiSolver(const Instance<T>& instance) : instance_(instance) {
    for (const auto& alt : instance.alternatives())
      for (const auto& a : alt.dist.atoms()) grid_.push_back(a.value);
    std::sort(grid_.begin(), grid_.end());
    grid_.erase(std::unique(grid_.begin(), grid_.end()), grid_.end());
    for (const auto& alt : instance.alternatives()) {
      std::vector<int> idx;
      for (const auto& a : alt.dist.atoms())
        idx.push_back(static_cast<int>(std::lower_bound(grid_.begin(), grid_.end(), a.value) - grid_.begin()));
      atom_grid_.push_back(std::move(idx));
    }
    means_.reserve(instance.size());
    for (const auto& alt : instance.alternatives()) means_.push_back(alt.dist.mean());
  }

  std::uint64_t state_space() const { return (std::uint64_t{1} << instance_.size()) * (grid_.size() + 1); }

  const T& solve(Mask unopened, int best) {
    const std::uint64_t key = (std::uint64_t{unopened} << 32) | static_cast<std::uint32_t>(best + 1);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second.value;

    // Candidate order fixes tie-breaking: stop, select opened best, select closed
    // (lowest index), inspect (lowest index); later candidates must be strictly better.
    T best_value(0);
    Action best_action = Action::stop();
    if (best >= 0 && grid_[best] > best_value) {
      best_value = grid_[best];
      best_action = Action::select_opened_best();
    }
    const std::size_t n = instance_.size();
    for (std::size_t j = 0; j < n; ++j) {
      if (contains(unopened, j) && means_[j] > best_value) {
        best_value = means_[j];
        best_action = Action::select_closed(j);
      }
    }
    const Mask opened = instance_.all() & ~unopened;
    for (std::size_t j = 0; j < n; ++j) {
      if (!contains(unopened, j)) continue;
      T candidate = -instance_.marginal_cost(opened, j);
      const auto& dist = instance_[j].dist;
      for (std::size_t k = 0; k < dist.size(); ++k) {
        const int g = atom_grid_[j][k];
        const T& next = solve(unopened & ~bit(j), std::max(best, g));
        candidate += dist[k].prob * next;
      }
      if (candidate > best_value) {
        best_value = std::move(candidate);
        best_action = Action::inspect(j);
      }
    }
    auto [it, inserted] = memo_.emplace(key, Entry{std::move(best_value), best_action});
    return it->second.value;
  }

  PnoiPolicy<T> policy() const {
    PnoiPolicy<T> policy;
    for (const auto& [key, entry] : memo_) {
      const int best = static_cast<int>(key & 0xffffffffu) - 1;
      PolicyState<T> state{static_cast<Mask>(key >> 32), best >= 0 ? std::optional<T>(grid_[best]) : std::nullopt};
      policy.set(std::move(state), entry.action);
    }
    return policy;
  }

  std::size_t visited() const { return memo_.size(); }

 private:
  struct Entry {
    T value;
    Action action;
  };

  const Instance<T>& instance_;
  std::vector<T> grid_;
  std::vector<std::vector<int>> atom_grid_;
  std::vector<T> means_;
  std::unordered_map<std::uint64_t, Entry> memo_;
};

}  // namespace detail

/// Exact optimal expected payoff for Pandora's box with nonobligatory inspection,
/// with the optimal decision table. Works with set-function costs by charging
/// marginal costs c(S + j) - c(S).
template <Scalar T>
PnoiSolution<T> pnoi_optimal(const Instance<T>& instance, const Limits& limits = {}) {
  detail::PnoiSolver<T> solver(instance);
  if (solver.state_space() > limits.max_states)
    throw Error(ErrorKind::StateLimitExceeded, std::to_string(solver.state_space()) +
                                                   " DP states exceed the limit of " +
                                                   std::to_string(limits.max_states));
  T value = solver.solve(instance.all(), -1);
  return {std::move(value), solver.policy(), solver.visited()};
}

/// E[max_i kappa_i] + max_i E[X_i]; dominates the PNOI optimum.
template <Scalar T>
T pnoi_value_upper_bound(const Instance<T>& instance, const Limits& limits = {}) {
  const auto caps = reservation_caps(instance);
  std::vector<DiscreteDistribution<T>> kappas;
  for (std::size_t i = 0; i < instance.size(); ++i) kappas.push_back(capped_value_distribution(instance[i], caps[i]));
  return expected_of_max<T>(std::span<const DiscreteDistribution<T>>(kappas), limits) + max_expected(instance).second;
}

}  // namespace delegatebox
