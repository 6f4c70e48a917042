#pragma once

// Upper bounds on the optimal mechanism and approximation audits.

#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <variant>

#include "delegatebox/delegation.hpp"

namespace delegatebox {

/// max_i E[X_i] + E[max_i (X_i - c_i)^+]. Set-function costs use c_i = c({i}).
template <Scalar T>
T upper_bound_costless(const Instance<T>& instance, const Limits& limits = {}) {
  return max_expected(instance).second + expected_of_max(instance, MaxTransform::ShiftedPositive, limits);
}

/// max(PNOI optimum, max_i E[X_i] + E[max Z] - c_Del): sound whether or not the
/// optimal mechanism delegates.
template <Scalar T>
T upper_bound_costly(const Instance<T>& instance, const Limits& limits = {}) {
  T pnoi = pnoi_optimal(instance, limits).value;
  T delegating = upper_bound_costless(instance, limits) - instance.delegation_cost();
  return pnoi > delegating ? pnoi : delegating;
}

/// max(max_i E[X_i], E[max_i X_i] - c) for equal inspection costs c.
template <Scalar T>
T upper_bound_identical(const Instance<T>& instance, const Limits& limits = {}) {
  T closed = max_expected(instance).second;
  T inspected = expected_of_max(instance, MaxTransform::Identity, limits) - instance.singleton_cost(0);
  return closed > inspected ? closed : inspected;
}

struct CostlessRegime {};
template <Scalar T>
struct CostlyRegime {
  T alpha;
};
struct IdenticalCostsRegime {};

template <Scalar T>
using Regime = std::variant<CostlessRegime, CostlyRegime<T>, IdenticalCostsRegime>;

template <Scalar T>
std::string regime_name(const Regime<T>& regime) {
  if (std::holds_alternative<CostlessRegime>(regime)) return "costless";
  if (std::holds_alternative<IdenticalCostsRegime>(regime)) return "identical";
  return "costly";
}

/// (3 - 4a) / (1 - 2a)
template <Scalar T>
T costly_factor(const T& alpha) {
  return (T(3) - T(4) * alpha) / (T(1) - T(2) * alpha);
}

template <Scalar T>
struct AuditReport {
  std::string instance_digest;
  std::string regime;
  ArithmeticMode mode = ScalarTraits<T>::mode;
  T ub_costless{0};
  T ub_costly{0};
  T ub_used{0};
  /// Value of the best non-delegating policy: a feasible mechanism, hence a lower
  /// bound on the optimum.
  T opt_lower{0};
  T mechanism_value{0};
  /// ub_used / mechanism_value; empty when the mechanism value is not positive.
  std::optional<T> ratio;
  /// opt_lower / mechanism_value; empty when the mechanism value is not positive.
  std::optional<T> ratio_lower;
  T claimed_bound{0};
  T tolerance{0};
  bool pass = false;
};

/// FNV-1a over a canonical text form of the instance.
template <Scalar T>
std::string instance_digest(const Instance<T>& instance) {
  std::string text;
  for (const auto& alt : instance.alternatives()) {
    text += "[";
    for (const auto& a : alt.dist.atoms()) text += to_string(a.value) + ":" + to_string(a.prob) + ",";
    text += "]c=" + to_string(alt.inspect_cost) + ";";
  }
  if (auto* set = std::get_if<MonotoneSetCosts<T>>(&instance.cost_model())) {
    text += "set{";
    for (const auto& c : set->table) text += to_string(c) + ",";
    text += "}";
  }
  text += "del=" + to_string(instance.delegation_cost());
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

/// Checks that the instance fits the regime and returns the claimed approximation
/// factor. Throws RegimeMismatch otherwise.
template <Scalar T>
T check_regime(const Instance<T>& instance, const Regime<T>& regime, const Limits& limits = {}) {
  if (std::holds_alternative<CostlessRegime>(regime)) {
    if (instance.delegation_cost() != 0) throw Error(ErrorKind::RegimeMismatch, "costless regime needs c_Del = 0");
    return T(3);
  }
  if (std::holds_alternative<IdenticalCostsRegime>(regime)) {
    if (instance.delegation_cost() != 0) throw Error(ErrorKind::RegimeMismatch, "identical regime needs c_Del = 0");
    for (std::size_t i = 1; i < instance.size(); ++i)
      if (instance.singleton_cost(i) != instance.singleton_cost(0))
        throw Error(ErrorKind::RegimeMismatch, "identical regime needs equal inspection costs");
    return T(2);
  }
  const T& alpha = std::get<CostlyRegime<T>>(regime).alpha;
  if (alpha < 0 || !(alpha * 2 < 1)) throw Error(ErrorKind::RegimeMismatch, "costly regime needs 0 <= alpha < 1/2");
  const T expected = alpha * expected_of_max(instance, MaxTransform::ShiftedPositive, limits);
  if (!approx_eq(instance.delegation_cost(), expected))
    throw Error(ErrorKind::RegimeMismatch, "c_Del = " + to_string(instance.delegation_cost()) +
                                               " but alpha * E[max Z] = " + to_string(expected));
  return costly_factor(alpha);
}

/// Compares a mechanism's value against the upper bound of the regime scaled by
/// the claimed approximation factor: pass iff value * factor >= ub - tolerance.
template <Scalar T>
AuditReport<T> audit(const Instance<T>& instance, const MechanismReport<T>& report, const Regime<T>& regime,
                     const Limits& limits = {}) {
  AuditReport<T> out;
  out.instance_digest = instance_digest(instance);
  out.regime = regime_name(regime);
  out.tolerance = tolerance<T>();
  out.claimed_bound = check_regime(instance, regime, limits);

  out.opt_lower = pnoi_optimal(instance, limits).value;
  out.ub_costless = upper_bound_costless(instance, limits);
  out.ub_costly = out.opt_lower > out.ub_costless - instance.delegation_cost()
                      ? out.opt_lower
                      : T(out.ub_costless - instance.delegation_cost());
  if (std::holds_alternative<CostlessRegime>(regime)) {
    out.ub_used = out.ub_costless;
  } else if (std::holds_alternative<IdenticalCostsRegime>(regime)) {
    out.ub_used = upper_bound_identical(instance, limits);
  } else {
    out.ub_used = out.ub_costly;
  }
  out.mechanism_value = report.value;
  if (report.value > 0) {
    out.ratio = out.ub_used / report.value;
    out.ratio_lower = out.opt_lower / report.value;
  }
  out.pass = approx_ge(T(report.value * out.claimed_bound), out.ub_used);
  return out;
}

/// Two-column human-readable rendering.
template <Scalar T>
std::string render_table(const AuditReport<T>& r) {
  std::ostringstream out;
  auto row = [&](const std::string& k, const std::string& v) { out << std::left << std::setw(18) << k << v << "\n"; };
  auto opt = [](const std::optional<T>& v) { return v ? to_display(*v) : std::string("inf"); };
  row("instance", r.instance_digest);
  row("regime", r.regime);
  row("mode", std::string(to_string(r.mode)));
  row("ub_costless", to_display(r.ub_costless));
  row("ub_costly", to_display(r.ub_costly));
  row("ub_used", to_display(r.ub_used));
  row("opt_lower", to_display(r.opt_lower));
  row("mechanism_value", to_display(r.mechanism_value));
  row("ratio", opt(r.ratio));
  row("ratio_lower", opt(r.ratio_lower));
  row("claimed_bound", to_display(r.claimed_bound));
  row("pass", r.pass ? "yes" : "no");
  return out.str();
}

}  // namespace delegatebox
