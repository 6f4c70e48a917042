#pragma once

// Finite distributions, instances, and the exact product-space expectation engine.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "delegatebox/error.hpp"
#include "delegatebox/scalar.hpp"

namespace delegatebox {

/// Bit i set <=> alternative i is in the set.
using Mask = std::uint32_t;

inline constexpr std::size_t kMaxAlternatives = 31;
inline constexpr std::size_t kMaxSetFunctionAlternatives = 20;

inline constexpr Mask bit(std::size_t i) { return Mask{1} << i; }
inline constexpr Mask full_mask(std::size_t n) { return n == 0 ? 0 : (Mask(~Mask{0}) >> (32 - n)); }
inline constexpr bool contains(Mask m, std::size_t i) { return (m >> i) & 1u; }

struct Limits {
  /// Largest product-support size that exact enumeration will walk.
  std::uint64_t max_points = 10'000'000;
  /// Largest PNOI state space the dynamic program will allocate.
  std::uint64_t max_states = 10'000'000;
};

template <Scalar T>
struct Atom {
  T value;
  T prob;
  bool operator==(const Atom&) const = default;
};

/// Finite distribution over nonnegative values: atoms sorted by strictly increasing
/// value, all probabilities positive, total mass one.
template <Scalar T>
class DiscreteDistribution {
 public:
  /// Point mass at zero.
  DiscreteDistribution() : atoms_{Atom<T>{T(0), T(1)}} {}

  /// Validating factory. Duplicate values are merged and zero-probability pairs dropped.
  static DiscreteDistribution make(std::vector<std::pair<T, T>> pairs) {
    if (pairs.empty()) throw Error(ErrorKind::EmptySupport, "distribution needs at least one atom");
    T total(0);
    for (const auto& [v, p] : pairs) {
      if (v < 0) throw Error(ErrorKind::NegativeValue, "support value " + to_string(v) + " is negative");
      if (p < 0) throw Error(ErrorKind::NegativeProbability, "probability " + to_string(p) + " is negative");
      total += p;
    }
    if constexpr (is_exact_v<T>) {
      if (total != 1)
        throw Error(ErrorKind::ProbabilitySumMismatch, "probabilities sum to " + to_string(total));
    } else {
      if (std::abs(total - 1.0) > ScalarTraits<T>::sum_tolerance)
        throw Error(ErrorKind::ProbabilitySumMismatch, "probabilities sum to " + to_string(total));
    }
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Atom<T>> atoms;
    for (auto& [v, p] : pairs) {
      if (!(p > 0)) continue;
      if (!atoms.empty() && atoms.back().value == v) {
        atoms.back().prob += p;
      } else {
        atoms.push_back({std::move(v), std::move(p)});
      }
    }
    if (atoms.empty()) throw Error(ErrorKind::EmptySupport, "all atoms have zero probability");
    if constexpr (!is_exact_v<T>) {
      for (auto& a : atoms) a.prob /= total;
    }
    return DiscreteDistribution(std::move(atoms));
  }

  static DiscreteDistribution point_mass(T value) { return make({{std::move(value), T(1)}}); }

  std::span<const Atom<T>> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  const Atom<T>& operator[](std::size_t k) const { return atoms_[k]; }
  const T& min_value() const { return atoms_.front().value; }
  const T& max_value() const { return atoms_.back().value; }
  bool is_point_mass() const { return atoms_.size() == 1; }

  T mean() const {
    T sum(0);
    for (const auto& a : atoms_) sum += a.value * a.prob;
    return sum;
  }

  T prob_at_least(const T& t) const {
    T sum(0);
    for (const auto& a : atoms_)
      if (a.value >= t) sum += a.prob;
    return sum;
  }

  /// E[(X - s)^+]
  T expected_excess(const T& s) const {
    T sum(0);
    for (const auto& a : atoms_)
      if (a.value > s) sum += (a.value - s) * a.prob;
    return sum;
  }

  bool in_support(const T& v) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), v,
                               [](const Atom<T>& a, const T& x) { return a.value < x; });
    return it != atoms_.end() && it->value == v;
  }

  /// Distribution of f(X). f must map into the nonnegative reals.
  template <class F>
  DiscreteDistribution transform(F&& f) const {
    std::vector<std::pair<T, T>> pairs;
    pairs.reserve(atoms_.size());
    for (const auto& a : atoms_) pairs.emplace_back(f(a.value), a.prob);
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Atom<T>> atoms;
    for (auto& [v, p] : pairs) {
      if (v < 0) throw Error(ErrorKind::NegativeValue, "transformed value " + to_string(v) + " is negative");
      if (!atoms.empty() && atoms.back().value == v) {
        atoms.back().prob += p;
      } else {
        atoms.push_back({std::move(v), std::move(p)});
      }
    }
    return DiscreteDistribution(std::move(atoms));
  }

  bool operator==(const DiscreteDistribution&) const = default;

  /// Internal: atoms already sorted and positive. Used by constructions whose
  /// mass is correct by arithmetic (e.g. CDF differences).
  static DiscreteDistribution from_sorted_atoms(std::vector<Atom<T>> atoms) {
    std::erase_if(atoms, [](const Atom<T>& a) { return !(a.prob > 0); });
    if (atoms.empty()) throw Error(ErrorKind::EmptySupport, "no positive atoms");
    return DiscreteDistribution(std::move(atoms));
  }

 private:
  explicit DiscreteDistribution(std::vector<Atom<T>> atoms) : atoms_(std::move(atoms)) {}

  std::vector<Atom<T>> atoms_;
};

template <Scalar T>
DiscreteDistribution<T> make_distribution(std::vector<std::pair<T, T>> pairs) {
  return DiscreteDistribution<T>::make(std::move(pairs));
}

template <Scalar T>
T expected_value(const DiscreteDistribution<T>& dist) {
  return dist.mean();
}

template <Scalar T>
struct Alternative {
  DiscreteDistribution<T> dist;
  T inspect_cost{0};
  bool operator==(const Alternative&) const = default;
};

template <Scalar T>
struct AdditiveCosts {
  bool operator==(const AdditiveCosts&) const = default;
};

/// c : 2^[n] -> R>=0, indexed by bitmask.
template <Scalar T>
struct MonotoneSetCosts {
  std::vector<T> table;
  bool operator==(const MonotoneSetCosts&) const = default;
};

template <Scalar T>
using CostModel = std::variant<AdditiveCosts<T>, MonotoneSetCosts<T>>;

template <Scalar T>
class Instance {
 public:
  Instance(std::vector<Alternative<T>> alternatives, CostModel<T> cost_model, T delegation_cost)
      : alternatives_(std::move(alternatives)),
        cost_model_(std::move(cost_model)),
        delegation_cost_(std::move(delegation_cost)) {
    const std::size_t n = alternatives_.size();
    if (n == 0) throw Error(ErrorKind::InvalidInstance, "an instance needs at least one alternative");
    if (n > kMaxAlternatives)
      throw Error(ErrorKind::InvalidInstance, "at most " + std::to_string(kMaxAlternatives) + " alternatives");
    if (delegation_cost_ < 0) throw Error(ErrorKind::InvalidInstance, "delegation cost is negative");
    if (auto* set = std::get_if<MonotoneSetCosts<T>>(&cost_model_)) {
      if (n > kMaxSetFunctionAlternatives)
        throw Error(ErrorKind::InvalidCostModel, "set-function costs support at most 20 alternatives");
      const std::size_t subsets = std::size_t{1} << n;
      if (set->table.size() != subsets)
        throw Error(ErrorKind::InvalidCostModel, "set-function table needs " + std::to_string(subsets) + " entries");
      if (set->table[0] != 0) throw Error(ErrorKind::InvalidCostModel, "c(empty set) must be 0");
      for (Mask s = 0; s < subsets; ++s) {
        if (set->table[s] < 0) throw Error(ErrorKind::InvalidCostModel, "negative set cost");
        for (std::size_t i = 0; i < n; ++i)
          if (!contains(s, i) && set->table[s | bit(i)] < set->table[s])
            throw Error(ErrorKind::InvalidCostModel, "set-function costs are not monotone");
      }
      for (std::size_t i = 0; i < n; ++i) alternatives_[i].inspect_cost = set->table[bit(i)];
    } else {
      for (const auto& alt : alternatives_)
        if (alt.inspect_cost < 0) throw Error(ErrorKind::InvalidInstance, "inspection cost is negative");
    }
  }

  std::size_t size() const { return alternatives_.size(); }
  const Alternative<T>& operator[](std::size_t i) const { return alternatives_[i]; }
  std::span<const Alternative<T>> alternatives() const { return alternatives_; }
  const CostModel<T>& cost_model() const { return cost_model_; }
  const T& delegation_cost() const { return delegation_cost_; }
  bool additive() const { return std::holds_alternative<AdditiveCosts<T>>(cost_model_); }
  Mask all() const { return full_mask(size()); }

  /// c({i}); equals the per-alternative cost under additive costs.
  const T& singleton_cost(std::size_t i) const { return alternatives_[i].inspect_cost; }

  /// Total cost of having inspected exactly `inspected`.
  T inspection_cost(Mask inspected) const {
    if (auto* set = std::get_if<MonotoneSetCosts<T>>(&cost_model_)) return set->table[inspected];
    T sum(0);
    for (std::size_t i = 0; i < size(); ++i)
      if (contains(inspected, i)) sum += alternatives_[i].inspect_cost;
    return sum;
  }

  /// Cost of inspecting `i` after `already` has been inspected.
  T marginal_cost(Mask already, std::size_t i) const {
    if (auto* set = std::get_if<MonotoneSetCosts<T>>(&cost_model_))
      return set->table[already | bit(i)] - set->table[already];
    return alternatives_[i].inspect_cost;
  }

  std::vector<DiscreteDistribution<T>> distributions() const {
    std::vector<DiscreteDistribution<T>> out;
    out.reserve(size());
    for (const auto& a : alternatives_) out.push_back(a.dist);
    return out;
  }

  Instance with_delegation_cost(T c_del) const {
    return Instance(alternatives_, cost_model_, std::move(c_del));
  }

  bool operator==(const Instance&) const = default;

 private:
  std::vector<Alternative<T>> alternatives_;
  CostModel<T> cost_model_;
  T delegation_cost_;
};

template <Scalar T>
struct Realization {
  std::vector<T> values;

  void validate(const Instance<T>& instance) const {
    if (values.size() != instance.size())
      throw Error(ErrorKind::InvalidRealization, "realization length differs from instance size");
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!instance[i].dist.in_support(values[i]))
        throw Error(ErrorKind::InvalidRealization,
                    "value " + to_string(values[i]) + " not in support of alternative " + std::to_string(i));
  }
};

struct Outcome {
  std::optional<std::size_t> selected;
  Mask inspected = 0;
  bool delegated = false;

  bool operator==(const Outcome&) const = default;
};

/// Sum A_i X_i - c(inspected) - I_Del c_Del for one realization.
template <Scalar T>
T principal_utility(const Instance<T>& instance, const Realization<T>& x, const Outcome& outcome) {
  T u(0);
  if (outcome.selected) u += x.values[*outcome.selected];
  u -= instance.inspection_cost(outcome.inspected);
  if (outcome.delegated) u -= instance.delegation_cost();
  return u;
}

// ---------------------------------------------------------------------------
// Product-space enumeration
// ---------------------------------------------------------------------------

/// Product of support sizes, saturating at uint64 max.
template <Scalar T>
std::uint64_t product_support_size(std::span<const DiscreteDistribution<T>> dists) {
  std::uint64_t total = 1;
  for (const auto& d : dists) {
    if (total > std::numeric_limits<std::uint64_t>::max() / d.size())
      return std::numeric_limits<std::uint64_t>::max();
    total *= d.size();
  }
  return total;
}

template <Scalar T>
std::uint64_t product_support_size(const Instance<T>& instance) {
  std::uint64_t total = 1;
  for (const auto& a : instance.alternatives()) {
    if (total > std::numeric_limits<std::uint64_t>::max() / a.dist.size())
      return std::numeric_limits<std::uint64_t>::max();
    total *= a.dist.size();
  }
  return total;
}

inline void check_enumeration_limit(std::uint64_t points, const Limits& limits) {
  if (points > limits.max_points)
    throw Error(ErrorKind::EnumerationLimitExceeded,
                std::to_string(points) + " product-support points exceed the limit of " +
                    std::to_string(limits.max_points));
}

/// Visits every point of the product support in lexicographic atom order (last
/// coordinate fastest). `fn(values, prob)` sees the realized vector and its mass.
/// The order is fixed, so sums are reproducible in float mode.
template <Scalar T, class Fn>
void for_each_product(std::span<const DiscreteDistribution<T>> dists, const Limits& limits, Fn&& fn) {
  check_enumeration_limit(product_support_size(dists), limits);
  const std::size_t n = dists.size();
  if (n == 0) {
    std::vector<T> empty;
    fn(empty, T(1));
    return;
  }
  std::vector<std::size_t> idx(n, 0);
  std::vector<T> values(n);
  // prefix[k] = prob of coordinates 0..k-1
  std::vector<T> prefix(n + 1, T(1));
  for (std::size_t k = 0; k < n; ++k) {
    values[k] = dists[k][0].value;
    prefix[k + 1] = prefix[k] * dists[k][0].prob;
  }
  while (true) {
    fn(std::as_const(values), std::as_const(prefix[n]));
    std::size_t k = n;
    while (k > 0) {
      --k;
      if (++idx[k] < dists[k].size()) break;
      idx[k] = 0;
      if (k == 0) return;
    }
    for (std::size_t j = k; j < n; ++j) {
      const auto& atom = dists[j][idx[j]];
      values[j] = atom.value;
      prefix[j + 1] = prefix[j] * atom.prob;
    }
  }
}

/// Visits every realization of the instance with its probability.
template <Scalar T, class Fn>
void for_each_realization(const Instance<T>& instance, const Limits& limits, Fn&& fn) {
  const auto dists = instance.distributions();
  Realization<T> x;
  for_each_product<T>(dists, limits, [&](const std::vector<T>& values, const T& prob) {
    x.values = values;
    fn(std::as_const(x), prob);
  });
}

/// Exact E[g(X)] over the product support.
template <Scalar T, class G>
T expectation(const Instance<T>& instance, const Limits& limits, G&& g) {
  T sum(0);
  for_each_realization(instance, limits, [&](const Realization<T>& x, const T& prob) { sum += prob * g(x); });
  return sum;
}

// ---------------------------------------------------------------------------
// Maxima of independent variables
// ---------------------------------------------------------------------------

/// Distribution of max_i V_i for independent V_i, via products of CDFs.
template <Scalar T>
DiscreteDistribution<T> max_distribution(std::span<const DiscreteDistribution<T>> dists) {
  if (dists.empty()) throw Error(ErrorKind::EmptySupport, "max of zero distributions");
  std::vector<T> grid;
  for (const auto& d : dists)
    for (const auto& a : d.atoms()) grid.push_back(a.value);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<std::size_t> cursor(dists.size(), 0);
  std::vector<T> cdf(dists.size(), T(0));
  std::vector<Atom<T>> atoms;
  T previous(0);
  for (const auto& v : grid) {
    T joint(1);
    for (std::size_t i = 0; i < dists.size(); ++i) {
      while (cursor[i] < dists[i].size() && dists[i][cursor[i]].value <= v) {
        cdf[i] += dists[i][cursor[i]].prob;
        ++cursor[i];
      }
      joint *= cdf[i];
    }
    atoms.push_back({v, joint - previous});
    previous = joint;
  }
  if constexpr (!is_exact_v<T>) {
    // The last CDF value is 1 up to rounding; keep the total mass exact.
    atoms.back().prob += T(1) - previous;
  }
  return DiscreteDistribution<T>::from_sorted_atoms(std::move(atoms));
}

enum class MaxTransform {
  Identity,        ///< X_i
  ShiftedPositive  ///< (X_i - c_i)^+ with c_i = c({i})
};

/// Distributions of Z_i = (X_i - c_i)^+.
template <Scalar T>
std::vector<DiscreteDistribution<T>> shifted_positive(const Instance<T>& instance) {
  std::vector<DiscreteDistribution<T>> out;
  out.reserve(instance.size());
  for (std::size_t i = 0; i < instance.size(); ++i) {
    const T& c = instance.singleton_cost(i);
    out.push_back(instance[i].dist.transform([&](const T& v) { return v > c ? T(v - c) : T(0); }));
  }
  return out;
}

template <Scalar T>
std::vector<DiscreteDistribution<T>> transformed(const Instance<T>& instance, MaxTransform transform) {
  return transform == MaxTransform::Identity ? instance.distributions() : shifted_positive(instance);
}

/// E[max_i V_i] for independent V_i. Rejects product supports over the limit,
/// keeping exact mode restricted to desk-scale instances.
template <Scalar T>
T expected_of_max(std::span<const DiscreteDistribution<T>> dists, const Limits& limits = {}) {
  check_enumeration_limit(product_support_size(dists), limits);
  return max_distribution(dists).mean();
}

template <Scalar T>
T expected_of_max(const Instance<T>& instance, MaxTransform transform, const Limits& limits = {}) {
  const auto dists = transformed(instance, transform);
  return expected_of_max<T>(std::span<const DiscreteDistribution<T>>(dists), limits);
}

/// max_i E[X_i] together with the lowest maximizing index.
template <Scalar T>
std::pair<std::size_t, T> max_expected(const Instance<T>& instance) {
  std::size_t best = 0;
  T best_value = instance[0].dist.mean();
  for (std::size_t i = 1; i < instance.size(); ++i) {
    T m = instance[i].dist.mean();
    if (m > best_value) {
      best = i;
      best_value = std::move(m);
    }
  }
  return {best, best_value};
}

// ---------------------------------------------------------------------------
// Mode conversion
// ---------------------------------------------------------------------------

template <Scalar To, Scalar From>
To convert_scalar(const From& v) {
  if constexpr (std::is_same_v<To, From>) {
    return v;
  } else if constexpr (is_exact_v<From>) {
    return to_double(v);
  } else {
    return Rational(v);
  }
}

template <Scalar To, Scalar From>
DiscreteDistribution<To> convert(const DiscreteDistribution<From>& d) {
  std::vector<Atom<To>> atoms;
  for (const auto& a : d.atoms()) atoms.push_back({convert_scalar<To>(a.value), convert_scalar<To>(a.prob)});
  return DiscreteDistribution<To>::from_sorted_atoms(std::move(atoms));
}

template <Scalar To, Scalar From>
Instance<To> convert(const Instance<From>& inst) {
  std::vector<Alternative<To>> alts;
  for (const auto& a : inst.alternatives()) alts.push_back({convert<To>(a.dist), convert_scalar<To>(a.inspect_cost)});
  CostModel<To> model = AdditiveCosts<To>{};
  if (auto* set = std::get_if<MonotoneSetCosts<From>>(&inst.cost_model())) {
    MonotoneSetCosts<To> table;
    for (const auto& c : set->table) table.table.push_back(convert_scalar<To>(c));
    model = std::move(table);
  }
  return Instance<To>(std::move(alts), std::move(model), convert_scalar<To>(inst.delegation_cost()));
}

}  // namespace delegatebox
