#pragma once

// Instance generators: the counterexample families and seeded random instances.

#include <cstdint>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "delegatebox/delegation.hpp"

namespace delegatebox {

/// n i.i.d. boxes worth v with probability p (else 0), each costing c.
template <Scalar T>
struct IdenticalBinarySpec {
  std::size_t n = 1;
  T p{1};
  T v{1};
  T c{0};
};

/// Two boxes worth 1/eps with probability eps at cost 0, plus a sure 1 at cost 1.
template <Scalar T>
struct TightnessSpec {
  T eps;
};

/// n i.i.d. boxes worth n with probability 1/n, each costing (1 - 1/n) E[max X].
struct InapproxFirstBestSpec {
  std::size_t n = 1;
};

/// n free boxes worth 1 with probability eps; ships with the n-signal mechanism.
template <Scalar T>
struct InfoValueSpec {
  std::size_t n = 2;
  T eps;
};

/// n boxes worth 1 with probability 1/2, each costing 1.
struct SpmiFailSpec {
  std::size_t n = 2;
};

/// Random instance on a coarse grid: values, costs and c_Del are multiples of
/// 1/grid inside their ranges; probabilities are integer weights in [1, 4], normalized.
template <Scalar T>
struct RandomSpec {
  std::uint64_t seed = 0;
  std::size_t n = 3;
  std::size_t support_size = 3;  ///< per-alternative support size is drawn from [1, support_size]
  T value_lo{0};
  T value_hi{4};
  T cost_lo{0};
  T cost_hi{2};
  T cdel_lo{0};
  T cdel_hi{0};
  unsigned grid = 4;
  bool equal_costs = false;
};

template <Scalar T>
using GeneratorSpec = std::variant<IdenticalBinarySpec<T>, TightnessSpec<T>, InapproxFirstBestSpec, InfoValueSpec<T>,
                                   SpmiFailSpec, RandomSpec<T>>;

template <Scalar T>
struct Generated {
  Instance<T> instance;
  std::optional<SignalingMechanism<T>> mechanism;
};

// ---------------------------------------------------------------------------
// Seeded randomness. mt19937_64 output is fixed by the standard; the mapping to
// ranges is done here so results do not depend on the standard library.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [lo, hi].
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) { return lo + engine_() % (hi - lo + 1); }
  bool coin() { return engine_() & 1u; }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

namespace detail {

template <Scalar T>
T two_point(const T& value, const T& p, std::vector<std::pair<T, T>>& out) {
  out.clear();
  out.emplace_back(T(0), T(1) - p);
  out.emplace_back(value, p);
  return p * value;
}

template <Scalar T>
DiscreteDistribution<T> binary(const T& value, const T& p) {
  return make_distribution<T>({{T(0), T(1) - p}, {value, p}});
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvalidParameters, what);
}

// Grid points lo + k/grid inside [lo, hi].
template <Scalar T>
std::uint64_t grid_count(const T& lo, const T& hi, unsigned grid) {
  return static_cast<std::uint64_t>(std::floor(to_double(T((hi - lo) * T(static_cast<long>(grid)))) + 1e-9)) + 1;
}

template <Scalar T>
T grid_point(const T& lo, unsigned grid, std::uint64_t k) {
  return lo + T(static_cast<long>(k)) / T(static_cast<long>(grid));
}

template <Scalar T>
T draw_grid(Rng& rng, const T& lo, const T& hi, unsigned grid) {
  return grid_point(lo, grid, rng.uniform(0, grid_count(lo, hi, grid) - 1));
}

template <Scalar T>
Instance<T> random_instance(const RandomSpec<T>& s) {
  require(s.n >= 1 && s.n <= kMaxAlternatives, "random: n out of range");
  require(s.support_size >= 1, "random: support_size must be >= 1");
  require(s.grid >= 1, "random: grid must be >= 1");
  require(s.value_lo >= 0 && s.value_hi >= s.value_lo, "random: bad value range");
  require(s.cost_lo >= 0 && s.cost_hi >= s.cost_lo, "random: bad cost range");
  require(s.cdel_lo >= 0 && s.cdel_hi >= s.cdel_lo, "random: bad delegation-cost range");
  Rng rng(s.seed);
  const std::uint64_t slots = grid_count(s.value_lo, s.value_hi, s.grid);
  const T shared_cost = draw_grid(rng, s.cost_lo, s.cost_hi, s.grid);
  std::vector<Alternative<T>> alts;
  for (std::size_t i = 0; i < s.n; ++i) {
    const std::uint64_t size = std::min<std::uint64_t>(rng.uniform(1, s.support_size), slots);
    // Partial Fisher-Yates over grid indices.
    std::vector<std::uint64_t> idx(slots);
    for (std::uint64_t k = 0; k < slots; ++k) idx[k] = k;
    for (std::uint64_t k = 0; k < size; ++k) std::swap(idx[k], idx[rng.uniform(k, slots - 1)]);
    std::vector<std::uint64_t> weights(size);
    std::uint64_t total = 0;
    for (auto& w : weights) total += (w = rng.uniform(1, 4));
    std::vector<std::pair<T, T>> pairs;
    for (std::uint64_t k = 0; k < size; ++k)
      pairs.emplace_back(grid_point(s.value_lo, s.grid, idx[k]),
                         T(static_cast<long>(weights[k])) / T(static_cast<long>(total)));
    T cost = s.equal_costs ? shared_cost : draw_grid(rng, s.cost_lo, s.cost_hi, s.grid);
    alts.push_back({make_distribution(std::move(pairs)), std::move(cost)});
  }
  T cdel = draw_grid(rng, s.cdel_lo, s.cdel_hi, s.grid);
  return Instance<T>(std::move(alts), AdditiveCosts<T>{}, std::move(cdel));
}

// Signal i of the information-value mechanism: inspect every other box (lowest
// index first), stop at the first nonzero value, and take box i closed if all were 0.
template <Scalar T>
void info_policy_rows(const Instance<T>& inst, std::size_t keep, Mask unopened, const std::optional<T>& best,
                      PnoiPolicy<T>& policy) {
  PolicyState<T> state{unopened, best};
  if (policy.find(state)) return;
  if (best && *best > 0) {
    policy.set(state, Action::stop());
    return;
  }
  const Mask others = unopened & ~bit(keep);
  if (others == 0) {
    policy.set(state, Action::select_closed(keep));
    return;
  }
  const std::size_t j = static_cast<std::size_t>(std::countr_zero(others));
  policy.set(state, Action::inspect(j));
  for (const auto& a : inst[j].dist.atoms()) {
    T next = best && *best > a.value ? *best : a.value;
    info_policy_rows(inst, keep, unopened & ~bit(j), std::optional<T>(next), policy);
  }
}

}  // namespace detail

/// Builds the instance a spec describes (and the companion mechanism for InfoValue).
template <Scalar T>
Generated<T> gen(const GeneratorSpec<T>& spec) {
  using detail::require;
  if (auto* s = std::get_if<IdenticalBinarySpec<T>>(&spec)) {
    require(s->n >= 1 && s->n <= kMaxAlternatives, "identical-binary: n out of range");
    require(s->p > 0 && s->p <= 1, "identical-binary: need 0 < p <= 1");
    require(s->v > 0, "identical-binary: need v > 0");
    require(s->c >= 0, "identical-binary: need c >= 0");
    std::vector<Alternative<T>> alts(s->n, Alternative<T>{detail::binary(s->v, s->p), s->c});
    return {Instance<T>(std::move(alts), AdditiveCosts<T>{}, T(0)), std::nullopt};
  }
  if (auto* s = std::get_if<TightnessSpec<T>>(&spec)) {
    require(s->eps > 0 && s->eps < 1, "tightness: need 0 < eps < 1");
    const auto risky = detail::binary(T(T(1) / s->eps), s->eps);
    std::vector<Alternative<T>> alts{{risky, T(0)}, {risky, T(0)}, {DiscreteDistribution<T>::point_mass(T(1)), T(1)}};
    return {Instance<T>(std::move(alts), AdditiveCosts<T>{}, T(0)), std::nullopt};
  }
  if (auto* s = std::get_if<InapproxFirstBestSpec>(&spec)) {
    require(s->n >= 1 && s->n <= kMaxAlternatives, "inapx-firstbest: n out of range");
    const T n(static_cast<long>(s->n));
    const T eps = T(1) / n;
    const auto dist = detail::binary(n, eps);
    T miss(1);
    for (std::size_t k = 0; k < s->n; ++k) miss *= T(1) - eps;
    const T first_best = (T(1) - miss) * n;
    const T cost = (T(1) - eps) * first_best;
    std::vector<Alternative<T>> alts(s->n, Alternative<T>{dist, cost});
    return {Instance<T>(std::move(alts), AdditiveCosts<T>{}, T(0)), std::nullopt};
  }
  if (auto* s = std::get_if<InfoValueSpec<T>>(&spec)) {
    require(s->n >= 2 && s->n <= kMaxAlternatives, "info-value: need 2 <= n");
    require(s->eps > 0 && s->eps < 1, "info-value: need 0 < eps < 1");
    std::vector<Alternative<T>> alts(s->n, Alternative<T>{detail::binary(T(1), s->eps), T(0)});
    Instance<T> inst(std::move(alts), AdditiveCosts<T>{}, T(0));
    SignalingMechanism<T> mech;
    for (std::size_t i = 0; i < s->n; ++i) {
      PnoiPolicy<T> policy;
      detail::info_policy_rows(inst, i, inst.all(), std::optional<T>{}, policy);
      mech.signals.push_back("keep:" + std::to_string(i));
      mech.policies.push_back(std::move(policy));
    }
    return {std::move(inst), std::move(mech)};
  }
  if (auto* s = std::get_if<SpmiFailSpec>(&spec)) {
    require(s->n >= 1 && s->n <= kMaxAlternatives, "spmi-fail: n out of range");
    std::vector<Alternative<T>> alts(s->n, Alternative<T>{detail::binary(T(1), T(1) / T(2)), T(1)});
    return {Instance<T>(std::move(alts), AdditiveCosts<T>{}, T(0)), std::nullopt};
  }
  return {detail::random_instance(std::get<RandomSpec<T>>(spec)), std::nullopt};
}

/// `count` random instances; instance k uses seed splitmix64(seed + k) and a size
/// drawn from [1, max_n].
template <Scalar T>
std::vector<Instance<T>> random_corpus(std::uint64_t seed, std::size_t count, std::size_t max_n,
                                       const RandomSpec<T>& shape) {
  std::vector<Instance<T>> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    RandomSpec<T> s = shape;
    s.seed = splitmix64(seed + k);
    s.n = 1 + static_cast<std::size_t>(splitmix64(s.seed) % max_n);
    out.push_back(detail::random_instance(s));
  }
  return out;
}

/// A random but complete decision table over every state reachable under it.
template <Scalar T>
PnoiPolicy<T> random_policy(const Instance<T>& instance, Rng& rng) {
  PnoiPolicy<T> policy;
  auto fill = [&](auto& self, Mask unopened, const std::optional<T>& best) -> void {
    PolicyState<T> state{unopened, best};
    if (policy.find(state)) return;
    std::vector<Action> terminal{Action::stop()};
    if (best) terminal.push_back(Action::select_opened_best());
    std::vector<std::size_t> closed;
    for (std::size_t j = 0; j < instance.size(); ++j)
      if (contains(unopened, j)) {
        closed.push_back(j);
        terminal.push_back(Action::select_closed(j));
      }
    if (!closed.empty() && rng.coin()) {
      const std::size_t j = closed[rng.uniform(0, closed.size() - 1)];
      policy.set(state, Action::inspect(j));
      for (const auto& a : instance[j].dist.atoms()) {
        T next = best && *best > a.value ? *best : a.value;
        self(self, unopened & ~bit(j), std::optional<T>(next));
      }
      return;
    }
    policy.set(state, terminal[rng.uniform(0, terminal.size() - 1)]);
  };
  fill(fill, instance.all(), std::nullopt);
  return policy;
}

template <Scalar T>
SignalingMechanism<T> random_signaling_mechanism(const Instance<T>& instance, std::uint64_t seed,
                                                 std::size_t max_signals = 4) {
  Rng rng(seed);
  SignalingMechanism<T> mech;
  const std::size_t count = rng.uniform(1, max_signals);
  for (std::size_t s = 0; s < count; ++s) {
    mech.signals.push_back("s" + std::to_string(s));
    mech.policies.push_back(random_policy(instance, rng));
  }
  return mech;
}

// ---------------------------------------------------------------------------
// Inspection-only policies on identical binary instances
// ---------------------------------------------------------------------------

template <Scalar T>
struct IdenticalBinaryShape {
  std::size_t n;
  T p;
  T v;
  T c;
};

/// Recognizes n identical boxes on {0, v} (v > 0) with equal additive costs.
template <Scalar T>
IdenticalBinaryShape<T> identical_binary_shape(const Instance<T>& instance) {
  if (!instance.additive()) throw Error(ErrorKind::ShapeMismatch, "identical-binary needs additive costs");
  const auto& first = instance[0];
  for (const auto& alt : instance.alternatives())
    if (!(alt.dist == first.dist) || alt.inspect_cost != first.inspect_cost)
      throw Error(ErrorKind::ShapeMismatch, "alternatives are not identical");
  const auto& d = first.dist;
  IdenticalBinaryShape<T> shape{instance.size(), T(0), T(0), first.inspect_cost};
  if (d.size() == 1 && d.max_value() > 0) {
    shape.p = T(1);
    shape.v = d.max_value();
  } else if (d.size() == 2 && d.min_value() == 0) {
    shape.p = d[1].prob;
    shape.v = d[1].value;
  } else {
    throw Error(ErrorKind::ShapeMismatch, "distribution is not supported on {0, v}");
  }
  return shape;
}

/// Inspect up to k boxes, taking the first that shows v; after k misses take an
/// unopened box closed (or stop when none is left).
template <Scalar T>
T inspection_only_value(const IdenticalBinaryShape<T>& s, std::size_t k) {
  if (k > s.n) throw Error(ErrorKind::InvalidParameters, "k exceeds n");
  T total(0);
  T miss(1);  // (1-p)^(i-1)
  for (std::size_t i = 1; i <= k; ++i) {
    total += s.p * miss * (s.v - T(static_cast<long>(i)) * s.c);
    miss *= T(1) - s.p;
  }
  const T spent = T(static_cast<long>(k)) * s.c;
  total += miss * (k < s.n ? T(s.p * s.v - spent) : T(-spent));
  return total;
}

template <Scalar T>
T inspection_only_best(const Instance<T>& instance) {
  const auto shape = identical_binary_shape(instance);
  T best = inspection_only_value(shape, 0);
  for (std::size_t k = 1; k <= shape.n; ++k) {
    T v = inspection_only_value(shape, k);
    if (v > best) best = std::move(v);
  }
  return best;
}

}  // namespace delegatebox
