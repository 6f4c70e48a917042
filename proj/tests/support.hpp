#pragma once

#include <gtest/gtest.h>

#include "delegatebox/delegatebox.hpp"

namespace testing_support {

using namespace delegatebox;
using Q = Rational;

inline Q q(const char* text) { return parse_scalar<Q>(text); }

template <Scalar T = Q>
DiscreteDistribution<T> binary(const T& v, const T& p) {
  return make_distribution<T>({{T(0), T(1) - p}, {v, p}});
}

template <Scalar T = Q>
Instance<T> additive(std::vector<Alternative<T>> alts, T cdel = T(0)) {
  return Instance<T>(std::move(alts), AdditiveCosts<T>{}, std::move(cdel));
}

/// Corpus used across tests: n <= max_n, support <= 3, values in [0, 4], costs in [0, 2].
template <Scalar T = Q>
std::vector<Instance<T>> corpus(std::uint64_t seed, std::size_t count, std::size_t max_n = 4,
                                bool equal_costs = false) {
  RandomSpec<T> shape = default_corpus_shape<T>();
  shape.equal_costs = equal_costs;
  return random_corpus<T>(seed, count, max_n, shape);
}

}  // namespace testing_support
