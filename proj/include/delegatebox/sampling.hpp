#pragma once

// Monte Carlo estimates for instances too large to enumerate. Estimates are
// always reported with their standard error and never feed pass/fail checks.

#include <cmath>
#include <cstdint>

#include "delegatebox/instances.hpp"

namespace delegatebox {

struct MonteCarloEstimate {
  double mean = 0;
  double std_error = 0;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;

  double lower() const { return mean - 3 * std_error; }
  double upper() const { return mean + 3 * std_error; }
};

/// Draws one realization by inverting each alternative's CDF.
template <Scalar T>
Realization<T> sample_realization(const Instance<T>& instance, Rng& rng) {
  Realization<T> x;
  x.values.reserve(instance.size());
  for (const auto& alt : instance.alternatives()) {
    const double u = static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
    const auto& atoms = alt.dist.atoms();
    double acc = 0;
    std::size_t k = 0;
    for (; k + 1 < atoms.size(); ++k) {
      acc += to_double(atoms[k].prob);
      if (u < acc) break;
    }
    x.values.push_back(atoms[k].value);
  }
  return x;
}

/// Sample mean of g(X) with its standard error (Welford accumulation).
template <Scalar T, class G>
MonteCarloEstimate monte_carlo(const Instance<T>& instance, std::uint64_t trials, std::uint64_t seed, G&& g) {
  if (trials < 2) throw Error(ErrorKind::InvalidParameters, "Monte Carlo needs at least 2 trials");
  Rng rng(seed);
  double mean = 0;
  double m2 = 0;
  for (std::uint64_t t = 1; t <= trials; ++t) {
    const double v = to_double(g(sample_realization(instance, rng)));
    const double delta = v - mean;
    mean += delta / static_cast<double>(t);
    m2 += delta * (v - mean);
  }
  const double var = m2 / static_cast<double>(trials - 1);
  return {mean, std::sqrt(var / static_cast<double>(trials)), trials, seed};
}

}  // namespace delegatebox
