#pragma once

// Fixed suite of numeric claims, each evaluated exactly and reported as a row.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "delegatebox/instances.hpp"
#include "delegatebox/io.hpp"

namespace delegatebox {

struct ReproRow {
  std::string id;
  std::string claim;
  bool pass = false;
  json values = json::object();
};

struct ReproOptions {
  std::uint64_t seed = 7;
  std::size_t corpus_size = 200;
  Limits limits{};
};

/// Shape of the seeded corpora: n <= 4, support <= 3, values in [0, 4], costs in [0, 2].
template <Scalar T>
RandomSpec<T> default_corpus_shape() {
  RandomSpec<T> s;
  s.support_size = 3;
  s.value_lo = T(0);
  s.value_hi = T(4);
  s.cost_lo = T(0);
  s.cost_hi = T(2);
  s.grid = 4;
  return s;
}

namespace detail {

template <Scalar T>
T ratio(const T& num, const T& den) {
  return den > 0 ? T(num / den) : T(0);
}

template <Scalar T>
T power(T base, std::size_t k) {
  T out(1);
  for (std::size_t i = 0; i < k; ++i) out *= base;
  return out;
}

// 1/e rounded up: 0.36787944117144233 < 0.3678794412.
template <Scalar T>
T inv_e_upper() {
  return parse_scalar<T>("0.3678794412");
}

template <Scalar T>
std::vector<ReproRow> tightness_rows(const ReproOptions& opt) {
  std::vector<ReproRow> rows;
  std::optional<T> previous;
  bool monotone = true;
  for (const char* eps_text : {"0.2", "0.1", "0.05", "0.01"}) {
    const T eps = parse_scalar<T>(eps_text);
    const auto inst = gen<T>(TightnessSpec<T>{eps}).instance;
    const T opt_value = pnoi_optimal(inst, opt.limits).value;
    const T expected = T(3) - T(3) * eps + eps * eps;
    const auto mech = maximal_mechanism_costless(inst, opt.limits);
    const auto a = audit(inst, mech, Regime<T>{CostlessRegime{}}, opt.limits);
    const T r = ratio(opt_value, mech.value);
    if (previous && !(r > *previous)) monotone = false;
    previous = r;
    ReproRow row{std::string("tightness/eps=") + eps_text, "pnoi = 3 - 3eps + eps^2, maximal mechanism = 1, audit passes"};
    row.pass = approx_eq(opt_value, expected) && approx_eq(mech.value, T(1)) && a.pass;
    row.values = {{"eps", scalar_to_json(eps)},
                  {"opt", scalar_to_json(opt_value)},
                  {"opt_expected", scalar_to_json(expected)},
                  {"mechanism", scalar_to_json(mech.value)},
                  {"branch", std::string(to_string(mech.chosen_branch))},
                  {"ratio", scalar_to_json(r)},
                  {"ub_costless", scalar_to_json(a.ub_costless)},
                  {"audit_pass", a.pass}};
    rows.push_back(std::move(row));
  }
  ReproRow trend{"tightness/monotone", "opt/mechanism strictly increases as eps shrinks and stays <= 3"};
  trend.pass = monotone && previous && approx_ge(T(3), *previous);
  trend.values = {{"last_ratio", scalar_to_json(*previous)}};
  rows.push_back(std::move(trend));
  return rows;
}

template <Scalar T>
std::vector<ReproRow> no_delegation_rows(const ReproOptions& opt) {
  std::vector<ReproRow> rows;
  for (std::size_t n : {6u, 10u, 20u}) {
    const T nn(static_cast<long>(n));
    const auto inst = gen<T>(IdenticalBinarySpec<T>{n, T(1) / nn, T(1), T(2) / nn}).instance;
    const T inspection_only = inspection_only_best(inst);
    const T spmi = evaluate_spmi(inst, build_spmi(inst), WorstCaseAgent{}, opt.limits);
    const T bound = T(1) - power(T(1) - T(1) / nn, n) - T(2) / nn;
    ReproRow row{"no-delegation/n=" + std::to_string(n),
                 "inspection-only <= 1/n while worst-case SPMI >= 1 - (1-1/n)^n - 2/n >= 1/6"};
    row.pass = approx_ge(T(1) / nn, inspection_only) && approx_ge(spmi, bound) && approx_ge(bound, T(1) / T(6));
    row.values = {{"n", n},
                  {"inspection_only_best", scalar_to_json(inspection_only)},
                  {"spmi", scalar_to_json(spmi)},
                  {"spmi_bound", scalar_to_json(bound)},
                  {"ratio_lower", scalar_to_json(ratio(spmi, inspection_only))}};
    rows.push_back(std::move(row));
  }
  return rows;
}

template <Scalar T>
ReproRow first_best_row(const ReproOptions& opt) {
  const std::size_t n = 10;
  const auto inst = gen<T>(InapproxFirstBestSpec{n}).instance;
  const T first_best = expected_of_max(inst, MaxTransform::Identity, opt.limits);
  const T pnoi = pnoi_optimal(inst, opt.limits).value;
  const T spmi = evaluate_spmi(inst, build_spmi(inst), WorstCaseAgent{}, opt.limits);
  const T maximal = maximal_mechanism_costless(inst, opt.limits).value;
  const T costly = costly_mechanism(inst, exact_pnoi_oracle<T>(), opt.limits).value;
  const T identical = identical_cost_mechanism(inst, opt.limits).value;
  const T floor = (T(1) - inv_e_upper<T>()) * T(10);
  T best = pnoi;
  for (const T* v : {&spmi, &maximal, &costly, &identical})
    if (*v > best) best = *v;
  ReproRow row{"first-best/n=10", "every implemented mechanism <= 1 while E[max X] >= (1 - 1/e) n"};
  row.pass = approx_ge(T(1), best) && approx_ge(first_best, floor);
  row.values = {{"first_best", scalar_to_json(first_best)},
                {"pnoi", scalar_to_json(pnoi)},
                {"spmi", scalar_to_json(spmi)},
                {"maximal", scalar_to_json(maximal)},
                {"costly", scalar_to_json(costly)},
                {"identical", scalar_to_json(identical)},
                {"ratio", scalar_to_json(ratio(first_best, best))}};
  return row;
}

// Same family with delegation priced at E[max Z]: delegating can no longer pay.
template <Scalar T>
ReproRow first_best_priced_row(const ReproOptions& opt) {
  const auto base = gen<T>(InapproxFirstBestSpec{10}).instance;
  const T shifted = expected_of_max(base, MaxTransform::ShiftedPositive, opt.limits);
  const auto inst = base.with_delegation_cost(shifted);
  const T first_best = expected_of_max(inst, MaxTransform::Identity, opt.limits);
  const T pnoi = pnoi_optimal(inst, opt.limits).value;
  const T spmi = evaluate_spmi(inst, build_spmi(inst), WorstCaseAgent{}, opt.limits);
  const T costly = costly_mechanism(inst, exact_pnoi_oracle<T>(), opt.limits).value;
  const T ub = upper_bound_costly(inst, opt.limits);
  T best = pnoi;
  for (const T* v : {&spmi, &costly})
    if (*v > best) best = *v;
  ReproRow row{"first-best/n=10/priced", "with c_Del = E[max Z]: every mechanism <= ub_costly = 1"};
  row.pass = approx_ge(T(1), best) && approx_ge(T(1), ub) && approx_ge(first_best, (T(1) - inv_e_upper<T>()) * T(10));
  row.values = {{"delegation_cost", scalar_to_json(inst.delegation_cost())},
                {"pnoi", scalar_to_json(pnoi)},
                {"spmi", scalar_to_json(spmi)},
                {"costly", scalar_to_json(costly)},
                {"ub_costly", scalar_to_json(ub)},
                {"ratio", scalar_to_json(ratio(first_best, best))}};
  return row;
}

template <Scalar T>
std::vector<ReproRow> info_rows(const ReproOptions& opt) {
  std::vector<ReproRow> rows;
  const T eps = parse_scalar<T>("0.01");
  for (std::size_t n : {5u, 10u}) {
    const auto g = gen<T>(InfoValueSpec<T>{n, eps});
    const T mass = uninspected_selection_utility(g.instance, *g.mechanism,
                                                 AgentProfile<T>{cost_ordered_agent(g.instance)}, opt.limits);
    const T nn(static_cast<long>(n));
    const T expected = nn * eps * power(T(1) - eps, n - 1);
    const T r = mass / eps;
    ReproRow row{"info/n=" + std::to_string(n), "uninspected mass = n eps (1-eps)^(n-1) and mass / eps > 0.9 n"};
    row.pass = approx_eq(mass, expected) && r > parse_scalar<T>("0.9") * nn;
    row.values = {{"mass", scalar_to_json(mass)}, {"expected", scalar_to_json(expected)}, {"ratio", scalar_to_json(r)}};
    rows.push_back(std::move(row));
  }
  return rows;
}

template <Scalar T>
ReproRow spmi_fail_row(const ReproOptions& opt) {
  const auto inst = gen<T>(SpmiFailSpec{2}).instance;
  const auto spmi = build_spmi(inst);
  const T value = evaluate_spmi(inst, spmi, WorstCaseAgent{}, opt.limits);
  const T closed = best_closed_selection(inst).second;
  ReproRow row{"spmi-fail/n=2", "worst-case SPMI earns 0 while closed selection earns 1/2"};
  row.pass = spmi.threshold == 0 && approx_eq(value, T(0)) && approx_eq(closed, T(1) / T(2));
  row.values = {{"threshold", scalar_to_json(spmi.threshold)},
                {"spmi", scalar_to_json(value)},
                {"closed", scalar_to_json(closed)}};
  return row;
}

template <Scalar T>
ReproRow prophet_row(const ReproOptions& opt) {
  RandomSpec<T> shape = default_corpus_shape<T>();
  const auto corpus = random_corpus(opt.seed, opt.corpus_size, 4, shape);
  std::size_t violations = 0;
  T worst_slack(0);
  bool first = true;
  for (const auto& inst : corpus) {
    const T value = evaluate_spmi(inst, build_spmi(inst), WorstCaseAgent{}, opt.limits) + inst.delegation_cost();
    const T half = expected_of_max(inst, MaxTransform::ShiftedPositive, opt.limits) / 2;
    if (!approx_ge(value, half)) ++violations;
    T slack = value - half;
    if (first || slack < worst_slack) worst_slack = slack;
    first = false;
  }
  ReproRow row{"spmi-bound/seeded", "worst-case SPMI + c_Del >= E[max Z] / 2 on every instance"};
  row.pass = violations == 0;
  row.values = {{"instances", corpus.size()}, {"violations", violations}, {"min_slack", scalar_to_json(worst_slack)}};
  return row;
}

template <Scalar T>
std::vector<ReproRow> costly_rows(const ReproOptions& opt) {
  std::vector<ReproRow> rows;
  std::uint64_t salt = 0;
  for (const char* alpha_text : {"1/10", "1/4", "2/5"}) {
    const T alpha = parse_scalar<T>(alpha_text);
    const auto corpus =
        random_corpus(splitmix64(opt.seed ^ (0xa1fa0000ull + ++salt)), opt.corpus_size, 4, default_corpus_shape<T>());
    std::size_t violations = 0;
    std::size_t delegated = 0;
    T worst(0);
    bool first = true;
    for (const auto& base : corpus) {
      const auto inst =
          base.with_delegation_cost(alpha * expected_of_max(base, MaxTransform::ShiftedPositive, opt.limits));
      const auto report = costly_mechanism(inst, exact_pnoi_oracle<T>(), opt.limits);
      const auto a = audit(inst, report, Regime<T>{CostlyRegime<T>{alpha}}, opt.limits);
      if (!a.pass) ++violations;
      if (report.delegated) ++delegated;
      if (a.ratio && (first || *a.ratio > worst)) {
        worst = *a.ratio;
        first = false;
      }
    }
    ReproRow row{std::string("costly/alpha=") + alpha_text,
                 "costly mechanism >= (1-2a)/(3-4a) ub_costly on every instance"};
    row.pass = violations == 0;
    row.values = {{"alpha", scalar_to_json(alpha)},
                  {"claimed_factor", scalar_to_json(costly_factor(alpha))},
                  {"instances", corpus.size()},
                  {"violations", violations},
                  {"delegated", delegated},
                  {"worst_ratio", scalar_to_json(worst)}};
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

/// Runs every row in a fixed order.
template <Scalar T>
std::vector<ReproRow> run_repro(const ReproOptions& opt = {}) {
  std::vector<ReproRow> rows;
  auto append = [&](std::vector<ReproRow> more) {
    for (auto& r : more) rows.push_back(std::move(r));
  };
  append(detail::tightness_rows<T>(opt));
  append(detail::no_delegation_rows<T>(opt));
  rows.push_back(detail::first_best_row<T>(opt));
  rows.push_back(detail::first_best_priced_row<T>(opt));
  append(detail::info_rows<T>(opt));
  rows.push_back(detail::spmi_fail_row<T>(opt));
  rows.push_back(detail::prophet_row<T>(opt));
  append(detail::costly_rows<T>(opt));
  return rows;
}

template <Scalar T>
json repro_to_json(const std::vector<ReproRow>& rows, const ReproOptions& opt) {
  json out;
  out["schema"] = kSchemaVersion;
  out["mode"] = std::string(to_string(ScalarTraits<T>::mode));
  out["seed"] = opt.seed;
  out["corpus_size"] = opt.corpus_size;
  json list = json::array();
  bool all = true;
  for (const auto& r : rows) {
    list.push_back({{"id", r.id}, {"claim", r.claim}, {"pass", r.pass}, {"values", r.values}});
    all = all && r.pass;
  }
  out["rows"] = std::move(list);
  out["all_pass"] = all;
  return out;
}

inline std::string render_repro_table(const std::vector<ReproRow>& rows) {
  std::ostringstream out;
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.id.size());
  for (const auto& r : rows) {
    out << (r.pass ? "PASS  " : "FAIL  ") << std::left << std::setw(static_cast<int>(width + 2)) << r.id;
    bool first = true;
    for (const auto& [key, value] : r.values.items()) {
      out << (first ? "" : "  ") << key << "=";
      if (value.is_string()) {
        // Exact fractions are long; show a decimal.
        const std::string text = value.get<std::string>();
        try {
          out << to_display(parse_scalar<Rational>(text), 6);
        } catch (const Error&) {
          out << text;
        }
      } else {
        out << value.dump();
      }
      first = false;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace delegatebox
