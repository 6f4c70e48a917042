#include "oracles.hpp"
#include "support.hpp"

using namespace testing_support;

namespace {

// Inspects every box in index order, then takes the best one seen.
PnoiPolicy<Q> inspect_all_policy(const Instance<Q>& inst) {
  PnoiPolicy<Q> policy;
  auto fill = [&](auto& self, Mask unopened, std::optional<Q> best) -> void {
    if (unopened == 0) {
      policy.set({unopened, best}, Action::select_opened_best());
      return;
    }
    const std::size_t j = static_cast<std::size_t>(std::countr_zero(unopened));
    policy.set({unopened, best}, Action::inspect(j));
    for (const auto& a : inst[j].dist.atoms())
      self(self, unopened & ~bit(j), std::optional<Q>(best && *best > a.value ? *best : a.value));
  };
  fill(fill, inst.all(), std::nullopt);
  return policy;
}

PnoiPolicy<Q> closed_policy(const Instance<Q>& inst, std::size_t i) {
  PnoiPolicy<Q> policy;
  policy.set({inst.all(), std::nullopt}, Action::select_closed(i));
  return policy;
}

// X1 in {0, 2}, X2 in {0, 1}, both fair, free inspection.
Instance<Q> two_box() { return additive<Q>({{binary(Q(2), q("0.5")), Q(0)}, {binary(Q(1), q("0.5")), Q(0)}}); }

}  // namespace

TEST(Threshold, Examples) {
  const auto coin = binary(Q(1), q("0.5"));
  EXPECT_EQ(prophet_threshold<Q>(std::vector{coin, coin}), Q(1));
  EXPECT_EQ(prophet_threshold<Q>(std::vector{DiscreteDistribution<Q>::point_mass(Q(5))}), Q(5));
  const auto zero = DiscreteDistribution<Q>::point_mass(Q(0));
  EXPECT_EQ(prophet_threshold<Q>(std::vector{zero, zero, zero}), Q(0));
}

TEST(Threshold, MedianRuleLosesHalfWithAtoms) {
  // Z1 = 1 surely, Z2 = 1000 w.p. 1/100: E[max] = 10.99.
  const auto inst = additive<Q>({{DiscreteDistribution<Q>::point_mass(Q(1)), Q(0)}, {binary(Q(1000), q("0.01")), Q(0)}});
  const Q half = expected_of_max(inst, MaxTransform::ShiftedPositive) / 2;
  const auto median = build_spmi(inst, ThresholdRule::Median);
  EXPECT_EQ(median.threshold, Q(1));
  EXPECT_LT(evaluate_spmi(inst, median, WorstCaseAgent{}), half);
  const auto rule = build_spmi(inst);
  EXPECT_EQ(rule.threshold, Q(1000));
  EXPECT_GE(evaluate_spmi(inst, rule, WorstCaseAgent{}), half);
}

TEST(Spmi, BuildExamples) {
  const auto fail = gen<Q>(SpmiFailSpec{2}).instance;
  const auto s = build_spmi(fail);
  EXPECT_EQ(s.threshold, Q(0));
  EXPECT_EQ(evaluate_spmi(fail, s, WorstCaseAgent{}), Q(0));

  const auto tight = gen<Q>(TightnessSpec<Q>{q("0.01")}).instance;
  EXPECT_EQ(expected_of_max(tight, MaxTransform::ShiftedPositive) / 2, q("0.995"));
  EXPECT_GE(evaluate_spmi(tight, build_spmi(tight), WorstCaseAgent{}), q("0.995"));

  const auto zero = DiscreteDistribution<Q>::point_mass(Q(0));
  EXPECT_EQ(build_spmi(additive<Q>({{zero, Q(0)}, {zero, Q(1)}})).threshold, Q(0));
}

TEST(Spmi, NoDelegationFailsInstance) {
  const auto inst = gen<Q>(IdenticalBinarySpec<Q>{6, Q(1) / 6, Q(1), Q(1) / 3}).instance;
  const auto spmi = build_spmi(inst);
  EXPECT_GT(spmi.threshold, Q(0));
  const Q value = evaluate_spmi(inst, spmi, WorstCaseAgent{});
  const Q miss = oracle::spmi_worst_case(inst, spmi.threshold);
  EXPECT_EQ(value, miss);
  Q none(1);
  for (int i = 0; i < 6; ++i) none *= Q(5) / 6;
  EXPECT_EQ(value, (1 - none) * Q(2) / 3);
  EXPECT_GE(value, 1 - none - Q(1) / 3);
}

TEST(Spmi, NothingEligibleStillPaysDelegation) {
  const auto inst = gen<Q>(SpmiFailSpec{3}).instance.with_delegation_cost(q("0.25"));
  EXPECT_EQ(evaluate_spmi(inst, build_spmi(inst), WorstCaseAgent{}), q("-0.25"));
}

TEST(Spmi, DeterministicAgentByHand) {
  const auto inst = two_box();
  const Spmi<Q> spmi{Q(1)};
  // Outcomes (0,0) none, (2,0) box 0, (0,1) box 1, (2,1) agent's favourite.
  EXPECT_EQ(evaluate_spmi(inst, spmi, AgentProfile<Q>{DeterministicAgent<Q>{{Q(1), Q(2)}}}), Q(1));
  EXPECT_EQ(evaluate_spmi(inst, spmi, AgentProfile<Q>{DeterministicAgent<Q>{{Q(2), Q(1)}}}), q("1.25"));
  EXPECT_EQ(evaluate_spmi(inst, spmi, WorstCaseAgent{}), Q(1));
  // Indifferent agent resolves in the principal's favour.
  EXPECT_EQ(evaluate_spmi(inst, spmi, AgentProfile<Q>{DeterministicAgent<Q>{{Q(1), Q(1)}}}), q("1.25"));
}

TEST(Spmi, DistributionalAgent) {
  const auto inst = two_box();
  const DistributionalAgent<Q> agent{{DiscreteDistribution<Q>::point_mass(Q(1)), binary(Q(2), q("0.5"))}};
  EXPECT_EQ(evaluate_spmi(inst, Spmi<Q>{Q(1)}, AgentProfile<Q>{agent}), q("1.125"));
}

TEST(Spmi, WorstCaseNeverBeatsAnyAgent) {
  Rng rng(31);
  for (const auto& inst : corpus(31, 100)) {
    const auto spmi = build_spmi(inst);
    const Q worst = evaluate_spmi(inst, spmi, WorstCaseAgent{});
    EXPECT_EQ(worst, oracle::spmi_worst_case(inst, spmi.threshold));
    DeterministicAgent<Q> agent;
    for (std::size_t i = 0; i < inst.size(); ++i) agent.utilities.push_back(Q(static_cast<long>(rng.uniform(0, 5))));
    EXPECT_LE(worst, evaluate_spmi(inst, spmi, AgentProfile<Q>{agent}));
  }
}

TEST(Spmi, SignalingFormMatchesDirectEvaluation) {
  Rng rng(32);
  for (const auto& inst : corpus(32, 80)) {
    const auto spmi = build_spmi(inst);
    DeterministicAgent<Q> agent;
    for (std::size_t i = 0; i < inst.size(); ++i) agent.utilities.push_back(Q(static_cast<long>(rng.uniform(1, 9))));
    EXPECT_EQ(evaluate_signaling(inst, spmi_as_signaling(inst, spmi), AgentProfile<Q>{agent}),
              evaluate_spmi(inst, spmi, AgentProfile<Q>{agent}));
  }
}

TEST(Spmi, ProphetGuaranteeOnCorpus) {
  RandomSpec<Q> shape = default_corpus_shape<Q>();
  shape.cdel_hi = Q(1);
  for (const auto& inst : random_corpus<Q>(33, 300, 4, shape)) {
    const Q value = evaluate_spmi(inst, build_spmi(inst), WorstCaseAgent{});
    EXPECT_GE(value + inst.delegation_cost(), expected_of_max(inst, MaxTransform::ShiftedPositive) / 2);
  }
}

TEST(BestClosed, Examples) {
  const auto tight = gen<Q>(TightnessSpec<Q>{q("0.01")}).instance;
  EXPECT_EQ(best_closed_selection(tight), std::make_pair(std::size_t{0}, Q(1)));
  const auto single = additive<Q>({{binary(Q(3), q("0.5")), Q(1)}});
  EXPECT_EQ(best_closed_selection(single).first, 0u);
  const auto inst = additive<Q>({{binary(Q(1), q("0.2")), Q(0)}, {binary(Q(1), q("0.9")), Q(0)},
                                 {binary(Q(1), q("0.9")), Q(0)}});
  EXPECT_EQ(best_closed_selection(inst), std::make_pair(std::size_t{1}, q("0.9")));
}

TEST(Maximal, Examples) {
  const auto tight = maximal_mechanism_costless(gen<Q>(TightnessSpec<Q>{q("0.01")}).instance);
  EXPECT_EQ(tight.chosen_branch, Branch::SelectBestClosed);
  EXPECT_EQ(tight.value, Q(1));

  const auto single = maximal_mechanism_costless(additive<Q>({{DiscreteDistribution<Q>::point_mass(Q(10)), Q(0)}}));
  EXPECT_EQ(single.value, Q(10));

  const auto inst = gen<Q>(IdenticalBinarySpec<Q>{6, Q(1) / 6, Q(1), Q(1) / 3}).instance;
  const auto r = maximal_mechanism_costless(inst);
  EXPECT_EQ(r.chosen_branch, Branch::Spmi);
  EXPECT_GT(*r.v2, *r.v1);
  EXPECT_GE(r.value, expected_of_max(inst, MaxTransform::ShiftedPositive) / 2);
  EXPECT_TRUE(r.delegated);
}

TEST(Maximal, RequiresFreeDelegation) {
  const auto inst = gen<Q>(SpmiFailSpec{2}).instance.with_delegation_cost(Q(1));
  try {
    maximal_mechanism_costless(inst);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotCostless);
  }
}

TEST(Maximal, ThirdOfUpperBoundOnCorpus) {
  for (const auto& inst : corpus(34, 300))
    EXPECT_GE(3 * maximal_mechanism_costless(inst).value, upper_bound_costless(inst));
}

TEST(Costly, Examples) {
  const auto base = gen<Q>(TightnessSpec<Q>{q("0.01")}).instance;
  const auto free = costly_mechanism(base);
  EXPECT_EQ(free.chosen_branch, Branch::PnoiDirect);
  EXPECT_EQ(free.value, q("2.9701"));

  for (const auto& inst : corpus(35, 50)) {
    const auto pricey = inst.with_delegation_cost(Q(100));
    const auto r = costly_mechanism(pricey);
    EXPECT_EQ(r.chosen_branch, Branch::PnoiDirect);
    EXPECT_EQ(r.value, pnoi_optimal(inst).value);
  }
}

TEST(Costly, QuarterAlphaBound) {
  const Q alpha = q("0.25");
  for (const auto& base : corpus(36, 100)) {
    const Q z = expected_of_max(base, MaxTransform::ShiftedPositive);
    const auto inst = base.with_delegation_cost(alpha * z);
    EXPECT_GE(costly_mechanism(inst).value, (Q(1) / 2 - alpha) * z);
  }
}

TEST(Costly, DelegatesWhenInspectionAloneFails) {
  const auto inst = gen<Q>(IdenticalBinarySpec<Q>{8, Q(1) / 8, Q(1), Q(1) / 4}).instance.with_delegation_cost(q("0.01"));
  const auto r = costly_mechanism(inst);
  EXPECT_EQ(r.chosen_branch, Branch::Spmi);
  EXPECT_GT(r.value, pnoi_optimal(inst).value);
}

TEST(Costly, OracleIsPluggable) {
  const auto inst = gen<Q>(TightnessSpec<Q>{q("0.1")}).instance;
  const auto r = costly_mechanism<Q>(inst, [](const Instance<Q>&, const Limits&) { return Q(0); });
  EXPECT_EQ(r.chosen_branch, Branch::Spmi);
}

TEST(Identical, Examples) {
  const auto free = additive<Q>({{binary(Q(4), q("0.5")), Q(0)}, {binary(Q(4), q("0.5")), Q(0)}});
  const auto r = identical_cost_mechanism(free);
  EXPECT_EQ(*r.v1, Q(2));
  EXPECT_EQ(*r.v2, expected_of_max(free, MaxTransform::Identity) / 2);
  EXPECT_EQ(r.value, Q(2));

  // Tightness-like boxes with all costs 1.
  const auto ones = additive<Q>({{binary(Q(10), q("0.1")), Q(1)}, {binary(Q(10), q("0.1")), Q(1)},
                                 {DiscreteDistribution<Q>::point_mass(Q(1)), Q(1)}});
  const auto r2 = identical_cost_mechanism(ones);
  EXPECT_EQ(*r2.v2, (oracle::expected_max_identity(ones) - 1) / 2);

  const auto single = identical_cost_mechanism(additive<Q>({{binary(Q(2), q("0.5")), q("0.5")}}));
  EXPECT_EQ(single.chosen_branch, Branch::SelectBestClosed);
  EXPECT_EQ(single.value, Q(1));

  try {
    identical_cost_mechanism(gen<Q>(TightnessSpec<Q>{q("0.1")}).instance);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CostsNotIdentical);
  }
}

TEST(Identical, HalfOfBoundOnCorpus) {
  for (const auto& inst : corpus(37, 300, 4, true))
    EXPECT_GE(2 * identical_cost_mechanism(inst).value, upper_bound_identical(inst));
}

TEST(BestResponse, InfoMechanismPicksTheLoneWinner) {
  const auto g = gen<Q>(InfoValueSpec<Q>{4, q("0.1")});
  const auto agent = cost_ordered_agent(g.instance);
  for (std::size_t k = 0; k < 4; ++k) {
    Realization<Q> x{std::vector<Q>(4, Q(0))};
    x.values[k] = Q(1);
    EXPECT_EQ(agent_best_response(g.instance, *g.mechanism, x, std::span<const Q>(agent.utilities)), k);
  }
}

TEST(BestResponse, IndifferenceAndPreference) {
  const auto inst = two_box();
  SignalingMechanism<Q> nothing;
  for (int s = 0; s < 3; ++s) {
    PnoiPolicy<Q> stop;
    stop.set({inst.all(), std::nullopt}, Action::stop());
    nothing.signals.push_back("s" + std::to_string(s));
    nothing.policies.push_back(stop);
  }
  const std::vector<Q> y{Q(1), Q(2)};
  const Realization<Q> x{{Q(2), Q(1)}};
  EXPECT_EQ(agent_best_response(inst, nothing, x, std::span<const Q>(y)), 0u);

  SignalingMechanism<Q> two;
  two.signals = {"nothing", "favourite"};
  PnoiPolicy<Q> stop;
  stop.set({inst.all(), std::nullopt}, Action::stop());
  two.policies = {stop, closed_policy(inst, 1)};
  EXPECT_EQ(agent_best_response(inst, two, x, std::span<const Q>(y)), 1u);
}

TEST(BestResponse, IsATrueArgmax) {
  for (const auto& inst : corpus(38, 40, 3)) {
    const auto mech = random_signaling_mechanism(inst, 38, 4);
    const auto agent = cost_ordered_agent(inst);
    for_each_realization(inst, Limits{}, [&](const Realization<Q>& x, const Q&) {
      const std::size_t s = agent_best_response(inst, mech, x, std::span<const Q>(agent.utilities));
      auto utility = [&](std::size_t sig) {
        const auto out = run_policy(inst, mech.policies[sig], x);
        return out.selected ? agent.utilities[*out.selected] : Q(0);
      };
      for (std::size_t t = 0; t < mech.size(); ++t) EXPECT_LE(utility(t), utility(s));
    });
  }
}

TEST(Signaling, InfoMechanismMass) {
  for (std::size_t n : {3u, 5u}) {
    const Q eps = q("0.1");
    const auto g = gen<Q>(InfoValueSpec<Q>{n, eps});
    const AgentProfile<Q> agent{cost_ordered_agent(g.instance)};
    Q tail(1);
    for (std::size_t i = 0; i + 1 < n; ++i) tail *= 1 - eps;
    EXPECT_EQ(uninspected_selection_utility(g.instance, *g.mechanism, agent), Q(static_cast<long>(n)) * eps * tail);
    EXPECT_LE(overinspection_utility(g.instance, *g.mechanism, agent), eps);
  }
}

TEST(Signaling, SignalIndependentEqualsPolicyEvaluation) {
  Rng rng(39);
  RandomSpec<Q> shape = default_corpus_shape<Q>();
  shape.cdel_hi = Q(1);
  for (const auto& inst : random_corpus<Q>(39, 60, 4, shape)) {
    const auto policy = random_policy(inst, rng);
    const AgentProfile<Q> agent{cost_ordered_agent(inst)};
    EXPECT_EQ(evaluate_signaling(inst, signal_independent(policy, 3), agent),
              evaluate_policy(inst, policy) - inst.delegation_cost());
  }
}

TEST(Signaling, TwoSignalsByHand) {
  const auto inst = two_box();
  // "closed0": take box 0 unopened. "peek1": open box 1, keep it if it shows 1,
  // otherwise take box 0 unopened.
  PnoiPolicy<Q> peek;
  peek.set({inst.all(), std::nullopt}, Action::inspect(1));
  peek.set({bit(0), Q(1)}, Action::select_opened_best());
  peek.set({bit(0), Q(0)}, Action::select_closed(0));
  SignalingMechanism<Q> mech{{"closed0", "peek1"}, {closed_policy(inst, 0), peek}};
  const std::vector<Q> y{Q(1), Q(3)};
  // Agent wants box 1: "peek1" when X2 = 1 (gets 3), else indifferent between the
  // two routes to box 0 and takes the lower signal.
  Q expected(0);
  for (const Q& x1 : {Q(0), Q(2)})
    for (const Q& x2 : {Q(0), Q(1)}) expected += q("0.25") * (x2 == 1 ? x2 : x1);
  EXPECT_EQ(evaluate_signaling(inst, mech, AgentProfile<Q>{DeterministicAgent<Q>{y}}), expected);
}

TEST(Overinspection, Examples) {
  const auto equal = corpus(40, 20, 4, true);
  for (const auto& inst : equal) {
    const auto mech = signal_independent(inspect_all_policy(inst));
    EXPECT_EQ(overinspection_utility(inst, mech, AgentProfile<Q>{cost_ordered_agent(inst)}), Q(0));
  }
  const auto d = binary(Q(3), q("0.5"));
  const auto rising = additive<Q>({{d, Q(0)}, {d, Q(1)}, {d, Q(2)}});
  const auto mech = signal_independent(closed_policy(rising, 0));
  EXPECT_EQ(overinspection_utility(rising, mech, AgentProfile<Q>{cost_ordered_agent(rising)}), expected_value(d));
}

TEST(Overinspection, BoundedByBestMeanForRandomMechanisms) {
  std::uint64_t seed = 41;
  for (const auto& inst : corpus(41, 100, 3)) {
    const auto mech = random_signaling_mechanism(inst, ++seed, 4);
    EXPECT_LE(overinspection_utility(inst, mech, AgentProfile<Q>{cost_ordered_agent(inst)}), max_expected(inst).second);
  }
}

TEST(Agent, Validation) {
  const auto inst = two_box();
  EXPECT_THROW(evaluate_spmi(inst, Spmi<Q>{Q(0)}, AgentProfile<Q>{DeterministicAgent<Q>{{Q(1)}}}), Error);
  EXPECT_THROW(evaluate_spmi(inst, Spmi<Q>{Q(0)}, AgentProfile<Q>{DeterministicAgent<Q>{{Q(1), Q(-1)}}}), Error);
  const auto agent = cost_ordered_agent(gen<Q>(TightnessSpec<Q>{q("0.1")}).instance);
  EXPECT_EQ(agent.utilities, (std::vector<Q>{Q(3), Q(2), Q(1)}));
}
