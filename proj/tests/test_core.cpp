#include "oracles.hpp"
#include "support.hpp"

using namespace testing_support;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::InternalInconsistency;
}

}  // namespace

TEST(Scalar, ParsesDecimalsFractionsAndExponents) {
  EXPECT_EQ(q("0.25"), Q(1) / 4);
  EXPECT_EQ(q("1e-3"), Q(1) / 1000);
  EXPECT_EQ(q("3/6"), Q(1) / 2);
  EXPECT_EQ(q("-0.5"), Q(-1) / 2);
  EXPECT_EQ(q("0012"), Q(12));
  EXPECT_EQ(q("1.50e1"), Q(15));
  EXPECT_EQ(q("08.09"), Q(809) / 100);
  EXPECT_EQ(q(".5"), Q(1) / 2);
  EXPECT_DOUBLE_EQ(parse_scalar<double>("1/4"), 0.25);
  for (const char* bad : {"", "abc", "1/0", "1.2.3", "1e", "--1"})
    EXPECT_EQ(kind_of([&] { q(bad); }), ErrorKind::ParseError) << bad;
}

TEST(Scalar, TextRoundTrip) {
  EXPECT_EQ(to_string(Q(3) / 7), "3/7");
  EXPECT_EQ(to_string(Q(4)), "4");
  EXPECT_EQ(parse_scalar<double>(to_string(0.1)), 0.1);
}

TEST(Distribution, MakeExamples) {
  const auto bern = make_distribution<Q>({{Q(0), q("0.5")}, {Q(1), q("0.5")}});
  ASSERT_EQ(bern.size(), 2u);
  EXPECT_EQ(bern[1].value, Q(1));

  const auto point = make_distribution<Q>({{Q(1), q("1.0")}});
  EXPECT_TRUE(point.is_point_mass());
  EXPECT_EQ(point.max_value(), Q(1));

  const auto merged = make_distribution<Q>({{Q(0), q("0.3")}, {Q(0), q("0.2")}, {Q(2), q("0.5")}});
  ASSERT_EQ(merged.size(), 2u);
  EXPECT_EQ(merged[0].prob, q("0.5"));
  EXPECT_EQ(merged[1].value, Q(2));
  EXPECT_EQ(merged, make_distribution<Q>({{Q(2), q("0.5")}, {Q(0), q("0.5")}}));
}

TEST(Distribution, DropsZeroProbabilityAtoms) {
  const auto d = make_distribution<Q>({{Q(0), Q(0)}, {Q(3), Q(1)}});
  EXPECT_TRUE(d.is_point_mass());
  EXPECT_EQ(d.min_value(), Q(3));
}

TEST(Distribution, Errors) {
  EXPECT_EQ(kind_of([] { make_distribution<Q>({}); }), ErrorKind::EmptySupport);
  EXPECT_EQ(kind_of([] { make_distribution<Q>({{Q(-1), Q(1)}}); }), ErrorKind::NegativeValue);
  EXPECT_EQ(kind_of([] { make_distribution<Q>({{Q(1), q("0.5")}}); }), ErrorKind::ProbabilitySumMismatch);
  EXPECT_EQ(kind_of([] { make_distribution<Q>({{Q(1), q("1.5")}, {Q(2), q("-0.5")}}); }),
            ErrorKind::NegativeProbability);
  EXPECT_EQ(kind_of([] { make_distribution<Q>({{Q(0), Q(0)}}); }), ErrorKind::ProbabilitySumMismatch);
}

TEST(Distribution, FloatModeToleratesRounding) {
  const auto d = make_distribution<double>({{0.0, 0.1}, {1.0, 0.2}, {2.0, 0.7000000000000001}});
  EXPECT_EQ(d.size(), 3u);
  EXPECT_THROW(make_distribution<double>({{0.0, 0.5}, {1.0, 0.5001}}), Error);
}

TEST(ExpectedValue, Examples) {
  EXPECT_EQ(expected_value(DiscreteDistribution<Q>::point_mass(Q(1))), Q(1));
  EXPECT_EQ(expected_value(binary(Q(10), q("0.1"))), Q(1));
  EXPECT_EQ(expected_value(make_distribution<Q>({{Q(0), q("0.25")}, {Q(2), q("0.75")}})), q("1.5"));
}

TEST(ExpectedOfMax, TightnessShifted) {
  const auto inst = gen<Q>(TightnessSpec<Q>{q("0.5")}).instance;
  EXPECT_EQ(expected_of_max(inst, MaxTransform::ShiftedPositive), q("1.5"));
  EXPECT_EQ(expected_of_max(inst, MaxTransform::ShiftedPositive), oracle::expected_max_shifted(inst));
}

TEST(ExpectedOfMax, SingleAlternativeIsItsMean) {
  const auto d = make_distribution<Q>({{Q(1), q("0.2")}, {Q(5), q("0.8")}});
  const auto inst = additive<Q>({{d, Q(0)}});
  EXPECT_EQ(expected_of_max(inst, MaxTransform::Identity), expected_value(d));
}

TEST(ExpectedOfMax, ThreeUniformMatchesBruteForce) {
  const auto u = make_distribution<Q>({{Q(0), Q(1) / 3}, {Q(1), Q(1) / 3}, {Q(2), Q(1) / 3}});
  const auto inst = additive<Q>({{u, Q(0)}, {u, Q(0)}, {u, Q(0)}});
  const Q value = expected_of_max(inst, MaxTransform::Identity);
  EXPECT_EQ(value, oracle::expected_max_identity(inst));
  // P(max >= 1) + P(max >= 2) = 26/27 + 19/27
  EXPECT_EQ(value, Q(5) / 3);
}

TEST(ExpectedOfMax, EnumerationLimit) {
  const auto inst = gen<Q>(TightnessSpec<Q>{q("0.5")}).instance;
  EXPECT_EQ(kind_of([&] { expected_of_max(inst, MaxTransform::Identity, Limits{3, 100}); }),
            ErrorKind::EnumerationLimitExceeded);
  EXPECT_NO_THROW(expected_of_max(inst, MaxTransform::Identity, Limits{4, 100}));
}

TEST(ExpectedOfMax, CorpusAgreesWithBruteForce) {
  for (const auto& inst : corpus(11, 150)) {
    EXPECT_EQ(expected_of_max(inst, MaxTransform::Identity), oracle::expected_max_identity(inst));
    EXPECT_EQ(expected_of_max(inst, MaxTransform::ShiftedPositive), oracle::expected_max_shifted(inst));
  }
}

TEST(ExpectedOfMax, DominatesBestMeanAndIsMonotone) {
  const auto all = corpus(12, 200);
  for (std::size_t k = 0; k + 1 < all.size(); ++k) {
    const auto& inst = all[k];
    const Q emax = expected_of_max(inst, MaxTransform::Identity);
    EXPECT_GE(emax, max_expected(inst).second);
    std::vector<Alternative<Q>> more(inst.alternatives().begin(), inst.alternatives().end());
    if (more.size() == kMaxAlternatives) continue;
    more.push_back(all[k + 1][0]);
    EXPECT_GE(expected_of_max(additive<Q>(more), MaxTransform::Identity), emax);
  }
}

TEST(ExpectedOfMax, FloatAgreesWithExact) {
  for (const auto& inst : corpus(13, 200)) {
    const auto f = convert<double>(inst);
    EXPECT_NEAR(expected_of_max(f, MaxTransform::Identity), to_double(expected_of_max(inst, MaxTransform::Identity)),
                1e-9);
    EXPECT_NEAR(expected_of_max(f, MaxTransform::ShiftedPositive),
                to_double(expected_of_max(inst, MaxTransform::ShiftedPositive)), 1e-9);
    for (std::size_t i = 0; i < inst.size(); ++i)
      EXPECT_NEAR(expected_value(f[i].dist), to_double(expected_value(inst[i].dist)), 1e-9);
  }
}

TEST(Enumeration, VisitsEveryPointOnce) {
  const auto inst = corpus(14, 1, 4).front();
  Q total(0);
  std::size_t count = 0;
  for_each_realization(inst, Limits{}, [&](const Realization<Q>& x, const Q& p) {
    x.validate(inst);
    total += p;
    ++count;
  });
  EXPECT_EQ(total, Q(1));
  EXPECT_EQ(count, product_support_size(inst));
}

TEST(Instance, Validation) {
  const auto d = binary(Q(1), q("0.5"));
  EXPECT_EQ(kind_of([] { additive<Q>({}); }), ErrorKind::InvalidInstance);
  EXPECT_EQ(kind_of([&] { additive<Q>({{d, Q(-1)}}); }), ErrorKind::InvalidInstance);
  EXPECT_EQ(kind_of([&] { additive<Q>({{d, Q(0)}}, Q(-1)); }), ErrorKind::InvalidInstance);
  using Set = MonotoneSetCosts<Q>;
  EXPECT_EQ(kind_of([&] { Instance<Q>({{d, 0}, {d, 0}}, Set{{Q(0), Q(1), Q(1)}}, Q(0)); }),
            ErrorKind::InvalidCostModel);
  EXPECT_EQ(kind_of([&] { Instance<Q>({{d, 0}, {d, 0}}, Set{{Q(1), Q(1), Q(1), Q(1)}}, Q(0)); }),
            ErrorKind::InvalidCostModel);
  EXPECT_EQ(kind_of([&] { Instance<Q>({{d, 0}, {d, 0}}, Set{{Q(0), Q(2), Q(1), Q(1)}}, Q(0)); }),
            ErrorKind::InvalidCostModel);
}

TEST(Instance, SetCostsDriveSingletonsAndMarginals) {
  const auto d = binary(Q(1), q("0.5"));
  // c({0}) = 1, c({1}) = 2, c({0,1}) = 2.5
  Instance<Q> inst({{d, Q(9)}, {d, Q(9)}}, MonotoneSetCosts<Q>{{Q(0), Q(1), Q(2), q("2.5")}}, Q(0));
  EXPECT_EQ(inst.singleton_cost(0), Q(1));
  EXPECT_EQ(inst.singleton_cost(1), Q(2));
  EXPECT_EQ(inst.marginal_cost(bit(0), 1), q("1.5"));
  Outcome out{0, inst.all(), false};
  EXPECT_EQ(principal_utility(inst, Realization<Q>{{Q(1), Q(0)}}, out), q("-1.5"));
}

TEST(Realization, Validation) {
  const auto inst = gen<Q>(SpmiFailSpec{2}).instance;
  EXPECT_NO_THROW((Realization<Q>{{Q(0), Q(1)}}.validate(inst)));
  EXPECT_EQ(kind_of([&] { Realization<Q>{{Q(0)}}.validate(inst); }), ErrorKind::InvalidRealization);
  EXPECT_EQ(kind_of([&] { Realization<Q>{{Q(0), Q(2)}}.validate(inst); }), ErrorKind::InvalidRealization);
}

TEST(Io, InstanceRoundTripExactAndFloat) {
  for (const auto& inst : corpus(15, 50)) {
    const json j = instance_to_json(inst);
    EXPECT_EQ(instance_from_json<Q>(j), inst);
    const auto f = instance_from_json<double>(j);
    EXPECT_NEAR(expected_of_max(f, MaxTransform::Identity), to_double(expected_of_max(inst, MaxTransform::Identity)),
                1e-9);
  }
}

TEST(Io, AcceptsNumbersDecimalStringsAndFractions) {
  const json j = json::parse(R"({"alternatives":[{"support":[[0,"0.25"],["2","3/4"]],"cost":0.1}],
                                 "cost_model":{"type":"additive"},"delegation_cost":"1e-1"})");
  const auto inst = instance_from_json<Q>(j);
  EXPECT_EQ(inst[0].inspect_cost, q("1/10"));
  EXPECT_EQ(inst.delegation_cost(), q("1/10"));
  EXPECT_EQ(expected_value(inst[0].dist), q("1.5"));
}

TEST(Io, MonotoneTableRoundTrip) {
  const auto d = binary(Q(1), q("0.5"));
  Instance<Q> inst({{d, Q(0)}, {d, Q(0)}}, MonotoneSetCosts<Q>{{Q(0), Q(1), Q(2), q("2.5")}}, Q(0));
  const json j = instance_to_json(inst);
  EXPECT_EQ(j["cost_model"]["table"]["{0,1}"], "5/2");
  EXPECT_EQ(instance_from_json<Q>(j), inst);
}

TEST(Io, SchemaErrors) {
  EXPECT_EQ(kind_of([] { instance_from_json<Q>(json::parse(R"({"alts":[]})")); }), ErrorKind::SchemaError);
  EXPECT_EQ(kind_of([] { instance_from_json<Q>(json::parse(R"({"alternatives":[{"support":[[1]]}]})")); }),
            ErrorKind::SchemaError);
  EXPECT_EQ(kind_of([] {
              instance_from_json<Q>(json::parse(
                  R"({"alternatives":[{"support":[[1,1]]}],"cost_model":{"type":"monotone","table":{"{}":0}}})"));
            }),
            ErrorKind::SchemaError);
  EXPECT_EQ(kind_of([] { instance_from_json<Q>(json::parse(R"({"alternatives":[{"support":[[1,"x"]]}]})")); }),
            ErrorKind::ParseError);
}
