#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "spm.hpp"
#include "spm/scenario_io.hpp"

using namespace spm;

namespace {

Scenario seir(double beta, double S0, std::vector<double> I0, bool exponential = true) {
  const double N = 1.0;
  double z = 0.0;
  for (double x : I0) z += x;
  auto phi = exponential ? ScalarIncidence::exponential(beta) : ScalarIncidence::linear(beta);
  return Scenario{"seir", StageParams({0.5, 0.25}, N), IncidenceModel::last_class(2, phi, N),
                  EpidemicState{S0, std::move(I0), N - S0 - z}, StoppingRule::defaults(N)};
}

}  // namespace

TEST(PrevalenceSeries, EmptyEpidemic) {
  auto s = *figure_scenario("fig2-left");
  s.initial = EpidemicState{1.0, {0, 0, 0}, 0.0};
  const auto Z = prevalence_series(s.run());
  ASSERT_FALSE(Z.empty());
  for (double z : Z) EXPECT_EQ(z, 0.0);
}

TEST(PrevalenceSeries, Fig2LeftRisesDespiteSubthresholdR0) {
  const auto s = *figure_scenario("fig2-left");
  EXPECT_LT(r0(s.params, s.incidence), 1.0);
  const auto Z = prevalence_series(s.run());
  bool rise = false;
  for (std::size_t t = 0; t + 1 < Z.size(); ++t) rise = rise || Z[t + 1] > Z[t];
  EXPECT_TRUE(rise);
}

TEST(PrevalenceSeries, Fig3BottomIsNotSinglePeaked) {
  const auto shape = classify_shape(prevalence_series(figure_scenario("fig3-bottom")->run()));
  EXPECT_EQ(shape.classification, PrevalenceShape::Kind::multi_peak);
  EXPECT_FALSE(shape.rise_then_fall());
}

TEST(ClassifyShape, Basics) {
  EXPECT_EQ(classify_shape(std::vector<double>{5, 4, 3, 1}).classification, PrevalenceShape::Kind::monotone_decreasing);
  const auto single = classify_shape(std::vector<double>{1, 2, 3, 3, 2, 1});
  EXPECT_EQ(single.classification, PrevalenceShape::Kind::single_peak);
  EXPECT_EQ(single.peak_times, std::vector<std::size_t>{2});
  EXPECT_TRUE(single.rise_then_fall());
  const auto multi = classify_shape(std::vector<double>{1, 2, 1, 3, 1});
  EXPECT_EQ(multi.classification, PrevalenceShape::Kind::multi_peak);
  EXPECT_EQ(multi.peak_times, (std::vector<std::size_t>{1, 3}));
  const auto dip = classify_shape(std::vector<double>{3, 2, 4, 1});
  EXPECT_EQ(dip.classification, PrevalenceShape::Kind::single_peak);
  EXPECT_FALSE(dip.initial_rise);
  EXPECT_FALSE(dip.rise_then_fall());
  EXPECT_EQ(classify_shape(std::vector<double>{}).classification, PrevalenceShape::Kind::monotone_decreasing);
  EXPECT_EQ(classify_shape(std::vector<double>{2, 2, 2}).classification, PrevalenceShape::Kind::monotone_decreasing);
}

TEST(ClassifyShape, Fig3TopLeftFallsBeforeItsPeak) {
  const auto shape = classify_shape(prevalence_series(figure_scenario("fig3-top-left")->run()));
  EXPECT_FALSE(shape.initial_rise);
  EXPECT_FALSE(shape.peak_times.empty());
}

TEST(ClassifyShape, Fig2RightIsNotMonotone) {
  const auto shape = classify_shape(prevalence_series(figure_scenario("fig2-right")->run()));
  EXPECT_NE(shape.classification, PrevalenceShape::Kind::monotone_decreasing);
}

TEST(InitialRise, Fig2LeftPredictsRise) {
  const auto p = initial_rise_predicate_general(*figure_scenario("fig2-left"));
  ASSERT_TRUE(p.predicted.has_value());
  EXPECT_TRUE(*p.predicted);
  EXPECT_TRUE(p.observed);
  // c = S(0) phi(I(0)) / g_3
  EXPECT_NEAR(p.threshold, 0.99 * 0.001998001332666921 / 0.3, 1e-15);
}

TEST(InitialRise, LargeLastStagePredictsFall) {
  auto s = *figure_scenario("fig2-left");
  s.initial = EpidemicState{0.5, {0.01, 0.0, 0.49}, 0.0};
  const auto p = initial_rise_predicate_general(s);
  ASSERT_TRUE(p.predicted.has_value());
  EXPECT_FALSE(*p.predicted);
  EXPECT_FALSE(p.observed);
}

TEST(InitialRise, DefersWithoutEarlyInfectiousStage) {
  const auto p = initial_rise_predicate_general(seir(0.5, 0.99, {0.0, 0.01}));
  EXPECT_FALSE(p.predicted.has_value());
  EXPECT_FALSE(p.reason.empty());
}

TEST(InitialRise, PredictionMatchesOneStepOverRandomDraws) {
  draw::Generator gen(51);
  std::size_t checked = 0;
  for (int k = 0; k < 300; ++k) {
    const auto s = gen.exponential_scenario(5);
    const auto p = initial_rise_predicate_general(s);
    if (!p.predicted) continue;
    ++checked;
    ASSERT_EQ(*p.predicted, p.observed) << "scenario " << k;
  }
  EXPECT_GT(checked, 100u);
}

TEST(ThresholdDecay, BelowThresholdHoldsFromStart) {
  // R0 = N beta / g_2 = 0.5 / 0.25 = 2, so N / R0 = 0.5
  const auto d = threshold_decay_predicate(seir(0.5, 0.4, {0.0, 0.1}).run());
  ASSERT_TRUE(d.holds_from.has_value());
  EXPECT_EQ(*d.holds_from, 0u);
  EXPECT_EQ(d.violations, 0u);
}

TEST(ThresholdDecay, SubthresholdR0HoldsFromStart) {
  const auto d = threshold_decay_predicate(seir(0.2, 0.99, {0.0, 0.01}).run());
  ASSERT_TRUE(d.holds_from.has_value());
  EXPECT_EQ(*d.holds_from, 0u);
  EXPECT_EQ(d.violations, 0u);
}

TEST(ThresholdDecay, FirstCrossingAboveThreshold) {
  const auto traj = seir(0.5, 0.99, {0.0, 0.01}).run();
  const auto d = threshold_decay_predicate(traj);
  ASSERT_TRUE(d.holds_from.has_value());
  EXPECT_GT(*d.holds_from, 0u);
  EXPECT_LT(traj.S(*d.holds_from), 0.5);
  EXPECT_GE(traj.S(*d.holds_from - 1), 0.5);
  EXPECT_EQ(d.violations, 0u);
}

TEST(ThresholdDecay, RejectsEarlyInfectiousStages) {
  EXPECT_THROW(threshold_decay_predicate(figure_scenario("fig2-left")->run()), std::invalid_argument);
}

TEST(Outbreak, SirAboveThresholdRises) {
  const double N = 1.0;
  Scenario s{"sir", StageParams({0.25}, N), IncidenceModel::exponential({0.5}, N), EpidemicState{0.99, {0.01}, 0.0},
             StoppingRule::defaults(N)};
  const auto o = outbreak_predicate_lastclass(s);
  EXPECT_TRUE(o.applicable);
  EXPECT_TRUE(o.rise);
  ASSERT_TRUE(o.eta_witness.has_value());
  EXPECT_EQ(o.halvings, 0u);
}

TEST(Outbreak, BelowThresholdIsInapplicable) {
  const auto o = outbreak_predicate_lastclass(seir(0.5, 0.4, {0.0, 0.1}));
  EXPECT_FALSE(o.applicable);
}

TEST(Outbreak, TinySeirSeedFindsWitness) {
  // the scenario itself falls at t = 0: I_2(0) is large against S(0) phi
  const auto s = seir(0.5, 0.55, {0.0, 0.45});
  const auto o = outbreak_predicate_lastclass(s);
  ASSERT_TRUE(o.applicable);
  EXPECT_FALSE(o.rise);
  ASSERT_TRUE(o.eta_witness.has_value());
  EXPECT_GT(o.halvings, 0u);
  // the witness really rises when used as the seed
  auto probe = s.initial;
  const double scale = *o.eta_witness / probe.I[1];
  probe.R += probe.I[1] * (1 - scale);
  probe.I[1] = *o.eta_witness;
  EXPECT_GT(step(probe, s.params, s.incidence).prevalence(), probe.prevalence());
}

TEST(Outbreak, RejectsEarlyInfectiousStages) {
  EXPECT_THROW(outbreak_predicate_lastclass(*figure_scenario("fig2-left")), std::invalid_argument);
}

TEST(SaturationCondition, ClosedFormsHoldAnalytically) {
  const auto lin = saturation_condition_check(IncidenceModel::last_class(2, ScalarIncidence::linear(0.5), 1.0));
  EXPECT_TRUE(lin.holds);
  EXPECT_TRUE(lin.analytic);
  const auto ex = saturation_condition_check(IncidenceModel::last_class(2, ScalarIncidence::exponential(3.0), 1.0));
  EXPECT_TRUE(ex.holds);
  EXPECT_TRUE(ex.analytic);
}

TEST(SaturationCondition, GridScanAgreesWithAnalyticVerdicts) {
  const double beta = 3.0;
  const auto ex = IncidenceModel::last_class(
      1, ScalarIncidence::custom([beta](double x) { return -std::expm1(-beta * x); }), 1.0);
  EXPECT_TRUE(saturation_condition_check(ex).holds);
  const auto exact = IncidenceModel::last_class(
      1, ScalarIncidence::custom([beta](double x) { return beta * x / (1 + beta * x); },
                                 [beta](double x) { return beta / ((1 + beta * x) * (1 + beta * x)); }),
      1.0);
  EXPECT_TRUE(saturation_condition_check(exact).holds);
}

TEST(SaturationCondition, SlowerSaturationFails) {
  const double r = 2.0;
  const auto inc = IncidenceModel::last_class(
      1, ScalarIncidence::custom([r](double x) { return r * x / (1 + 2 * r * x); }), 1.0);
  const auto c = saturation_condition_check(inc);
  EXPECT_FALSE(c.holds);
  EXPECT_FALSE(c.analytic);
  ASSERT_TRUE(c.counterexample.has_value());
  EXPECT_GT(*c.counterexample, 0.0);
}

TEST(SaturationCondition, RequiresLastClassIncidence) {
  EXPECT_THROW(saturation_condition_check(IncidenceModel::exponential({0.1}, 1.0)), std::invalid_argument);
}

TEST(PrevalenceBalance, HoldsOnFigures) {
  for (const auto& s : figure_scenarios()) EXPECT_LE(prevalence_balance_residual(s.run()), 1e-12) << s.label;
}

TEST(DecreasePersistence, Basics) {
  const auto p = decrease_persistence(std::vector<double>{1, 2, 1, 1, 0.5});
  ASSERT_TRUE(p.first_decrease.has_value());
  EXPECT_EQ(*p.first_decrease, 1u);
  EXPECT_EQ(p.violations, 0u);
  EXPECT_EQ(decrease_persistence(std::vector<double>{1, 0.5, 2}).violations, 1u);
}

// Properties over random last-class scenarios.

TEST(PrevalenceProperties, LastClassDecay) {
  draw::Generator gen(52);
  for (int k = 0; k < 200; ++k) {
    const auto s = gen.last_class_scenario(5);
    const auto traj = s.run();
    ASSERT_LE(prevalence_balance_residual(traj), 1e-12 * s.params.population());
    const auto d = threshold_decay_predicate(traj);
    ASSERT_EQ(d.violations, 0u) << "scenario " << k << " at t=" << *d.first_violation;
    ASSERT_TRUE(saturation_condition_check(s.incidence).holds);
    ASSERT_EQ(decrease_persistence(traj).violations, 0u) << "scenario " << k;
  }
}

TEST(PrevalenceProperties, BalanceForEveryFamily) {
  draw::Generator gen(53);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = gen.integer(1, 6);
    const double N = gen.population();
    Scenario s{"random", StageParams(gen.gamma(n), N), gen.incidence(n, N), gen.initial(n, N),
               StoppingRule::defaults(N)};
    ASSERT_LE(prevalence_balance_residual(s.run()), 1e-12 * N);
  }
}
