#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "gmethods/error.hpp"
#include "gmethods/oracle.hpp"

using namespace gmethods;

namespace {

double hand_recursion_a_effect(int horizon) {
  // Scenario 1, sustained A vs nothing. Y_{t+1} = 0.05 L_t + A_t + 0.1 Y_t and
  // L_t = 0.2 L_{t-1} + 0.2 A_{t-1} + 0.01 Y_{t-1}; only the differences matter.
  double l = 0.0, y_prev = 0.0, y = 0.0;
  for (int t = 0; t < horizon; ++t) {
    if (t > 0) l = 0.2 * l + 0.2 + 0.01 * y_prev;
    y_prev = y;
    y = 0.05 * l + 1.0 + 0.1 * y;
  }
  return y;
}

}  // namespace

TEST(Analytic, YearTwoEffectOfA) {
  const auto e = analytic_effects(scenario_spec(1));
  EXPECT_NEAR(e.at({Comparison::a_vs_nil, 1}), 1.0, 1e-12);
  EXPECT_NEAR(e.at({Comparison::a_vs_nil, 2}), 1.00 + 0.2 * 0.05 + 1.00 * 0.10, 1e-12);
  for (int h = 1; h <= 5; ++h) EXPECT_NEAR(e.at({Comparison::a_vs_nil, h}), hand_recursion_a_effect(h), 1e-12);
}

TEST(Analytic, MatchesReferenceTables) {
  for (int id = 1; id <= kScenarioCount; ++id) {
    const auto exact = analytic_effects(scenario_spec(id));
    const auto table = published_truth(id);
    for (const auto& e : all_estimands(5)) {
      // Two-decimal tables of Monte Carlo estimates; boundary cells can print one unit away.
      EXPECT_NEAR(exact.at(e), table.at(e), 0.0055) << "scenario " << id << " " << label(e.comparison) << " h"
                                                     << e.horizon;
    }
  }
}

TEST(Reference, TableEntries) {
  EXPECT_DOUBLE_EQ(published_truth(3).at({Comparison::ab_vs_nil, 3}), 1.83);
  EXPECT_DOUBLE_EQ(published_truth(6).at({Comparison::ab_vs_b, 1}), 0.00);
  EXPECT_DOUBLE_EQ(published_truth(8).at({Comparison::a_vs_nil, 4}), 1.51);
  EXPECT_DOUBLE_EQ(published_truth(1).at({Comparison::ab_vs_b, 5}), 1.13);
  EXPECT_FALSE(published_truth(1).has_mc_se());
  EXPECT_THROW(published_truth(10), Error);
}

TEST(Reference, SharedTable) {
  for (int id : {2, 4, 5}) EXPECT_EQ(published_truth(id).theta, published_truth(1).theta);
}

TEST(Reference, AVersusBFollowsEstimandOrientation) {
  // Sustained A (effect 1.0) minus sustained B (0.5) at horizon 1.
  EXPECT_DOUBLE_EQ(published_truth(1).at({Comparison::a_vs_b, 1}), 0.50);
  EXPECT_DOUBLE_EQ(published_truth(6).at({Comparison::a_vs_b, 1}), -0.50);
}

TEST(TrueEffects, ScenarioExamples) {
  const auto s1 = true_effects(scenario_spec(1), 100000, SeedSpec{6122020, 0});
  const double expected[] = {1.00, 1.11, 1.12, 1.13, 1.13};
  for (int h = 1; h <= 5; ++h) {
    const EstimandId id{Comparison::ab_vs_b, h};
    EXPECT_NEAR(s1.at(id), expected[h - 1], std::max(0.01, 3 * s1.se(id)));
    EXPECT_GT(s1.se(id), 0.0);
  }
  const auto s7 = true_effects(scenario_spec(7), 100000, SeedSpec{6122020, 0});
  EXPECT_NEAR(s7.at({Comparison::ab_vs_nil, 1}), 1.75, 0.01);
  const auto s9 = true_effects(scenario_spec(9), 100000, SeedSpec{6122020, 0});
  EXPECT_NEAR(s9.at({Comparison::a_vs_nil, 1}), 1.00, 0.01);
  EXPECT_NEAR(s9.at({Comparison::a_vs_nil, 5}), 0.26, 0.01);
}

TEST(TrueEffects, AgreesWithClosedForm) {
  for (int id : {1, 3, 8}) {
    const auto mc = true_effects(scenario_spec(id), 50000, SeedSpec{11, 0});
    const auto exact = analytic_effects(scenario_spec(id));
    for (const auto& e : all_estimands(5)) EXPECT_NEAR(mc.at(e), exact.at(e), 4 * mc.se(e));
  }
}

TEST(TrueEffects, ArmConsistencyIsExact) {
  const auto t = true_effects(scenario_spec(1), 20000, SeedSpec{5, 0});
  for (int h = 1; h <= 5; ++h) {
    const double ab_0 = t.at({Comparison::ab_vs_nil, h});
    const double ab_b = t.at({Comparison::ab_vs_b, h});
    const double b_0 = t.at({Comparison::b_vs_nil, h});
    const auto& m = t.arm_means;
    const auto k = static_cast<std::size_t>(h - 1);
    EXPECT_EQ(ab_0, m[3][k] - m[0][k]);
    EXPECT_EQ(ab_b, m[3][k] - m[2][k]);
    EXPECT_EQ(b_0, m[2][k] - m[0][k]);
  }
}

TEST(TrueEffects, ThreadCountDoesNotMatter) {
  const auto one = true_effects(scenario_spec(4), 70000, SeedSpec{9, 0}, 1);
  const auto three = true_effects(scenario_spec(4), 70000, SeedSpec{9, 0}, 3);
  EXPECT_EQ(one.theta, three.theta);
  EXPECT_EQ(one.mc_se, three.mc_se);
}

TEST(TrueEffects, RejectsSmallTrials) {
  EXPECT_THROW(true_effects(scenario_spec(1), 500, SeedSpec{1, 0}), Error);
}
