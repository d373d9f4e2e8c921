#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <array>
#include <numeric>

#include "gmethods/error.hpp"
#include "gmethods/eval.hpp"
#include "gmethods/rng.hpp"
#include "gmethods/simgen.hpp"
#include "support.hpp"

using namespace gmethods;
using gmethods::testing::scenario_data;

namespace {

// Independent reference for the generator: SplitMix64 seeding of xoshiro256++.
struct ReferenceXoshiro {
  std::uint64_t s[4];
  explicit ReferenceXoshiro(std::uint64_t seed) {
    for (auto& w : s) {
      seed += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = seed;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      w = z ^ (z >> 31);
    }
  }
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t next() {
    const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }
};

double mean_a0(const LongitudinalDataset& ds) {
  double s = 0.0;
  for (int i = 0; i < ds.size(); ++i) s += ds.a(i, 0);
  return s / ds.size();
}

}  // namespace

TEST(Rng, SplitMixKnownValue) {
  std::uint64_t state = 0;
  EXPECT_EQ(splitmix64(state), 0xe220a8397b1dcdafULL);
}

TEST(Rng, MatchesReferenceXoshiro) {
  Rng rng(12345);
  ReferenceXoshiro ref(12345);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(rng.next(), ref.next());
}

TEST(Rng, NormalMoments) {
  Rng rng(StreamKey{StreamPurpose::observational, 1, 2, 3, 4});
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int k = 0; k < n; ++k) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Rng, BelowStaysInRange) {
  Rng rng(7);
  std::array<int, 3> counts{};
  for (int k = 0; k < 30000; ++k) ++counts[rng.below(3)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

TEST(Rng, KeysGiveDistinctStreams) {
  Rng a(StreamKey{StreamPurpose::observational, 1, 1, 0, 0});
  Rng b(StreamKey{StreamPurpose::observational, 1, 1, 1, 0});
  Rng c(StreamKey{StreamPurpose::bootstrap, 1, 1, 0, 0});
  const auto x = a.next();
  EXPECT_NE(x, b.next());
  EXPECT_NE(x, c.next());
}

TEST(Expit, Values) {
  EXPECT_DOUBLE_EQ(expit(0.0), 0.5);
  EXPECT_NEAR(expit(1.8), 1.0 / (1.0 + std::exp(-1.8)), 1e-15);
  EXPECT_NEAR(expit(1.8), 0.858148935, 1e-9);
  for (double x : {-5.0, -0.3, 2.0, 40.0}) EXPECT_NEAR(expit(x), 1.0 - expit(-x), 1e-15);
  EXPECT_GT(expit(-800.0), -1e-300);
  EXPECT_LE(expit(800.0), 1.0);
}

TEST(ScenarioSpec, TableCoefficients) {
  const auto s1 = scenario_spec(1);
  EXPECT_EQ(s1.confounder.l_lag, 0.2);
  EXPECT_EQ(s1.confounder.y_lag, 0.01);
  EXPECT_EQ(s1.outcome.a, 1.0);
  EXPECT_EQ(s1.outcome.b, 0.5);
  EXPECT_EQ(s1.outcome.l, 0.05);
  EXPECT_EQ(s1.outcome.y, 0.1);

  const auto s2 = scenario_spec(2);
  EXPECT_EQ(s2.treat_a.intercept, -2.3);
  EXPECT_EQ(s2.treat_a.l, s1.treat_a.l);
  EXPECT_EQ(s2.treat_b.intercept, s1.treat_b.intercept);

  EXPECT_EQ(scenario_spec(3).outcome.l, 0.30);
  EXPECT_EQ(scenario_spec(4).treat_a.l, 1.0);
  EXPECT_EQ(scenario_spec(5).treat_a.b_lag, -0.2);
  EXPECT_EQ(scenario_spec(5).treat_b.a_lag, -0.2);
  EXPECT_EQ(scenario_spec(6).outcome.a, 0.0);
  EXPECT_EQ(scenario_spec(7).outcome.ab, 0.25);
  EXPECT_EQ(scenario_spec(8).outcome.a_lags, (std::vector<double>{0.2, 0.1, 0.05, 0.001}));
  EXPECT_EQ(scenario_spec(9).outcome.decay, 0.2);
  for (int id = 6; id <= 9; ++id) {
    EXPECT_EQ(scenario_spec(id).treat_a.l, s1.treat_a.l);
    EXPECT_EQ(scenario_spec(id).treat_b.y_lag, s1.treat_b.y_lag);
  }
  EXPECT_THROW(scenario_spec(0), Error);
  EXPECT_THROW(scenario_spec(10), Error);
}

TEST(OutcomeMean, DecayAndLags) {
  OutcomeModel m = scenario_spec(9).outcome;
  const std::vector<std::uint8_t> a = {1, 1, 1, 0, 0, 0};
  const std::vector<std::uint8_t> b = {0, 0, 0, 0, 0, 0};
  // t = 2: A_2 = 1 after two earlier treated years.
  EXPECT_NEAR(outcome_mean(m, 2, 0.0, 0.0, a, b), 1.0 - 0.2 * 2, 1e-15);
  // A first year on A has the full effect whenever it starts.
  const std::vector<std::uint8_t> late = {0, 0, 1, 1, 0, 0};
  EXPECT_NEAR(outcome_mean(m, 2, 0.0, 0.0, late, b), 1.0, 1e-15);
  EXPECT_NEAR(outcome_mean(m, 3, 0.0, 0.0, late, b), 0.8, 1e-15);
  EXPECT_NEAR(outcome_mean(m, 3, 0.0, 0.0, a, b), 0.0, 1e-15);
  OutcomeModel h = scenario_spec(8).outcome;
  EXPECT_NEAR(outcome_mean(h, 2, 1.0, 2.0, a, b), 0.05 + 1.0 + 0.2 + 0.1 + 0.1 * 2.0, 1e-15);
}

TEST(Generate, Deterministic) {
  const auto x = scenario_data(1, 300, 4);
  const auto y = scenario_data(1, 300, 4);
  EXPECT_EQ(x.columns().y, y.columns().y);
  EXPECT_EQ(x.columns().a, y.columns().a);
  // L at the final time is NaN, so compare the bytes.
  const auto& lx = x.columns().l;
  const auto& ly = y.columns().l;
  ASSERT_EQ(lx.size(), ly.size());
  EXPECT_EQ(std::memcmp(lx.data(), ly.data(), lx.size() * sizeof(double)), 0);
}

TEST(Generate, PrefixStableInN) {
  // Streams are per individual, so the first 100 rows do not depend on n.
  const auto small = scenario_data(1, 100, 2);
  const auto large = scenario_data(1, 400, 2);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(small.y(i, 5), large.y(i, 5));
}

TEST(Generate, ReplicationsIndependent) {
  const int n = 10000;
  const auto x = scenario_data(1, n, 0);
  const auto y = scenario_data(1, n, 1);
  double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    const double u = x.l(i, 0), v = y.l(i, 0);
    sx += u, sy += v, sxy += u * v, sxx += u * u, syy += v * v;
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double r = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
  EXPECT_LT(std::abs(r), 3.0 / std::sqrt(n));
}

TEST(Generate, BaselineTreatmentPrevalence) {
  const auto s1 = scenario_data(1, 10000);
  EXPECT_NEAR(mean_a0(s1), 0.5, 0.02);
  // Scenario 2: average of expit(-2.3 + 0.3 L0) over L0 ~ N(0,1), by quadrature.
  double expected = 0.0;
  const double step = 0.001;
  for (double z = -8; z < 8; z += step) {
    expected += expit(-2.3 + scenario_spec(2).treat_a.l * z) * std::exp(-z * z / 2) / std::sqrt(2 * M_PI) * step;
  }
  const auto s2 = scenario_data(2, 10000);
  EXPECT_NEAR(mean_a0(s2), expected, 0.01);
  EXPECT_LT(mean_a0(s2), 0.15);
}

TEST(Generate, ScenarioOneRetention) {
  const auto ds = scenario_data(1, 10000);
  const Retention r = sustained_retention(ds);
  EXPECT_NEAR(r.fraction(Combo::b_only), 0.03, 0.015);
  EXPECT_NEAR(r.fraction(Combo::both), 0.40, 0.03);
}

TEST(Counterfactual, FixedTreatment) {
  const auto s = scenario_spec(1);
  const auto ds = generate_counterfactual(s, Strategy::sustained(Combo::both, 5), 200, SeedSpec{1, 0});
  for (int i = 0; i < ds.size(); ++i) {
    for (int t = 0; t < 5; ++t) EXPECT_EQ(ds.z(i, t), Combo::both);
  }
}

TEST(Counterfactual, HorizonOneEffects) {
  const int n = 100000;
  auto mean_y1 = [&](int scenario, Combo z) {
    const auto ds = generate_counterfactual(scenario_spec(scenario), Strategy::sustained(z, 5), n, SeedSpec{3, 0});
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += ds.y(i, 1);
    return s / n;
  };
  // Common random numbers make these differences exact for the linear outcome.
  EXPECT_NEAR(mean_y1(1, Combo::both) - mean_y1(1, Combo::b_only), 1.0, 0.01);
  EXPECT_NEAR(mean_y1(6, Combo::a_only) - mean_y1(6, Combo::nil), 0.0, 0.01);
  // Under the null strategy E[L_1] = 0.2 E[L_0] + 0.01 E[Y_0] = 0.
  const auto nil = generate_counterfactual(scenario_spec(1), Strategy::sustained(Combo::nil, 5), n, SeedSpec{3, 0});
  double l1 = 0.0;
  for (int i = 0; i < n; ++i) l1 += nil.l(i, 1);
  EXPECT_NEAR(l1 / n, 0.0, 4.0 * 1.04 / std::sqrt(n));
}
