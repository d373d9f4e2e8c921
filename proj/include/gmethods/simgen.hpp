#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gmethods/longdata.hpp"
#include "gmethods/rng.hpp"

namespace gmethods {

// logit^-1; numerically safe for large |x|.
double expit(double x);

// P(treatment_t = 1) = expit(intercept + l*L_t + a_lag*A_{t-1} + b_lag*B_{t-1} + y_lag*Y_{t-1}).
// At t = 0 only intercept and l enter.
struct TreatmentModel {
  double intercept = 0.0;
  double l = 0.0;
  double a_lag = 0.0;
  double b_lag = 0.0;
  double y_lag = 0.0;
};

// L_t ~ N(l_lag*L_{t-1} + a_lag*A_{t-1} + b_lag*B_{t-1} + y_lag*Y_{t-1}, 1)
struct ConfounderModel {
  double l_lag = 0.2;
  double a_lag = 0.2;
  double b_lag = 0.2;
  double y_lag = 0.01;
};

// L_0 ~ N(0, 1), Y_0 ~ N(y_on_l * L_0, 1)
struct BaselineModel {
  double y_on_l = 0.05;
};

enum class OutcomeVariant { linear, no_a, interaction, history, decay };

// Y_{t+1} ~ N(intercept + l*L_t + (a - decay*sum_{j<t} A_j)*A_t + b*B_t
//             + ab*A_t*B_t + sum_k a_lags[k-1]*A_{t-k} + y*Y_t, 1).
// Every variant is a special case; the variant tag is descriptive.
struct OutcomeModel {
  OutcomeVariant variant = OutcomeVariant::linear;
  double intercept = 0.0;
  double l = 0.05;
  double a = 1.0;
  double b = 0.5;
  double ab = 0.0;
  double y = 0.1;
  std::vector<double> a_lags;
  double decay = 0.0;
};

struct ScenarioSpec {
  int id = 1;
  std::string description;
  int horizon = 5;  // treatment times 0..horizon-1, outcomes Y_1..Y_horizon
  BaselineModel baseline;
  TreatmentModel treat_a;
  TreatmentModel treat_b;
  ConfounderModel confounder;
  OutcomeModel outcome;
};

inline constexpr int kScenarioCount = 9;

// Throws UnknownScenario outside 1..9.
ScenarioSpec scenario_spec(int id);

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t replication = 0;
};

// Fixed treatment sequence a_t, b_t for t = 0..horizon-1.
struct Strategy {
  std::vector<std::uint8_t> a;
  std::vector<std::uint8_t> b;

  static Strategy sustained(Combo z, int horizon);
};

// One simulated individual. Arrays have horizon+1 slots; treatment slot
// `horizon` is unused and left at 0.
struct IndividualPath {
  std::vector<double> l;
  std::vector<double> y;
  std::vector<std::uint8_t> a;
  std::vector<std::uint8_t> b;
};

// Core kernel shared by the observational generator and the counterfactual
// oracle. Treatment uniforms are drawn even when the strategy fixes the
// treatment, so runs under different strategies from the same stream stay on
// common random numbers.
void simulate_individual(const ScenarioSpec& spec, Rng& rng, const Strategy* fixed, IndividualPath& out);

double outcome_mean(const OutcomeModel& m, int t, double l_t, double y_t, std::span<const std::uint8_t> a,
                    std::span<const std::uint8_t> b);

LongitudinalDataset generate(const ScenarioSpec& spec, int n, SeedSpec seed);
LongitudinalDataset generate_counterfactual(const ScenarioSpec& spec, const Strategy& strategy, int n,
                                            SeedSpec seed);

// Stream key of individual i in an observational replication.
StreamKey observational_key(const ScenarioSpec& spec, SeedSpec seed, int individual);
StreamKey truth_key(const ScenarioSpec& spec, SeedSpec seed, int individual);

}  // namespace gmethods
