#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gmethods/longdata.hpp"
#include "gmethods/simgen.hpp"

namespace gmethods {

// True effects of the six comparisons at horizons 1..horizon for one scenario.
// Vectors are indexed by estimand_index().
struct TrueEffects {
  int scenario = 0;
  int horizon = 5;
  long long rct_n = 0;  // 0 for tabulated or closed-form values
  std::vector<double> theta;
  std::vector<double> mc_se;  // empty unless Monte Carlo
  // Mean outcome per sustained strategy (combo index) at horizons 1..horizon.
  std::array<std::vector<double>, 4> arm_means;

  double at(EstimandId id) const;
  double se(EstimandId id) const;
  bool has_mc_se() const { return !mc_se.empty(); }
};

// Large simulated trial under each of the four sustained strategies, with
// common random numbers across arms. rct_n >= 10,000.
TrueEffects true_effects(const ScenarioSpec& spec, long long rct_n, SeedSpec seed, int threads = 1);

// Tabulated two-decimal values; scenarios 1, 2, 4 and 5 share one table.
TrueEffects published_truth(int scenario);

// Exact effects from propagating means through the generative equations with
// treatment fixed. Valid for every built-in scenario because the outcome and
// confounder means are linear in the random quantities.
TrueEffects analytic_effects(const ScenarioSpec& spec);

}  // namespace gmethods
