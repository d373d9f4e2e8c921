#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gmethods/glm.hpp"
#include "gmethods/longdata.hpp"
#include "gmethods/weights.hpp"

namespace gmethods {

enum class CellStatus : std::uint8_t { ok, empty_arm, failed };

std::string_view label(CellStatus s);

// Value of each sustained strategy at horizons 1..horizon. Values may be
// absolute means or effects relative to the null strategy; only differences
// are used. NaN marks a strategy value that the data cannot identify.
struct StrategyValues {
  int horizon = 0;
  std::array<std::vector<double>, 4> value;
};

// Estimates of the six comparisons at horizons 1..horizon, indexed by
// estimand_index(). Cells flagged empty_arm hold NaN.
struct EstimateSet {
  std::string method;
  int horizon = 0;
  std::vector<double> estimate;
  std::vector<CellStatus> status;
  std::vector<double> se;  // empty unless bootstrapped
  StrategyValues strategies;
  std::vector<FitResult> models;
  std::vector<std::string> notes;

  // Throws EmptyArm for a flagged cell.
  double at(EstimandId id) const;
  CellStatus status_of(EstimandId id) const;
  bool all_ok() const;
};

// Differences of strategy values. Throws MissingStrategy when a strategy has
// fewer than `horizon` values; NaN inputs give empty_arm cells.
EstimateSet contrasts(const StrategyValues& values);

// Throws EmptyArm when some treatment combination is never observed.
void require_all_combos(const LongitudinalDataset& ds);

enum class MsmForm { per_time_indicators, duration };
enum class MsmIntercept { common, per_horizon };
// Treatment slots of the per-time form: `lag` gives one coefficient per
// combo and time-since-treatment, `calendar` one per combo and treatment time.
enum class SlotIndex { lag, calendar };

struct MsmSpec {
  MsmForm form = MsmForm::per_time_indicators;
  MsmIntercept intercept = MsmIntercept::common;
  SlotIndex slots = SlotIndex::lag;
  std::vector<BaselineTerm> baseline = {BaselineTerm::y0};
  bool product_of_logistics = false;
  std::optional<std::pair<double, double>> truncation;
  bool stabilized_censoring = true;
  GlmOptions glm;
};

EstimateSet iptw_msm(const LongitudinalDataset& ds, const MsmSpec& msm = {});
EstimateSet censor_and_weight(const LongitudinalDataset& ds, const MsmSpec& msm = {});
// Trials start at each time in `starts` (default 0..T-1).
EstimateSet sequential_trials(const LongitudinalDataset& ds, const MsmSpec& msm = {},
                              std::vector<int> starts = {});

// Shared engine of the three weighted methods.
EstimateSet weighted_msm(const LongitudinalDataset& ds, const MsmSpec& msm, std::span<const int> starts,
                         bool artificial_censoring, std::string method);

struct GformulaOptions {
  int mc_size = 10000;
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;
  // Use every observed baseline exactly once instead of resampling (mc_size is ignored).
  bool reuse_baselines = false;
  GlmOptions glm;
};

// Fitted conditional models. The outcome model regresses Y_{t+1} on
// (1, L_t, lag slots I(z_{t-l}=c), Y_t); the covariate models regress each
// L_t component on (1, L_{t-1}, I(z_{t-1}=c), Y_{t-1}).
struct GformulaModels {
  int horizon = 0;
  int width = 1;
  FitResult outcome;
  std::vector<FitResult> covariate;
};

GformulaModels fit_gformula_models(const LongitudinalDataset& ds, const GlmOptions& glm = {});
StrategyValues simulate_gformula(const GformulaModels& models, const LongitudinalDataset& ds,
                                 const GformulaOptions& options);
EstimateSet gformula(const LongitudinalDataset& ds, const GformulaOptions& options = {});

enum class BlipStructure { lag_specific, constant };

struct SnmmSpec {
  BlipStructure blip = BlipStructure::lag_specific;
  std::vector<BaselineTerm> baseline = {BaselineTerm::y0};
  double tolerance = 1e-8;
  int max_iterations = 200;
  bool stabilized_censoring = true;
  GlmOptions glm;
};

// phi(c, lag) for combos 1..3 and lags 1..horizon (constant blips repeat the
// same value at every lag).
struct BlipEstimates {
  int horizon = 0;
  BlipStructure blip = BlipStructure::lag_specific;
  std::array<std::vector<double>, 4> phi;  // phi[0] is all zero
  int iterations = 0;
};

BlipEstimates fit_blips(const LongitudinalDataset& ds, const SnmmSpec& snmm = {});
EstimateSet gestimation(const LongitudinalDataset& ds, const SnmmSpec& snmm = {});

enum class Method { iptw, censor, seqtrial, gformula, gest, gest_const };

inline constexpr std::array<Method, 6> kMethods = {Method::iptw,     Method::censor, Method::seqtrial,
                                                   Method::gformula, Method::gest,   Method::gest_const};

std::string_view label(Method m);
// Throws UnknownKey naming the valid set.
Method parse_method(std::string_view text);

struct MethodConfig {
  MsmSpec msm;
  SnmmSpec snmm;
  GformulaOptions gformula;
};

EstimateSet run_method(Method method, const LongitudinalDataset& ds, const MethodConfig& config = {});

struct BootstrapResult {
  int replicates = 0;
  int failures = 0;
  std::vector<double> se;  // per estimand; NaN when < 2 successful values
  std::vector<std::string> failure_messages;
};

// Resamples individuals with replacement B times (B >= 50 in normal use).
BootstrapResult bootstrap_se(const LongitudinalDataset& ds,
                             const std::function<EstimateSet(const LongitudinalDataset&)>& method, int replicates,
                             std::uint64_t seed, int threads = 1);

}  // namespace gmethods
