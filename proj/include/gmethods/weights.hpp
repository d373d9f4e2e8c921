#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gmethods/glm.hpp"
#include "gmethods/longdata.hpp"

namespace gmethods {

// Time-fixed covariates measured at the analysis baseline (the trial start
// time when trials are used).
enum class BaselineTerm { y0, l0 };

// Person-time rows of one or more trials. Trial k starts at time starts[k];
// its eligible individuals have z_j = 0 for all j < starts[k] and an observed
// treatment at starts[k]. Rows are grouped by (trial, individual) with
// increasing time, and cover every time with an observed treatment.
struct TrialRows {
  std::vector<int> starts;
  std::vector<int> unit;
  std::vector<int> time;
  std::vector<int> trial;

  std::size_t size() const { return unit.size(); }
  int start_of(std::size_t r) const { return starts[static_cast<std::size_t>(trial[r])]; }
};

TrialRows trial_rows(const LongitudinalDataset& ds, std::span<const int> starts);

struct PropensityOptions {
  std::vector<BaselineTerm> baseline = {BaselineTerm::y0};
  bool trial_indicator = false;
  // P(Z) = P(A) * P(B | A) from two logistic models instead of one multinomial.
  bool product_of_logistics = false;
  GlmOptions glm;
};

struct PropensityScores {
  TrialRows rows;
  Eigen::MatrixXd probs;         // rows x 4, combo order 0..3
  std::vector<double> observed;  // probability of the observed combo
  std::vector<FitResult> fits;   // time-0 model(s) first, then the pooled model(s)
};

// Denominator model: multinomial for Z_t on (1, Y_0, L_0) at t = 0 and on
// (1, I(z_{t-1}=c), baseline terms, Y_{t-1}, L_t[, trial dummies]) pooled over t >= 1.
PropensityScores fit_propensity(const LongitudinalDataset& ds, const TrialRows& rows,
                                const PropensityOptions& options = {});
PropensityScores fit_propensity(const LongitudinalDataset& ds, bool include_trial_indicator);

// Numerator model: baseline terms at t = 0, then (1, I(z_{t-1}=c), baseline
// terms[, trial dummies]) pooled over t >= 1.
PropensityScores fit_numerator(const LongitudinalDataset& ds, const TrialRows& rows,
                               const PropensityOptions& options = {});
PropensityScores fit_numerator(const LongitudinalDataset& ds);

struct WeightDiagnostics {
  int time = 0;
  int count = 0;
  double mean = 0.0;
  double max = 0.0;
  double ess = 0.0;  // (sum w)^2 / sum w^2
};

// Per-row weights aligned with `rows`.
struct WeightSeries {
  TrialRows rows;
  std::vector<double> sw;
  std::vector<double> cw;
  std::vector<double> combined;
  std::vector<WeightDiagnostics> diagnostics;  // by calendar time of the row
};

std::vector<WeightDiagnostics> weight_diagnostics(const TrialRows& rows, std::span<const double> w);

// SW at a row = product over the trial's earlier rows and this one of num/den.
// Throws ZeroDenominator when a denominator probability is below 1e-12.
WeightSeries stabilized_weights(const PropensityScores& num, const PropensityScores& den);

enum class CensoringMode { cumulative, forward };

struct CensoringOptions {
  std::vector<BaselineTerm> baseline = {BaselineTerm::y0};
  bool stabilized = true;
  GlmOptions glm;
};

// Inverse probability of remaining uncensored. Transition j covers time j to
// j+1 among those uncensored at j; the denominator model uses
// (transition dummies, I(z_j=c), L_j, Y_j, baseline terms), the numerator
// (transition dummies, baseline terms) or 1 when unstabilized. Transitions
// without any censoring get probability 1 and do not enter the fits.
class CensoringWeights {
 public:
  CensoringWeights() = default;
  CensoringWeights(int n, int horizon);

  int horizon() const { return horizon_; }

  // Product over transitions start..s-1 of num/den, for an outcome observed at s.
  double cumulative(int i, int s, int start = 0) const;
  // I(C_T = 0) / product over transitions t..T-1 of den.
  double forward(int i, int t) const;

  double& numerator(int i, int j) { return num_[slot(i, j)]; }
  double& denominator(int i, int j) { return den_[slot(i, j)]; }
  double numerator(int i, int j) const { return num_[slot(i, j)]; }
  double denominator(int i, int j) const { return den_[slot(i, j)]; }

  std::vector<int> last_observed;
  std::vector<FitResult> fits;

 private:
  std::size_t slot(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(horizon_) + static_cast<std::size_t>(j);
  }
  int horizon_ = 0;
  std::vector<double> num_;
  std::vector<double> den_;
};

CensoringWeights fit_censoring(const LongitudinalDataset& ds, const CensoringOptions& options = {});

// Weights per (individual, time) in the given mode, with diagnostics. Rows
// cover every individual at times 0..T; entries after censoring are 0.
struct CensoringSeries {
  CensoringMode mode = CensoringMode::cumulative;
  int horizon = 0;
  Eigen::MatrixXd w;  // n x (T+1)
  std::vector<WeightDiagnostics> diagnostics;
};

CensoringSeries censoring_weights(const LongitudinalDataset& ds, CensoringMode mode,
                                  const CensoringOptions& options = {});

// Nearest-rank percentile of a sample: sorted[ceil(p/100 * N) - 1], with p = 0
// giving the minimum.
double nearest_rank(std::vector<double> sample, double pct);

// Clamps the combined weights to per-time [lo, hi] percentiles.
WeightSeries truncate(const WeightSeries& w, double lo_pct, double hi_pct);

}  // namespace gmethods
