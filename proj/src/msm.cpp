#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "gmethods/error.hpp"
#include "gmethods/estimators.hpp"

namespace gmethods {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Layout {
  int horizon = 0;
  int width = 1;
  bool per_horizon = false;
  bool duration = false;
  int slots = 0;  // per combo
  std::vector<int> trial_dummies;
  std::vector<BaselineTerm> baseline;

  int intercept_cols() const { return 1 + (per_horizon ? horizon - 1 : 0); }
  int slot_col(int c, int s) const { return intercept_cols() + (c - 1) * slots + s; }
  int baseline_col() const { return intercept_cols() + 3 * slots; }
  int baseline_cols() const {
    int w = 0;
    for (auto b : baseline) w += b == BaselineTerm::y0 ? 1 : width;
    return w;
  }
  int trial_col() const { return baseline_col() + baseline_cols(); }
  int cols() const { return trial_col() + static_cast<int>(trial_dummies.size()); }
};

std::vector<std::string> layout_names(const Layout& lay, SlotIndex index) {
  std::vector<std::string> names{"(intercept)"};
  if (lay.per_horizon) {
    for (int h = 2; h <= lay.horizon; ++h) names.push_back(fmt::format("horizon{}", h));
  }
  for (int c = 1; c <= 3; ++c) {
    for (int s = 0; s < lay.slots; ++s) {
      if (lay.duration) {
        names.push_back(fmt::format("duration_z{}", c));
      } else {
        names.push_back(index == SlotIndex::lag ? fmt::format("z{}_lag{}", c, s) : fmt::format("z{}_t{}", c, s));
      }
    }
  }
  for (auto b : lay.baseline) {
    if (b == BaselineTerm::y0) {
      names.emplace_back("y_base");
    } else {
      for (int k = 0; k < lay.width; ++k) names.push_back(fmt::format("l{}_base", k + 1));
    }
  }
  for (int k : lay.trial_dummies) names.push_back(fmt::format("trial{}", k));
  return names;
}

}  // namespace

EstimateSet weighted_msm(const LongitudinalDataset& ds, const MsmSpec& msm, std::span<const int> starts,
                         bool artificial_censoring, std::string method) {
  require_all_combos(ds);
  const int T = ds.horizon();
  const TrialRows rows = trial_rows(ds, starts);
  if (rows.size() == 0) throw Error(ErrorKind::empty_input, "no person-time rows");

  std::vector<std::string> notes;
  std::vector<int> per_trial(rows.starts.size(), 0);
  for (int k : rows.trial) ++per_trial[static_cast<std::size_t>(k)];
  for (std::size_t k = 0; k < per_trial.size(); ++k) {
    if (per_trial[k] == 0) {
      notes.push_back(fmt::format("EmptyTrial: no eligible individuals for the trial at time {}; skipped",
                                  rows.starts[k]));
    }
  }

  PropensityOptions popt;
  popt.baseline = msm.baseline;
  popt.trial_indicator = rows.starts.size() > 1;
  popt.product_of_logistics = msm.product_of_logistics;
  popt.glm = msm.glm;
  const PropensityScores den = fit_propensity(ds, rows, popt);
  const PropensityScores num = fit_numerator(ds, rows, popt);
  WeightSeries weights = stabilized_weights(num, den);
  if (ds.has_censoring()) {
    CensoringOptions copt;
    copt.baseline = msm.baseline;
    copt.stabilized = msm.stabilized_censoring;
    copt.glm = msm.glm;
    const CensoringWeights cens = fit_censoring(ds, copt);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      // Outcome of row (i, t) is Y_{t+1}; zero once it is unobserved.
      weights.cw[r] = cens.cumulative(rows.unit[r], rows.time[r] + 1, rows.start_of(r));
      weights.combined[r] = weights.sw[r] * weights.cw[r];
    }
  }
  if (msm.truncation) weights = truncate(weights, msm.truncation->first, msm.truncation->second);

  Layout lay;
  lay.horizon = T;
  lay.width = ds.covariate_width();
  lay.per_horizon = msm.intercept == MsmIntercept::per_horizon;
  lay.duration = msm.form == MsmForm::duration;
  lay.slots = lay.duration ? 1 : T;
  lay.baseline = msm.baseline;
  if (rows.starts.size() > 1) {
    for (std::size_t k = 1; k < per_trial.size(); ++k) {
      if (per_trial[k] > 0) lay.trial_dummies.push_back(static_cast<int>(k));
    }
  }

  // Rows that enter the MSM: outcome observed and, with artificial
  // censoring, still following the trial-baseline combo.
  std::vector<std::size_t> used;
  bool following = true;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int i = rows.unit[r];
    const int t = rows.time[r];
    const int start = rows.start_of(r);
    if (t == start) following = true;
    if (artificial_censoring && ds.z(i, t) != ds.z(i, start)) following = false;
    if (!following) continue;
    if (!ds.outcome_observed(i, t + 1)) continue;
    if (!(weights.combined[r] > 0.0)) continue;
    used.push_back(r);
  }
  if (used.empty()) throw Error(ErrorKind::empty_arm, "no person-time follows any strategy");

  DesignMatrix d;
  d.names = layout_names(lay, msm.slots);
  d.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(used.size()), lay.cols());
  d.weights.resize(static_cast<Eigen::Index>(used.size()));
  Eigen::VectorXd y(static_cast<Eigen::Index>(used.size()));
  for (std::size_t u = 0; u < used.size(); ++u) {
    const std::size_t r = used[u];
    const auto row = static_cast<Eigen::Index>(u);
    const int i = rows.unit[r];
    const int t = rows.time[r];
    const int start = rows.start_of(r);
    const int tau = t - start;  // trial time
    d.x(row, 0) = 1.0;
    if (lay.per_horizon && tau > 0) d.x(row, tau) = 1.0;
    for (int j = 0; j <= tau; ++j) {
      const int c = index(ds.z(i, start + j));
      if (c == 0) continue;
      int s = 0;
      if (!lay.duration) s = msm.slots == SlotIndex::lag ? tau - j : j;
      d.x(row, lay.slot_col(c, s)) += 1.0;
    }
    Eigen::Index col = lay.baseline_col();
    for (auto b : lay.baseline) {
      if (b == BaselineTerm::y0) {
        d.x(row, col++) = ds.y(i, start);
      } else {
        for (int k = 0; k < lay.width; ++k) d.x(row, col++) = ds.l(i, start, k);
      }
    }
    for (std::size_t k = 0; k < lay.trial_dummies.size(); ++k) {
      d.x(row, lay.trial_col() + static_cast<Eigen::Index>(k)) = rows.trial[r] == lay.trial_dummies[k] ? 1.0 : 0.0;
    }
    d.weights(row) = weights.combined[r];
    y(row) = ds.y(i, t + 1);
  }

  // Treatment slots nobody occupies cannot be estimated; drop them and flag
  // the strategy values that need them.
  std::array<std::vector<bool>, 4> missing;
  for (auto& m : missing) m.assign(static_cast<std::size_t>(lay.slots), false);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < d.cols(); ++k) {
    const bool is_slot = k >= lay.slot_col(1, 0) && k < lay.baseline_col();
    if (is_slot && d.x.col(k).cwiseAbs().dot(d.weights) == 0.0) {
      const int rel = static_cast<int>(k) - lay.slot_col(1, 0);
      missing[static_cast<std::size_t>(1 + rel / lay.slots)][static_cast<std::size_t>(rel % lay.slots)] = true;
      continue;
    }
    keep.push_back(k);
  }
  Eigen::VectorXd beta = Eigen::VectorXd::Constant(d.cols(), kNaN);
  FitResult fit;
  {
    DesignMatrix reduced;
    reduced.x.resize(d.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      reduced.x.col(static_cast<Eigen::Index>(k)) = d.x.col(keep[k]);
      reduced.names.push_back(d.names[static_cast<std::size_t>(keep[k])]);
    }
    reduced.weights = d.weights;
    fit = fit_wls(reduced, y);
    for (std::size_t k = 0; k < keep.size(); ++k) beta(keep[k]) = fit.coefficients(static_cast<Eigen::Index>(k), 0);
  }

  StrategyValues values;
  values.horizon = T;
  values.value[0].assign(static_cast<std::size_t>(T), 0.0);
  for (int c = 1; c <= 3; ++c) {
    auto& v = values.value[static_cast<std::size_t>(c)];
    v.assign(static_cast<std::size_t>(T), kNaN);
    double acc = 0.0;
    for (int h = 1; h <= T; ++h) {
      if (lay.duration) {
        const double coef = beta(lay.slot_col(c, 0));
        v[static_cast<std::size_t>(h - 1)] = h * coef;
        continue;
      }
      acc += beta(lay.slot_col(c, h - 1));
      v[static_cast<std::size_t>(h - 1)] = acc;
    }
  }

  EstimateSet out = contrasts(values);
  bool any = false;
  for (auto s : out.status) any = any || s == CellStatus::ok;
  if (!any) throw Error(ErrorKind::empty_arm, "no comparison is estimable");
  for (int c = 1; c <= 3; ++c) {
    for (int s = 0; s < lay.slots; ++s) {
      if (missing[static_cast<std::size_t>(c)][static_cast<std::size_t>(s)]) {
        notes.push_back(fmt::format("EmptyArm: nobody follows {} at slot {}", label(static_cast<Combo>(c)), s));
      }
    }
  }
  out.method = std::move(method);
  out.models = {den.fits.begin(), den.fits.end()};
  out.models.push_back(std::move(fit));
  out.notes = std::move(notes);
  return out;
}

EstimateSet iptw_msm(const LongitudinalDataset& ds, const MsmSpec& msm) {
  const int start = 0;
  return weighted_msm(ds, msm, std::span<const int>(&start, 1), false, "iptw");
}

EstimateSet censor_and_weight(const LongitudinalDataset& ds, const MsmSpec& msm) {
  const int start = 0;
  return weighted_msm(ds, msm, std::span<const int>(&start, 1), true, "censor");
}

EstimateSet sequential_trials(const LongitudinalDataset& ds, const MsmSpec& msm, std::vector<int> starts) {
  if (starts.empty()) {
    starts.resize(static_cast<std::size_t>(ds.horizon()));
    std::iota(starts.begin(), starts.end(), 0);
  }
  return weighted_msm(ds, msm, starts, true, "seqtrial");
}

}  // namespace gmethods
