#include "gmethods/weights.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "gmethods/error.hpp"

namespace gmethods {

namespace {

constexpr double kMinDenominator = 1e-12;

int baseline_width(const LongitudinalDataset& ds, const std::vector<BaselineTerm>& terms) {
  int w = 0;
  for (auto term : terms) w += term == BaselineTerm::y0 ? 1 : ds.covariate_width();
  return w;
}

void baseline_names(const LongitudinalDataset& ds, const std::vector<BaselineTerm>& terms,
                    std::vector<std::string>& names) {
  for (auto term : terms) {
    if (term == BaselineTerm::y0) {
      names.emplace_back("y_base");
    } else {
      for (int k = 0; k < ds.covariate_width(); ++k) names.push_back(fmt::format("l{}_base", k + 1));
    }
  }
}

void put_baseline(const LongitudinalDataset& ds, const std::vector<BaselineTerm>& terms, int i, int start,
                  Eigen::MatrixXd& x, Eigen::Index row, Eigen::Index& col) {
  for (auto term : terms) {
    if (term == BaselineTerm::y0) {
      x(row, col++) = ds.y(i, start);
    } else {
      for (int k = 0; k < ds.covariate_width(); ++k) x(row, col++) = ds.l(i, start, k);
    }
  }
}

std::vector<int> nonempty_trials(const TrialRows& rows) {
  std::vector<int> seen(rows.starts.size(), 0);
  for (int k : rows.trial) seen[static_cast<std::size_t>(k)] = 1;
  std::vector<int> out;
  for (std::size_t k = 1; k < seen.size(); ++k) {
    if (seen[k]) out.push_back(static_cast<int>(k));
  }
  return out;
}

enum class ModelRole { denominator, numerator };

// Design for the rows selected by `pick`, either the time-0 model or the pooled
// model, as documented on fit_propensity / fit_numerator.
DesignMatrix propensity_design(const LongitudinalDataset& ds, const TrialRows& rows,
                               const std::vector<std::size_t>& pick, bool initial, ModelRole role,
                               const PropensityOptions& options) {
  const int width = ds.covariate_width();
  std::vector<int> dummies;
  if (!initial && options.trial_indicator) dummies = nonempty_trials(rows);

  DesignMatrix d;
  d.names.emplace_back("(intercept)");
  if (initial) {
    if (role == ModelRole::denominator) {
      d.names.emplace_back("y0");
      for (int k = 0; k < width; ++k) d.names.push_back(fmt::format("l{}_0", k + 1));
    } else {
      baseline_names(ds, options.baseline, d.names);
    }
  } else {
    for (int c = 1; c <= 3; ++c) d.names.push_back(fmt::format("z_prev={}", c));
    baseline_names(ds, options.baseline, d.names);
    if (role == ModelRole::denominator) {
      d.names.emplace_back("y_prev");
      for (int k = 0; k < width; ++k) d.names.push_back(fmt::format("l{}", k + 1));
    }
    for (int k : dummies) d.names.push_back(fmt::format("trial{}", k));
  }

  d.x.resize(static_cast<Eigen::Index>(pick.size()), static_cast<Eigen::Index>(d.names.size()));
  for (std::size_t p = 0; p < pick.size(); ++p) {
    const std::size_t r = pick[p];
    const int i = rows.unit[r];
    const int t = rows.time[r];
    const int start = rows.start_of(r);
    const auto row = static_cast<Eigen::Index>(p);
    Eigen::Index col = 0;
    d.x(row, col++) = 1.0;
    if (initial) {
      if (role == ModelRole::denominator) {
        d.x(row, col++) = ds.y(i, 0);
        for (int k = 0; k < width; ++k) d.x(row, col++) = ds.l(i, 0, k);
      } else {
        put_baseline(ds, options.baseline, i, start, d.x, row, col);
      }
    } else {
      const int prev = index(ds.z(i, t - 1));
      for (int c = 1; c <= 3; ++c) d.x(row, col++) = prev == c ? 1.0 : 0.0;
      put_baseline(ds, options.baseline, i, start, d.x, row, col);
      if (role == ModelRole::denominator) {
        d.x(row, col++) = ds.y(i, t - 1);
        for (int k = 0; k < width; ++k) d.x(row, col++) = ds.l(i, t, k);
      }
      for (int k : dummies) d.x(row, col++) = rows.trial[r] == k ? 1.0 : 0.0;
    }
  }
  return d;
}

// Fills probs for the selected rows from one design.
void fit_block(const LongitudinalDataset& ds, const TrialRows& rows, const std::vector<std::size_t>& pick,
               const DesignMatrix& d, const PropensityOptions& options, PropensityScores& out) {
  if (pick.empty()) return;
  if (!options.product_of_logistics) {
    std::vector<int> y(pick.size());
    for (std::size_t p = 0; p < pick.size(); ++p) y[p] = index(ds.z(rows.unit[pick[p]], rows.time[pick[p]]));
    FitResult fit = fit_multinomial(d, y, 4, options.glm);
    const Eigen::MatrixXd probs = predict_probs(fit, d);
    for (std::size_t p = 0; p < pick.size(); ++p) out.probs.row(static_cast<Eigen::Index>(pick[p])) = probs.row(static_cast<Eigen::Index>(p));
    out.fits.push_back(std::move(fit));
    return;
  }
  // P(A) from d; P(B | A) from d plus the current A.
  const auto n = static_cast<Eigen::Index>(pick.size());
  Eigen::VectorXd ya(n), yb(n);
  for (std::size_t p = 0; p < pick.size(); ++p) {
    ya(static_cast<Eigen::Index>(p)) = ds.a(rows.unit[pick[p]], rows.time[pick[p]]);
    yb(static_cast<Eigen::Index>(p)) = ds.b(rows.unit[pick[p]], rows.time[pick[p]]);
  }
  FitResult fit_a = fit_logistic(d, ya, options.glm);
  DesignMatrix db;
  db.names = d.names;
  db.names.emplace_back("a");
  db.x.resize(n, d.cols() + 1);
  db.x.leftCols(d.cols()) = d.x;
  db.x.col(d.cols()) = ya;
  FitResult fit_b = fit_logistic(db, yb, options.glm);
  const Eigen::MatrixXd pa = predict_probs(fit_a, d);
  db.x.col(d.cols()).setZero();
  const Eigen::MatrixXd pb0 = predict_probs(fit_b, db);
  db.x.col(d.cols()).setOnes();
  const Eigen::MatrixXd pb1 = predict_probs(fit_b, db);
  for (Eigen::Index p = 0; p < n; ++p) {
    const auto r = static_cast<Eigen::Index>(pick[static_cast<std::size_t>(p)]);
    const double a1 = pa(p, 0);
    out.probs(r, 0) = (1 - a1) * (1 - pb0(p, 0));
    out.probs(r, 1) = a1 * (1 - pb1(p, 0));
    out.probs(r, 2) = (1 - a1) * pb0(p, 0);
    out.probs(r, 3) = a1 * pb1(p, 0);
  }
  out.fits.push_back(std::move(fit_a));
  out.fits.push_back(std::move(fit_b));
}

PropensityScores fit_model(const LongitudinalDataset& ds, const TrialRows& rows, ModelRole role,
                           const PropensityOptions& options) {
  if (rows.size() == 0) throw Error(ErrorKind::empty_input, "no person-time rows for the treatment model");
  PropensityScores out;
  out.rows = rows;
  out.probs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), 4);
  std::vector<std::size_t> initial, pooled;
  for (std::size_t r = 0; r < rows.size(); ++r) (rows.time[r] == 0 ? initial : pooled).push_back(r);
  fit_block(ds, rows, initial, propensity_design(ds, rows, initial, true, role, options), options, out);
  fit_block(ds, rows, pooled, propensity_design(ds, rows, pooled, false, role, options), options, out);
  out.observed.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.observed[r] = out.probs(static_cast<Eigen::Index>(r), index(ds.z(rows.unit[r], rows.time[r])));
  }
  return out;
}

std::vector<int> all_starts(const LongitudinalDataset& ds, bool trials) {
  std::vector<int> starts{0};
  if (trials) {
    for (int k = 1; k < ds.horizon(); ++k) starts.push_back(k);
  }
  return starts;
}

// Keeps a linearly independent subset of the columns (in pivot order, then
// restored to original order).
std::vector<Eigen::Index> independent_columns(const DesignMatrix& d) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.x);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < qr.rank(); ++k) keep.push_back(qr.colsPermutation().indices()(k));
  std::sort(keep.begin(), keep.end());
  return keep;
}

DesignMatrix select_columns(const DesignMatrix& d, const std::vector<Eigen::Index>& keep) {
  DesignMatrix out;
  out.x.resize(d.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.x.col(static_cast<Eigen::Index>(k)) = d.x.col(keep[k]);
    out.names.push_back(d.names[static_cast<std::size_t>(keep[k])]);
  }
  out.weights = d.weights;
  return out;
}

}  // namespace

TrialRows trial_rows(const LongitudinalDataset& ds, std::span<const int> starts) {
  TrialRows rows;
  rows.starts.assign(starts.begin(), starts.end());
  for (std::size_t k = 0; k < rows.starts.size(); ++k) {
    const int start = rows.starts[k];
    if (start < 0 || start >= ds.horizon()) {
      throw Error(ErrorKind::index_out_of_range, fmt::format("trial start {} outside 0..{}", start, ds.horizon() - 1));
    }
    for (int i = 0; i < ds.size(); ++i) {
      if (!ds.treatment_observed(i, start)) continue;
      bool naive = true;
      for (int j = 0; j < start && naive; ++j) naive = ds.z(i, j) == Combo::nil;
      if (!naive) continue;
      for (int t = start; ds.treatment_observed(i, t); ++t) {
        rows.unit.push_back(i);
        rows.time.push_back(t);
        rows.trial.push_back(static_cast<int>(k));
      }
    }
  }
  return rows;
}

PropensityScores fit_propensity(const LongitudinalDataset& ds, const TrialRows& rows,
                                const PropensityOptions& options) {
  return fit_model(ds, rows, ModelRole::denominator, options);
}

PropensityScores fit_propensity(const LongitudinalDataset& ds, bool include_trial_indicator) {
  const auto starts = all_starts(ds, include_trial_indicator);
  PropensityOptions options;
  options.trial_indicator = include_trial_indicator;
  return fit_propensity(ds, trial_rows(ds, starts), options);
}

PropensityScores fit_numerator(const LongitudinalDataset& ds, const TrialRows& rows,
                               const PropensityOptions& options) {
  return fit_model(ds, rows, ModelRole::numerator, options);
}

PropensityScores fit_numerator(const LongitudinalDataset& ds) {
  const auto starts = all_starts(ds, false);
  return fit_numerator(ds, trial_rows(ds, starts), PropensityOptions{});
}

std::vector<WeightDiagnostics> weight_diagnostics(const TrialRows& rows, std::span<const double> w) {
  std::map<int, WeightDiagnostics> by_time;
  std::map<int, double> sum_sq;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto& d = by_time[rows.time[r]];
    d.time = rows.time[r];
    d.count += 1;
    d.mean += w[r];
    d.max = d.count == 1 ? w[r] : std::max(d.max, w[r]);
    sum_sq[rows.time[r]] += w[r] * w[r];
  }
  std::vector<WeightDiagnostics> out;
  for (auto& [t, d] : by_time) {
    const double sum = d.mean;
    d.mean = sum / d.count;
    d.ess = sum_sq[t] > 0 ? sum * sum / sum_sq[t] : 0.0;
    out.push_back(d);
  }
  return out;
}

WeightSeries stabilized_weights(const PropensityScores& num, const PropensityScores& den) {
  const TrialRows& rows = den.rows;
  if (num.rows.unit != rows.unit || num.rows.time != rows.time || num.rows.trial != rows.trial) {
    throw Error(ErrorKind::invalid_argument, "numerator and denominator cover different person-times");
  }
  WeightSeries out;
  out.rows = rows;
  out.sw.resize(rows.size());
  double running = 1.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const bool first = r == 0 || rows.unit[r] != rows.unit[r - 1] || rows.trial[r] != rows.trial[r - 1];
    if (first) running = 1.0;
    const double d = den.observed[r];
    if (!(d >= kMinDenominator)) {
      throw Error(ErrorKind::zero_denominator,
                  fmt::format("denominator probability {:.3g} for individual {} at time {}", d, rows.unit[r],
                              rows.time[r]));
    }
    running *= num.observed[r] / d;
    out.sw[r] = running;
  }
  out.cw.assign(rows.size(), 1.0);
  out.combined = out.sw;
  out.diagnostics = weight_diagnostics(out.rows, out.combined);
  return out;
}

CensoringWeights::CensoringWeights(int n, int horizon)
    : horizon_(horizon),
      num_(static_cast<std::size_t>(n) * static_cast<std::size_t>(horizon), 1.0),
      den_(static_cast<std::size_t>(n) * static_cast<std::size_t>(horizon), 1.0) {}

double CensoringWeights::cumulative(int i, int s, int start) const {
  if (s > last_observed[static_cast<std::size_t>(i)]) return 0.0;
  double w = 1.0;
  for (int j = start; j < s; ++j) w *= numerator(i, j) / denominator(i, j);
  return w;
}

double CensoringWeights::forward(int i, int t) const {
  if (last_observed[static_cast<std::size_t>(i)] < horizon_) return 0.0;
  double p = 1.0;
  for (int j = t; j < horizon_; ++j) p *= denominator(i, j);
  return 1.0 / p;
}

CensoringWeights fit_censoring(const LongitudinalDataset& ds, const CensoringOptions& options) {
  const int T = ds.horizon();
  const int width = ds.covariate_width();
  CensoringWeights out(ds.size(), T);
  out.last_observed.resize(static_cast<std::size_t>(ds.size()));
  for (int i = 0; i < ds.size(); ++i) out.last_observed[static_cast<std::size_t>(i)] = ds.last_observed(i);
  if (!ds.has_censoring()) return out;

  // Transitions with at least one censoring event.
  std::vector<int> eventful;
  for (int j = 0; j < T; ++j) {
    int at_risk = 0, remain = 0;
    for (int i = 0; i < ds.size(); ++i) {
      if (ds.last_observed(i) >= j) {
        ++at_risk;
        if (ds.last_observed(i) >= j + 1) ++remain;
      }
    }
    if (at_risk == 0 || remain == 0) {
      throw Error(ErrorKind::all_censored, fmt::format("no uncensored individuals remain at time {}", j + 1));
    }
    if (remain < at_risk) eventful.push_back(j);
  }
  if (eventful.empty()) return out;

  std::vector<std::pair<int, int>> cells;  // (i, j)
  for (int j : eventful) {
    for (int i = 0; i < ds.size(); ++i) {
      if (ds.last_observed(i) >= j) cells.emplace_back(i, j);
    }
  }
  const auto n = static_cast<Eigen::Index>(cells.size());
  Eigen::VectorXd stay(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    stay(r) = ds.last_observed(cells[static_cast<std::size_t>(r)].first) >= cells[static_cast<std::size_t>(r)].second + 1;
  }

  auto design = [&](bool full) {
    DesignMatrix d;
    for (int j : eventful) d.names.push_back(fmt::format("transition{}", j));
    if (full) {
      for (int c = 1; c <= 3; ++c) d.names.push_back(fmt::format("z={}", c));
      for (int k = 0; k < width; ++k) d.names.push_back(fmt::format("l{}", k + 1));
      d.names.emplace_back("y");
    }
    baseline_names(ds, options.baseline, d.names);
    d.x.resize(n, static_cast<Eigen::Index>(d.names.size()));
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto [i, j] = cells[static_cast<std::size_t>(r)];
      Eigen::Index col = 0;
      for (int e : eventful) d.x(r, col++) = e == j ? 1.0 : 0.0;
      if (full) {
        const int z = index(ds.z(i, j));
        for (int c = 1; c <= 3; ++c) d.x(r, col++) = z == c ? 1.0 : 0.0;
        for (int k = 0; k < width; ++k) d.x(r, col++) = ds.l(i, j, k);
        d.x(r, col++) = ds.y(i, j);
      }
      put_baseline(ds, options.baseline, i, 0, d.x, r, col);
    }
    // At a single transition the baseline terms repeat the current ones.
    return select_columns(d, independent_columns(d));
  };

  const DesignMatrix dden = design(true);
  FitResult den_fit = fit_logistic(dden, stay, options.glm);
  const Eigen::MatrixXd pden = predict_probs(den_fit, dden);
  Eigen::MatrixXd pnum = Eigen::MatrixXd::Ones(n, 1);
  if (options.stabilized) {
    const DesignMatrix dnum = design(false);
    FitResult num_fit = fit_logistic(dnum, stay, options.glm);
    pnum = predict_probs(num_fit, dnum);
    out.fits.push_back(std::move(num_fit));
  }
  out.fits.insert(out.fits.begin(), std::move(den_fit));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto [i, j] = cells[static_cast<std::size_t>(r)];
    if (!(pden(r, 0) >= kMinDenominator)) {
      throw Error(ErrorKind::zero_denominator,
                  fmt::format("probability of remaining uncensored {:.3g} for individual {} at time {}", pden(r, 0),
                              i, j + 1));
    }
    out.denominator(i, j) = pden(r, 0);
    out.numerator(i, j) = pnum(r, 0);
  }
  return out;
}

CensoringSeries censoring_weights(const LongitudinalDataset& ds, CensoringMode mode,
                                  const CensoringOptions& options) {
  const CensoringWeights fitted = fit_censoring(ds, options);
  const int T = ds.horizon();
  CensoringSeries out;
  out.mode = mode;
  out.horizon = T;
  out.w = Eigen::MatrixXd::Zero(ds.size(), T + 1);
  TrialRows observed;
  std::vector<double> values;
  for (int i = 0; i < ds.size(); ++i) {
    for (int t = 0; t <= ds.last_observed(i); ++t) {
      const double w = mode == CensoringMode::cumulative ? fitted.cumulative(i, t) : fitted.forward(i, t);
      out.w(i, t) = w;
      observed.unit.push_back(i);
      observed.time.push_back(t);
      observed.trial.push_back(0);
      values.push_back(w);
    }
  }
  observed.starts = {0};
  out.diagnostics = weight_diagnostics(observed, values);
  return out;
}

double nearest_rank(std::vector<double> sample, double pct) {
  if (sample.empty()) throw Error(ErrorKind::empty_input, "percentile of an empty sample");
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  const auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n - 1e-9));
  return sample[rank == 0 ? 0 : std::min(rank, sample.size()) - 1];
}

WeightSeries truncate(const WeightSeries& w, double lo_pct, double hi_pct) {
  if (!(0.0 <= lo_pct && lo_pct < hi_pct && hi_pct <= 100.0)) {
    throw Error(ErrorKind::invalid_argument, fmt::format("truncation percentiles ({}, {})", lo_pct, hi_pct));
  }
  WeightSeries out = w;
  std::map<int, std::vector<double>> by_time;
  for (std::size_t r = 0; r < w.rows.size(); ++r) by_time[w.rows.time[r]].push_back(w.combined[r]);
  std::map<int, std::pair<double, double>> bounds;
  for (auto& [t, sample] : by_time) bounds[t] = {nearest_rank(sample, lo_pct), nearest_rank(sample, hi_pct)};
  for (std::size_t r = 0; r < w.rows.size(); ++r) {
    const auto [lo, hi] = bounds[w.rows.time[r]];
    out.combined[r] = std::clamp(w.combined[r], lo, hi);
  }
  out.diagnostics = weight_diagnostics(out.rows, out.combined);
  return out;
}

}  // namespace gmethods
