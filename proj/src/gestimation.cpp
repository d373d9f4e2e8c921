#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "gmethods/error.hpp"
#include "gmethods/estimators.hpp"

namespace gmethods {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// One row of the blip regression: H for outcome time s and treatment time t.
struct BlipRow {
  int i;
  int t;
  int s;
};

// Regression design shared by both blip structures: leading columns (an
// intercept, or lag dummies for the pooled constant fit), I(z_t=c), earlier
// combos I(z_{t-m}=c) for m = 1..T-1, L_t, Y_t and the propensity of combos 1..3.
struct BlipDesign {
  Eigen::MatrixXd x;
  Eigen::VectorXd w;
  std::vector<std::string> names;
  int current_col = 0;  // column of I(z_t = 1)
};

BlipDesign blip_design(const LongitudinalDataset& ds, const std::vector<BlipRow>& rows,
                       const std::vector<double>& weight, const PropensityScores& ps,
                       const std::vector<std::size_t>& offset, bool lag_dummies) {
  const int T = ds.horizon();
  const int width = ds.covariate_width();
  BlipDesign d;
  if (lag_dummies) {
    for (int l = 1; l <= T; ++l) d.names.push_back(fmt::format("lag{}", l));
  } else {
    d.names.emplace_back("(intercept)");
  }
  d.current_col = static_cast<int>(d.names.size());
  for (int c = 1; c <= 3; ++c) d.names.push_back(fmt::format("z={}", c));
  for (int m = 1; m < T; ++m) {
    for (int c = 1; c <= 3; ++c) d.names.push_back(fmt::format("z{}_lag{}", c, m));
  }
  for (int k = 0; k < width; ++k) d.names.push_back(fmt::format("l{}", k + 1));
  d.names.emplace_back("y");
  for (int c = 1; c <= 3; ++c) d.names.push_back(fmt::format("ps{}", c));

  d.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d.names.size()));
  d.w.resize(static_cast<Eigen::Index>(rows.size()));
  const int hist = d.current_col + 3;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto [i, t, s] = rows[r];
    const auto row = static_cast<Eigen::Index>(r);
    Eigen::Index col = 0;
    if (lag_dummies) {
      d.x(row, s - t - 1) = 1.0;
    } else {
      d.x(row, 0) = 1.0;
    }
    const int c = index(ds.z(i, t));
    if (c != 0) d.x(row, d.current_col + c - 1) = 1.0;
    for (int m = 1; m <= t; ++m) {
      const int cm = index(ds.z(i, t - m));
      if (cm != 0) d.x(row, hist + 3 * (m - 1) + cm - 1) = 1.0;
    }
    col = hist + 3 * (T - 1);
    for (int k = 0; k < width; ++k) d.x(row, col++) = ds.l(i, t, k);
    d.x(row, col++) = ds.y(i, t);
    const auto p = static_cast<Eigen::Index>(offset[static_cast<std::size_t>(i)] + static_cast<std::size_t>(t));
    for (int q = 1; q <= 3; ++q) d.x(row, col++) = ps.probs(p, q);
    d.w(row) = weight[r];
  }
  return d;
}

// Weighted least squares with a factorization reused across responses.
// All-zero columns are removed; their coefficients come back as NaN.
class ReusableWls {
 public:
  explicit ReusableWls(const BlipDesign& d) : sw_(d.w.array().sqrt()), cols_(d.x.cols()) {
    for (Eigen::Index k = 0; k < d.x.cols(); ++k) {
      if (d.x.col(k).cwiseAbs().dot(d.w) > 0.0) keep_.push_back(k);
    }
    Eigen::MatrixXd xs(d.x.rows(), static_cast<Eigen::Index>(keep_.size()));
    for (std::size_t k = 0; k < keep_.size(); ++k) {
      xs.col(static_cast<Eigen::Index>(k)) = d.x.col(keep_[k]).cwiseProduct(sw_);
    }
    qr_.compute(xs);
    if (qr_.rank() < xs.cols()) {
      std::vector<std::string> offending;
      for (Eigen::Index k = qr_.rank(); k < xs.cols(); ++k) {
        offending.push_back(d.names[static_cast<std::size_t>(keep_[static_cast<std::size_t>(qr_.colsPermutation().indices()(k))])]);
      }
      throw Error(ErrorKind::rank_deficient, fmt::format("blip regression: dependent columns {}", fmt::join(offending, ", ")));
    }
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& h) const {
    const Eigen::VectorXd b = qr_.solve(Eigen::VectorXd(h.cwiseProduct(sw_)));
    Eigen::VectorXd full = Eigen::VectorXd::Constant(cols_, kNaN);
    for (std::size_t k = 0; k < keep_.size(); ++k) full(keep_[k]) = b(static_cast<Eigen::Index>(k));
    return full;
  }

 private:
  Eigen::VectorXd sw_;
  Eigen::Index cols_;
  std::vector<Eigen::Index> keep_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

}  // namespace

BlipEstimates fit_blips(const LongitudinalDataset& ds, const SnmmSpec& snmm) {
  require_all_combos(ds);
  const int T = ds.horizon();
  const int zero = 0;
  const TrialRows rows0 = trial_rows(ds, std::span<const int>(&zero, 1));
  PropensityOptions popt;
  popt.glm = snmm.glm;
  const PropensityScores ps = fit_propensity(ds, rows0, popt);
  std::vector<std::size_t> offset(static_cast<std::size_t>(ds.size()), 0);
  for (std::size_t r = rows0.size(); r-- > 0;) {
    if (rows0.time[r] == 0) offset[static_cast<std::size_t>(rows0.unit[r])] = r;
  }

  CensoringWeights cens;
  if (ds.has_censoring()) {
    CensoringOptions copt;
    copt.baseline = snmm.baseline;
    copt.stabilized = snmm.stabilized_censoring;
    copt.glm = snmm.glm;
    cens = fit_censoring(ds, copt);
  }
  auto row_weight = [&](int i, int t) { return ds.has_censoring() ? cens.forward(i, t) : 1.0; };

  auto rows_for = [&](int lag_lo, int lag_hi) {
    std::vector<BlipRow> rows;
    std::vector<double> w;
    for (int lag = lag_lo; lag <= lag_hi; ++lag) {
      for (int i = 0; i < ds.size(); ++i) {
        for (int t = 0; t + lag <= T; ++t) {
          const int s = t + lag;
          if (!ds.outcome_observed(i, s)) break;
          const double wt = row_weight(i, t);
          if (!(wt > 0.0)) continue;
          rows.push_back({i, t, s});
          w.push_back(wt);
        }
      }
    }
    return std::make_pair(rows, w);
  };

  BlipEstimates est;
  est.horizon = T;
  est.blip = snmm.blip;
  for (auto& p : est.phi) p.assign(static_cast<std::size_t>(T), 0.0);
  auto phi = [&](int c, int lag) -> double& {
    return est.phi[static_cast<std::size_t>(c)][static_cast<std::size_t>(lag - 1)];
  };
  // H_{st} = Y_s minus the blips of treatments strictly between t and s.
  auto blip_removed = [&](const BlipRow& r) {
    double h = ds.y(r.i, r.s);
    for (int u = r.t + 1; u < r.s; ++u) {
      const int c = index(ds.z(r.i, u));
      if (c != 0) h -= phi(c, r.s - u);
    }
    return h;
  };

  if (snmm.blip == BlipStructure::lag_specific) {
    for (int lag = 1; lag <= T; ++lag) {
      auto [rows, w] = rows_for(lag, lag);
      // Rows whose blip-removed outcome needs an unidentified blip drop out.
      std::vector<BlipRow> usable;
      std::vector<double> uw;
      Eigen::VectorXd h(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const double v = blip_removed(rows[r]);
        if (!std::isfinite(v)) continue;
        h(static_cast<Eigen::Index>(usable.size())) = v;
        usable.push_back(rows[r]);
        uw.push_back(w[r]);
      }
      for (int c = 1; c <= 3; ++c) phi(c, lag) = kNaN;
      if (usable.empty()) continue;
      h.conservativeResize(static_cast<Eigen::Index>(usable.size()));
      const BlipDesign d = blip_design(ds, usable, uw, ps, offset, false);
      const Eigen::VectorXd beta = ReusableWls(d).solve(h);
      for (int c = 1; c <= 3; ++c) phi(c, lag) = beta(d.current_col + c - 1);
    }
    est.iterations = 1;
    return est;
  }

  // Constant blip: start from the lag-1 fit, then refit over all lags until
  // the blip-removed outcomes stop changing.
  auto [rows, w] = rows_for(1, T);
  const BlipDesign d = blip_design(ds, rows, w, ps, offset, true);
  const ReusableWls wls(d);
  {
    auto [rows1, w1] = rows_for(1, 1);
    Eigen::VectorXd h(static_cast<Eigen::Index>(rows1.size()));
    for (std::size_t r = 0; r < rows1.size(); ++r) h(static_cast<Eigen::Index>(r)) = ds.y(rows1[r].i, rows1[r].s);
    const BlipDesign d1 = blip_design(ds, rows1, w1, ps, offset, false);
    const Eigen::VectorXd beta = ReusableWls(d1).solve(h);
    for (int c = 1; c <= 3; ++c) {
      for (int lag = 1; lag <= T; ++lag) phi(c, lag) = beta(d1.current_col + c - 1);
    }
  }
  Eigen::VectorXd h(static_cast<Eigen::Index>(rows.size()));
  for (int iter = 1; iter <= snmm.max_iterations; ++iter) {
    for (std::size_t r = 0; r < rows.size(); ++r) h(static_cast<Eigen::Index>(r)) = blip_removed(rows[r]);
    const Eigen::VectorXd beta = wls.solve(h);
    double change = 0.0;
    for (int c = 1; c <= 3; ++c) {
      const double next = beta(d.current_col + c - 1);
      if (!std::isfinite(next)) throw Error(ErrorKind::empty_arm, fmt::format("combo {} never observed", c));
      change = std::max(change, std::abs(next - phi(c, 1)));
      for (int lag = 1; lag <= T; ++lag) phi(c, lag) = next;
    }
    est.iterations = iter;
    if (change < snmm.tolerance) return est;
  }
  throw Error(ErrorKind::no_convergence,
              fmt::format("constant blip still moving after {} sweeps", snmm.max_iterations));
}

EstimateSet gestimation(const LongitudinalDataset& ds, const SnmmSpec& snmm) {
  const BlipEstimates est = fit_blips(ds, snmm);
  const int T = est.horizon;
  StrategyValues values;
  values.horizon = T;
  for (int c = 0; c < 4; ++c) {
    auto& v = values.value[static_cast<std::size_t>(c)];
    v.assign(static_cast<std::size_t>(T), 0.0);
    double acc = 0.0;
    for (int h = 1; h <= T; ++h) {
      acc += est.phi[static_cast<std::size_t>(c)][static_cast<std::size_t>(h - 1)];
      v[static_cast<std::size_t>(h - 1)] = acc;
    }
  }
  EstimateSet out = contrasts(values);
  out.method = snmm.blip == BlipStructure::lag_specific ? "gest" : "gest-const";
  for (int c = 1; c <= 3; ++c) {
    for (int lag = 1; lag <= T; ++lag) {
      const double v = est.phi[static_cast<std::size_t>(c)][static_cast<std::size_t>(lag - 1)];
      if (!std::isfinite(v)) {
        out.notes.push_back(fmt::format("EmptyArm: no {} treatment followed by an outcome {} later",
                                        label(static_cast<Combo>(c)), lag));
      }
    }
  }
  return out;
}

}  // namespace gmethods
