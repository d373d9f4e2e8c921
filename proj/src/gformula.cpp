#include <cmath>

#include <fmt/format.h>

#include "gmethods/error.hpp"
#include "gmethods/estimators.hpp"
#include "gmethods/rng.hpp"

namespace gmethods {

namespace {

// Outcome model column layout: 1, L_t (width), I(z_{t-l}=c) for c = 1..3 and
// l = 0..T-1, Y_t.
int slot_col(int width, int horizon, int c, int lag) { return 1 + width + (c - 1) * horizon + lag; }
int y_col(int width, int horizon) { return 1 + width + 3 * horizon; }

std::vector<std::string> outcome_names(int width, int horizon) {
  std::vector<std::string> names{"(intercept)"};
  for (int k = 0; k < width; ++k) names.push_back(fmt::format("l{}", k + 1));
  for (int c = 1; c <= 3; ++c) {
    for (int l = 0; l < horizon; ++l) names.push_back(fmt::format("z{}_lag{}", c, l));
  }
  names.emplace_back("y");
  return names;
}

// Fits OLS after removing all-zero columns; removed columns get coefficient 0.
FitResult fit_dropping_empty(DesignMatrix d, const Eigen::VectorXd& y) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < d.cols(); ++k) {
    if (d.x.col(k).cwiseAbs().maxCoeff() > 0.0) keep.push_back(k);
  }
  DesignMatrix reduced;
  reduced.x.resize(d.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    reduced.x.col(static_cast<Eigen::Index>(k)) = d.x.col(keep[k]);
    reduced.names.push_back(d.names[static_cast<std::size_t>(keep[k])]);
  }
  FitResult fit = fit_wls(reduced, y);
  FitResult full = fit;
  full.names = d.names;
  full.coefficients = Eigen::MatrixXd::Zero(d.cols(), 1);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    full.coefficients(keep[k], 0) = fit.coefficients(static_cast<Eigen::Index>(k), 0);
  }
  return full;
}

}  // namespace

GformulaModels fit_gformula_models(const LongitudinalDataset& ds, const GlmOptions& glm) {
  (void)glm;
  const int T = ds.horizon();
  const int width = ds.covariate_width();
  GformulaModels models;
  models.horizon = T;
  models.width = width;

  {
    std::vector<std::pair<int, int>> cells;
    for (int i = 0; i < ds.size(); ++i) {
      for (int t = 0; t < T && ds.outcome_observed(i, t + 1); ++t) cells.emplace_back(i, t);
    }
    if (cells.empty()) throw Error(ErrorKind::empty_input, "no observed outcomes after baseline");
    DesignMatrix d;
    d.names = outcome_names(width, T);
    d.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(d.names.size()));
    Eigen::VectorXd y(d.rows());
    for (std::size_t r = 0; r < cells.size(); ++r) {
      const auto [i, t] = cells[r];
      const auto row = static_cast<Eigen::Index>(r);
      d.x(row, 0) = 1.0;
      for (int k = 0; k < width; ++k) d.x(row, 1 + k) = ds.l(i, t, k);
      for (int j = 0; j <= t; ++j) {
        const int c = index(ds.z(i, j));
        if (c != 0) d.x(row, slot_col(width, T, c, t - j)) = 1.0;
      }
      d.x(row, y_col(width, T)) = ds.y(i, t);
      y(row) = ds.y(i, t + 1);
    }
    models.outcome = fit_dropping_empty(std::move(d), y);
  }

  std::vector<std::pair<int, int>> cells;
  for (int i = 0; i < ds.size(); ++i) {
    for (int t = 1; t < T && ds.treatment_observed(i, t); ++t) cells.emplace_back(i, t);
  }
  for (int k = 0; k < width && !cells.empty(); ++k) {
    DesignMatrix d;
    d.names.emplace_back("(intercept)");
    for (int m = 0; m < width; ++m) d.names.push_back(fmt::format("l{}_prev", m + 1));
    for (int c = 1; c <= 3; ++c) d.names.push_back(fmt::format("z_prev={}", c));
    d.names.emplace_back("y_prev");
    d.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(d.names.size()));
    Eigen::VectorXd y(d.rows());
    for (std::size_t r = 0; r < cells.size(); ++r) {
      const auto [i, t] = cells[r];
      const auto row = static_cast<Eigen::Index>(r);
      d.x(row, 0) = 1.0;
      for (int m = 0; m < width; ++m) d.x(row, 1 + m) = ds.l(i, t - 1, m);
      const int c = index(ds.z(i, t - 1));
      if (c != 0) d.x(row, width + c) = 1.0;
      d.x(row, width + 4) = ds.y(i, t - 1);
      y(row) = ds.l(i, t, k);
    }
    models.covariate.push_back(fit_dropping_empty(std::move(d), y));
  }
  return models;
}

StrategyValues simulate_gformula(const GformulaModels& models, const LongitudinalDataset& ds,
                                 const GformulaOptions& options) {
  const int T = models.horizon;
  const int width = models.width;
  if (T >= 2 && static_cast<int>(models.covariate.size()) != width) {
    throw Error(ErrorKind::invalid_argument, "covariate models missing");
  }
  const int draws = options.reuse_baselines ? ds.size() : options.mc_size;
  if (draws < 1) throw Error(ErrorKind::invalid_argument, "Monte Carlo size must be >= 1");

  const Eigen::VectorXd beta = models.outcome.coefficients.col(0);
  const double sd_y = models.outcome.residual_sd;
  StrategyValues values;
  values.horizon = T;
  for (auto& v : values.value) v.assign(static_cast<std::size_t>(T), 0.0);

  std::vector<double> l(static_cast<std::size_t>(width)), l_next(static_cast<std::size_t>(width));
  Eigen::VectorXd x(beta.size());
  for (int m = 0; m < draws; ++m) {
    Rng base(StreamKey{StreamPurpose::gformula, options.seed, 0, options.replication, static_cast<std::uint64_t>(m)});
    const int i = options.reuse_baselines ? m : static_cast<int>(base.below(static_cast<std::uint64_t>(ds.size())));
    for (auto z : kCombos) {
      Rng rng = base;  // common random numbers across strategies
      const int c = index(z);
      for (int k = 0; k < width; ++k) l[static_cast<std::size_t>(k)] = ds.l(i, 0, k);
      double y = ds.y(i, 0);
      auto& out = values.value[static_cast<std::size_t>(c)];
      for (int t = 0; t < T; ++t) {
        if (t > 0) {
          for (int k = 0; k < width; ++k) {
            const FitResult& fit = models.covariate[static_cast<std::size_t>(k)];
            double mean = fit.coefficients(0, 0);
            for (int q = 0; q < width; ++q) mean += fit.coefficients(1 + q, 0) * l[static_cast<std::size_t>(q)];
            if (c != 0) mean += fit.coefficients(width + c, 0);
            mean += fit.coefficients(width + 4, 0) * y;
            l_next[static_cast<std::size_t>(k)] = mean + fit.residual_sd * rng.normal();
          }
          l.swap(l_next);
        }
        x.setZero();
        x(0) = 1.0;
        for (int k = 0; k < width; ++k) x(1 + k) = l[static_cast<std::size_t>(k)];
        if (c != 0) {
          for (int lag = 0; lag <= t; ++lag) x(slot_col(width, T, c, lag)) = 1.0;
        }
        x(y_col(width, T)) = y;
        const double mean = x.dot(beta);
        out[static_cast<std::size_t>(t)] += mean;
        y = mean + sd_y * rng.normal();
      }
    }
  }
  for (auto& v : values.value) {
    for (auto& e : v) e /= draws;
  }
  return values;
}

EstimateSet gformula(const LongitudinalDataset& ds, const GformulaOptions& options) {
  if (!options.reuse_baselines && options.mc_size < 1000) {
    throw Error(ErrorKind::invalid_argument, fmt::format("mc_size {} < 1000", options.mc_size));
  }
  GformulaModels models = fit_gformula_models(ds, options.glm);
  EstimateSet out = contrasts(simulate_gformula(models, ds, options));
  out.method = "gformula";
  out.models.push_back(std::move(models.outcome));
  for (auto& f : models.covariate) out.models.push_back(std::move(f));
  return out;
}

}  // namespace gmethods
