#include "gmethods/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "gmethods/error.hpp"

namespace gmethods {

namespace {

void check_design(const DesignMatrix& x, Eigen::Index n_y) {
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorKind::empty_input, "design matrix is empty");
  if (x.rows() != n_y) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("design has {} rows but response has {}", x.rows(), n_y));
  }
  if (!x.names.empty() && static_cast<Eigen::Index>(x.names.size()) != x.cols()) {
    throw Error(ErrorKind::invalid_argument, "column names do not match column count");
  }
  if (!x.x.allFinite()) throw Error(ErrorKind::invalid_argument, "design matrix has non-finite entries");
  if (x.weighted()) {
    if (x.weights.size() != x.rows()) throw Error(ErrorKind::invalid_argument, "weight vector length mismatch");
    if (!x.weights.allFinite() || (x.weights.array() < 0.0).any()) {
      throw Error(ErrorKind::invalid_argument, "weights must be finite and nonnegative");
    }
  }
}

Eigen::VectorXd row_weights(const DesignMatrix& x) {
  return x.weighted() ? x.weights : Eigen::VectorXd::Ones(x.rows());
}

std::vector<std::string> column_names(const DesignMatrix& x) {
  if (!x.names.empty()) return x.names;
  std::vector<std::string> names;
  for (Eigen::Index k = 0; k < x.cols(); ++k) names.push_back(fmt::format("x{}", k));
  return names;
}

// Rank check on the sqrt(w)-scaled design. Throws RankDeficient naming the
// columns the pivoted QR could not place in the column space.
void require_full_rank(const Eigen::MatrixXd& scaled, const std::vector<std::string>& names) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  if (qr.rank() == scaled.cols()) return;
  std::vector<std::string> offending;
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index k = qr.rank(); k < scaled.cols(); ++k) {
    offending.push_back(names[static_cast<std::size_t>(perm(k))]);
  }
  throw Error(ErrorKind::rank_deficient,
              fmt::format("design rank {} < {} columns; dependent: {}", qr.rank(), scaled.cols(),
                          fmt::join(offending, ", ")));
}

// Column scales used by the separation check (sd for varying columns, |value|
// for constant ones).
Eigen::VectorXd column_scales(const Eigen::MatrixXd& x) {
  Eigen::VectorXd s(x.cols());
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double mean = x.col(k).mean();
    const double var = (x.col(k).array() - mean).square().mean();
    s(k) = var > 0 ? std::sqrt(var) : std::abs(mean);
  }
  return s;
}

bool separated(const Eigen::MatrixXd& coefficients, const Eigen::VectorXd& scales, double bound) {
  for (Eigen::Index j = 0; j < coefficients.cols(); ++j) {
    for (Eigen::Index k = 0; k < coefficients.rows(); ++k) {
      if (std::abs(coefficients(k, j) * scales(k)) > bound || !std::isfinite(coefficients(k, j))) return true;
    }
  }
  return false;
}

double log1pexp(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double expit(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double logistic_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (w(i) == 0.0) continue;
    ll += w(i) * (y(i) * eta(i) - log1pexp(eta(i)));
  }
  return ll;
}

// Log-likelihood of a multinomial with linear predictors eta (n x (K-1)).
double multinomial_loglik(const Eigen::MatrixXd& eta, std::span<const int> y, const Eigen::VectorXd& w) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.rows(); ++i) {
    if (w(i) == 0.0) continue;
    double mx = 0.0;
    for (Eigen::Index k = 0; k < eta.cols(); ++k) mx = std::max(mx, eta(i, k));
    double denom = std::exp(-mx);
    for (Eigen::Index k = 0; k < eta.cols(); ++k) denom += std::exp(eta(i, k) - mx);
    const int yi = y[static_cast<std::size_t>(i)];
    const double num = yi == 0 ? 0.0 : eta(i, yi - 1);
    ll += w(i) * (num - mx - std::log(denom));
  }
  return ll;
}

}  // namespace

double FitResult::coefficient(std::string_view name, int category) const {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) {
      const Eigen::Index col = kind == FitKind::multinomial ? category - 1 : 0;
      if (col < 0 || col >= coefficients.cols()) {
        throw Error(ErrorKind::index_out_of_range, fmt::format("category {} outside fit", category));
      }
      return coefficients(static_cast<Eigen::Index>(k), col);
    }
  }
  throw Error(ErrorKind::column_mismatch, fmt::format("no coefficient named '{}'", name));
}

FitResult fit_wls(const DesignMatrix& x, const Eigen::VectorXd& y) {
  check_design(x, y.size());
  if (!y.allFinite()) throw Error(ErrorKind::invalid_argument, "response has non-finite entries");
  const Eigen::VectorXd w = row_weights(x);
  const Eigen::Index positive = (w.array() > 0.0).count();
  if (positive < x.cols()) {
    throw Error(ErrorKind::rank_deficient,
                fmt::format("{} weighted rows cannot identify {} coefficients", positive, x.cols()));
  }
  const Eigen::VectorXd sw = w.array().sqrt();
  const Eigen::MatrixXd xs = x.x.array().colwise() * sw.array();
  const Eigen::VectorXd ys = y.array() * sw.array();

  FitResult fit;
  fit.kind = FitKind::linear;
  fit.names = column_names(x);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
  if (qr.rank() < x.cols()) require_full_rank(xs, fit.names);
  fit.coefficients = qr.solve(ys);
  const Eigen::VectorXd resid = y - x.x * fit.coefficients.col(0);
  fit.rss = (w.array() * resid.array().square()).sum();
  const double wsum = w.sum();
  const double df = static_cast<double>(positive - x.cols());
  if (df > 0 && wsum > 0) {
    fit.residual_sd = std::sqrt(fit.rss / wsum * static_cast<double>(positive) / df);
  }
  fit.converged = true;
  fit.iterations = 1;
  return fit;
}

FitResult fit_logistic(const DesignMatrix& x, const Eigen::VectorXd& y, const GlmOptions& options) {
  check_design(x, y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw Error(ErrorKind::invalid_argument, "logistic response must be 0/1");
  }
  const Eigen::VectorXd w = row_weights(x);
  FitResult fit;
  fit.kind = FitKind::logistic;
  fit.categories = 2;
  fit.names = column_names(x);
  {
    const Eigen::MatrixXd xs = x.x.array().colwise() * w.array().sqrt();
    require_full_rank(xs, fit.names);
  }
  const Eigen::VectorXd scales = column_scales(x.x);
  const Eigen::Index p = x.cols();

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(x.rows());
  double ll = logistic_loglik(eta, y, w);
  fit.log_likelihood_trace.push_back(ll);

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    // Newton step as a weighted least-squares problem on the working response.
    Eigen::VectorXd sw(x.rows());
    Eigen::VectorXd z(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double mu = expit(eta(i));
      const double v = std::max(mu * (1.0 - mu), 1e-300);
      sw(i) = std::sqrt(w(i) * v);
      z(i) = (y(i) - mu) / v;
    }
    const Eigen::MatrixXd xs = x.x.array().colwise() * sw.array();
    const Eigen::VectorXd zs = z.array() * sw.array();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(xs);
    Eigen::VectorXd step = qr.solve(zs);
    if (!step.allFinite()) {
      throw Error(ErrorKind::separation, "fitted probabilities saturated at 0 or 1");
    }

    Eigen::VectorXd next = beta + step;
    Eigen::VectorXd next_eta = x.x * next;
    double next_ll = logistic_loglik(next_eta, y, w);
    int halvings = 0;
    while (next_ll < ll - 1e-10 * (1.0 + std::abs(ll)) && halvings < 40) {
      step *= 0.5;
      next = beta + step;
      next_eta = x.x * next;
      next_ll = logistic_loglik(next_eta, y, w);
      ++halvings;
    }
    beta = next;
    eta = next_eta;
    ll = next_ll;
    fit.log_likelihood_trace.push_back(ll);
    fit.iterations = iter;
    if (separated(beta, scales, options.separation_bound)) {
      throw Error(ErrorKind::separation,
                  fmt::format("coefficient magnitude exceeded {} on a standardized column after {} iterations",
                              options.separation_bound, iter));
    }
    if (step.cwiseAbs().maxCoeff() < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) {
    throw Error(ErrorKind::no_convergence, fmt::format("logistic fit after {} iterations", fit.iterations));
  }
  fit.coefficients = beta;
  fit.log_likelihood = ll;
  return fit;
}

FitResult fit_multinomial(const DesignMatrix& x, std::span<const int> y, int categories,
                          const GlmOptions& options) {
  check_design(x, static_cast<Eigen::Index>(y.size()));
  if (categories < 2) throw Error(ErrorKind::invalid_argument, "multinomial needs >= 2 categories");
  const Eigen::VectorXd w = row_weights(x);
  std::vector<double> counts(static_cast<std::size_t>(categories), 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= categories) {
      throw Error(ErrorKind::invalid_argument, fmt::format("category {} outside 0..{}", y[i], categories - 1));
    }
    counts[static_cast<std::size_t>(y[i])] += w(static_cast<Eigen::Index>(i));
  }
  for (int k = 0; k < categories; ++k) {
    if (counts[static_cast<std::size_t>(k)] <= 0.0) {
      throw Error(ErrorKind::separation, fmt::format("category {} never observed", k));
    }
  }

  FitResult fit;
  fit.kind = FitKind::multinomial;
  fit.categories = categories;
  fit.names = column_names(x);
  {
    const Eigen::MatrixXd xs = x.x.array().colwise() * w.array().sqrt();
    require_full_rank(xs, fit.names);
  }
  const Eigen::VectorXd scales = column_scales(x.x);
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const Eigen::Index m = categories - 1;

  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(p, m);
  Eigen::MatrixXd eta = x.x * beta;
  double ll = multinomial_loglik(eta, y, w);
  fit.log_likelihood_trace.push_back(ll);

  Eigen::MatrixXd hessian(p * m, p * m);
  Eigen::VectorXd score(p * m);
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const Eigen::MatrixXd prob = softmax_probs(x.x, beta);
    // Score and negative Hessian, blockwise over non-reference categories.
    for (Eigen::Index j = 0; j < m; ++j) {
      Eigen::VectorXd r(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double yij = y[static_cast<std::size_t>(i)] == j + 1 ? 1.0 : 0.0;
        r(i) = w(i) * (yij - prob(i, j + 1));
      }
      score.segment(j * p, p) = x.x.transpose() * r;
      for (Eigen::Index k = j; k < m; ++k) {
        Eigen::VectorXd d(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          d(i) = w(i) * prob(i, j + 1) * ((j == k ? 1.0 : 0.0) - prob(i, k + 1));
        }
        const Eigen::MatrixXd block = x.x.transpose() * (x.x.array().colwise() * d.array()).matrix();
        hessian.block(j * p, k * p, p, p) = block;
        if (k != j) hessian.block(k * p, j * p, p, p) = block.transpose();
      }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(hessian);
    Eigen::VectorXd step = qr.solve(score);
    if (!step.allFinite() || qr.rank() < hessian.cols()) {
      throw Error(ErrorKind::separation, "information matrix became singular (saturated probabilities)");
    }

    Eigen::MatrixXd step_mat = Eigen::Map<Eigen::MatrixXd>(step.data(), p, m);
    Eigen::MatrixXd next = beta + step_mat;
    Eigen::MatrixXd next_eta = x.x * next;
    double next_ll = multinomial_loglik(next_eta, y, w);
    int halvings = 0;
    while (next_ll < ll - 1e-10 * (1.0 + std::abs(ll)) && halvings < 40) {
      step_mat *= 0.5;
      next = beta + step_mat;
      next_eta = x.x * next;
      next_ll = multinomial_loglik(next_eta, y, w);
      ++halvings;
    }
    beta = next;
    ll = next_ll;
    fit.log_likelihood_trace.push_back(ll);
    fit.iterations = iter;
    if (separated(beta, scales, options.separation_bound)) {
      throw Error(ErrorKind::separation,
                  fmt::format("coefficient magnitude exceeded {} on a standardized column after {} iterations",
                              options.separation_bound, iter));
    }
    if (step_mat.cwiseAbs().maxCoeff() < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) {
    throw Error(ErrorKind::no_convergence, fmt::format("multinomial fit after {} iterations", fit.iterations));
  }
  fit.coefficients = beta;
  fit.log_likelihood = ll;
  return fit;
}

Eigen::MatrixXd softmax_probs(const Eigen::MatrixXd& x, const Eigen::MatrixXd& coefficients) {
  const Eigen::MatrixXd eta = x * coefficients;
  const Eigen::Index m = eta.cols();
  Eigen::MatrixXd prob(eta.rows(), m + 1);
  for (Eigen::Index i = 0; i < eta.rows(); ++i) {
    double mx = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) mx = std::max(mx, eta(i, k));
    double denom = std::exp(-mx);
    prob(i, 0) = denom;
    for (Eigen::Index k = 0; k < m; ++k) {
      prob(i, k + 1) = std::exp(eta(i, k) - mx);
      denom += prob(i, k + 1);
    }
    prob.row(i) /= denom;
  }
  return prob;
}

Eigen::VectorXd predict_linear(const FitResult& fit, const Eigen::MatrixXd& x) {
  if (x.cols() != fit.coefficients.rows()) {
    throw Error(ErrorKind::column_mismatch,
                fmt::format("design has {} columns, fit has {}", x.cols(), fit.coefficients.rows()));
  }
  return x * fit.coefficients.col(0);
}

Eigen::MatrixXd predict_probs(const FitResult& fit, const DesignMatrix& x) {
  if (x.cols() != fit.coefficients.rows()) {
    throw Error(ErrorKind::column_mismatch,
                fmt::format("design has {} columns, fit has {}", x.cols(), fit.coefficients.rows()));
  }
  if (!x.names.empty() && !fit.names.empty() && x.names != fit.names) {
    throw Error(ErrorKind::column_mismatch, "design column names differ from the fitted model");
  }
  switch (fit.kind) {
    case FitKind::linear:
      return x.x * fit.coefficients;
    case FitKind::logistic: {
      Eigen::VectorXd eta = x.x * fit.coefficients.col(0);
      return eta.unaryExpr([](double e) { return expit(e); });
    }
    case FitKind::multinomial:
      return softmax_probs(x.x, fit.coefficients);
  }
  return {};
}

}  // namespace gmethods
