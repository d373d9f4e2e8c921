#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gmethods {

// Regressor matrix with named columns and optional nonnegative row weights
// (empty weights mean unit weights).
struct DesignMatrix {
  Eigen::MatrixXd x;
  std::vector<std::string> names;
  Eigen::VectorXd weights;

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index cols() const { return x.cols(); }
  bool weighted() const { return weights.size() != 0; }
};

struct GlmOptions {
  double tolerance = 1e-8;      // max |coefficient step| at convergence
  int max_iterations = 100;
  double separation_bound = 30;  // |coefficient| on a standardized column
};

enum class FitKind { linear, logistic, multinomial };

struct FitResult {
  FitKind kind = FitKind::linear;
  std::vector<std::string> names;
  // p x 1 for linear and logistic fits, p x (K-1) for multinomial fits
  // (column k-1 holds the log-odds coefficients of category k vs 0).
  Eigen::MatrixXd coefficients;
  int categories = 1;
  double residual_sd = 0.0;
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;  // logistic / multinomial
  double rss = 0.0;             // weighted residual sum of squares for linear fits
  std::vector<double> log_likelihood_trace;

  double coefficient(std::string_view name, int category = 1) const;
};

FitResult fit_wls(const DesignMatrix& x, const Eigen::VectorXd& y);
FitResult fit_logistic(const DesignMatrix& x, const Eigen::VectorXd& y, const GlmOptions& options = {});
// y holds category codes 0..categories-1; category 0 is the reference.
FitResult fit_multinomial(const DesignMatrix& x, std::span<const int> y, int categories = 4,
                          const GlmOptions& options = {});

// Linear fits: fitted mean (n x 1). Logistic: P(y=1) (n x 1).
// Multinomial: n x K matrix of category probabilities.
Eigen::MatrixXd predict_probs(const FitResult& fit, const DesignMatrix& x);
Eigen::VectorXd predict_linear(const FitResult& fit, const Eigen::MatrixXd& x);

// Rows of x times p x (K-1) coefficients -> n x K softmax with category 0 as reference.
Eigen::MatrixXd softmax_probs(const Eigen::MatrixXd& x, const Eigen::MatrixXd& coefficients);

}  // namespace gmethods
