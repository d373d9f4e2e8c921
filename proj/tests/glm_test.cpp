#include <gtest/gtest.h>

#include <cmath>
#include <array>
#include <random>

#include "gmethods/error.hpp"
#include "gmethods/glm.hpp"
#include "gmethods/simgen.hpp"

using namespace gmethods;

namespace {

struct Simulated {
  DesignMatrix x;
  Eigen::VectorXd y_linear;
  Eigen::VectorXd y_binary;
  std::vector<int> y_category;
};

const Eigen::Vector3d kBeta(0.5, -1.0, 0.75);

Eigen::MatrixXd gamma_matrix() {
  Eigen::MatrixXd g(3, 3);
  g << -0.5, 0.2, 0.1, 1.0, -0.5, 0.3, 0.0, 0.8, -1.0;
  return g;
}

Simulated simulate(int n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  Simulated s;
  s.x.x.resize(n, 3);
  s.x.names = {"(intercept)", "x1", "x2"};
  s.y_linear.resize(n);
  s.y_binary.resize(n);
  s.y_category.resize(static_cast<std::size_t>(n));
  const Eigen::MatrixXd gamma = gamma_matrix();
  for (int i = 0; i < n; ++i) {
    s.x.x(i, 0) = 1.0;
    s.x.x(i, 1) = normal(gen);
    s.x.x(i, 2) = unif(gen) < 0.4 ? 1.0 : 0.0;
    const double eta = s.x.x.row(i).dot(kBeta);
    s.y_linear(i) = eta + normal(gen);
    s.y_binary(i) = unif(gen) < expit(eta) ? 1.0 : 0.0;
    // Category probabilities computed by hand: exp(eta_k) / (1 + sum exp(eta_j)).
    double denom = 1.0;
    double e[3];
    for (int k = 0; k < 3; ++k) {
      e[k] = std::exp(s.x.x.row(i).dot(gamma.col(k)));
      denom += e[k];
    }
    double u = unif(gen) * denom;
    int cat = 0;
    if (u >= 1.0) {
      u -= 1.0;
      cat = 1;
      while (cat < 3 && u >= e[cat - 1]) u -= e[cat++ - 1];
    }
    s.y_category[static_cast<std::size_t>(i)] = cat;
  }
  return s;
}

}  // namespace

TEST(Wls, RecoversCoefficients) {
  const auto s = simulate(200000, 1);
  const auto fit = fit_wls(s.x, s.y_linear);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(fit.coefficients(k, 0), kBeta(k), 0.05);
  EXPECT_NEAR(fit.residual_sd, 1.0, 0.02);
  EXPECT_EQ(fit.kind, FitKind::linear);
}

TEST(Wls, ExactOnSmallSystem) {
  // y = 1 + 2x exactly; weights must not matter.
  DesignMatrix x;
  x.x.resize(4, 2);
  x.x << 1, 0, 1, 1, 1, 2, 1, 3;
  x.names = {"(intercept)", "x"};
  x.weights = Eigen::Vector4d(1, 2, 3, 4);
  const Eigen::Vector4d y(1, 3, 5, 7);
  const auto fit = fit_wls(x, y);
  EXPECT_NEAR(fit.coefficient("(intercept)"), 1.0, 1e-12);
  EXPECT_NEAR(fit.coefficient("x"), 2.0, 1e-12);
  EXPECT_NEAR(fit.rss, 0.0, 1e-20);
}

TEST(Wls, ResidualsAreWeightOrthogonal) {
  auto s = simulate(2000, 2);
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> w(0.1, 3.0);
  s.x.weights.resize(s.x.rows());
  for (Eigen::Index i = 0; i < s.x.rows(); ++i) s.x.weights(i) = w(gen);
  const auto fit = fit_wls(s.x, s.y_linear);
  const Eigen::VectorXd r = s.y_linear - s.x.x * fit.coefficients.col(0);
  const Eigen::VectorXd score = s.x.x.transpose() * (s.x.weights.array() * r.array()).matrix();
  EXPECT_LT(score.cwiseAbs().maxCoeff(), 1e-6 * s.x.rows());
}

TEST(Wls, WeightTwoEqualsDuplicateRow) {
  DesignMatrix x;
  x.x.resize(3, 2);
  x.x << 1, 0, 1, 1, 1, 3;
  x.names = {"(intercept)", "x"};
  x.weights = Eigen::Vector3d(1, 2, 1);
  const Eigen::Vector3d y(0.5, 1.0, 4.0);
  DesignMatrix dup;
  dup.x.resize(4, 2);
  dup.x << 1, 0, 1, 1, 1, 1, 1, 3;
  dup.names = x.names;
  const Eigen::Vector4d ydup(0.5, 1.0, 1.0, 4.0);
  const auto a = fit_wls(x, y);
  const auto b = fit_wls(dup, ydup);
  EXPECT_NEAR(a.coefficients(0, 0), b.coefficients(0, 0), 1e-12);
  EXPECT_NEAR(a.coefficients(1, 0), b.coefficients(1, 0), 1e-12);
}

TEST(Wls, RankDeficientNamesColumns) {
  DesignMatrix x;
  x.x.resize(4, 3);
  x.x << 1, 0, 0, 1, 1, 2, 1, 2, 4, 1, 3, 6;
  x.names = {"(intercept)", "x", "twice_x"};
  try {
    fit_wls(x, Eigen::Vector4d(1, 2, 3, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::rank_deficient);
    EXPECT_NE(std::string(e.what()).find("x"), std::string::npos);
  }
}

TEST(Wls, EmptyInput) {
  DesignMatrix x;
  EXPECT_THROW(fit_wls(x, Eigen::VectorXd()), Error);
}

TEST(Logistic, RecoversCoefficients) {
  const auto s = simulate(200000, 4);
  const auto fit = fit_logistic(s.x, s.y_binary);
  EXPECT_TRUE(fit.converged);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(fit.coefficients(k, 0), kBeta(k), 0.05);
}

TEST(Logistic, LikelihoodNeverDecreases) {
  const auto s = simulate(5000, 5);
  const auto fit = fit_logistic(s.x, s.y_binary);
  for (std::size_t k = 1; k < fit.log_likelihood_trace.size(); ++k) {
    EXPECT_GE(fit.log_likelihood_trace[k], fit.log_likelihood_trace[k - 1] - 1e-9);
  }
}

TEST(Logistic, InvariantToColumnRescaling) {
  auto s = simulate(3000, 6);
  const auto base = fit_logistic(s.x, s.y_binary);
  DesignMatrix scaled = s.x;
  scaled.x.col(1) = scaled.x.col(1) * 100.0 + Eigen::VectorXd::Constant(scaled.rows(), 5.0);
  const auto fit = fit_logistic(scaled, s.y_binary);
  const Eigen::MatrixXd p0 = predict_probs(base, s.x);
  const Eigen::MatrixXd p1 = predict_probs(fit, scaled);
  EXPECT_LT((p0 - p1).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Logistic, SeparationIsReported) {
  DesignMatrix x;
  x.x.resize(6, 2);
  x.x << 1, -3, 1, -2, 1, -1, 1, 1, 1, 2, 1, 3;
  x.names = {"(intercept)", "x"};
  const Eigen::VectorXd y = (Eigen::VectorXd(6) << 0, 0, 0, 1, 1, 1).finished();
  try {
    fit_logistic(x, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::separation);
  }
}

TEST(Multinomial, RecoversCoefficients) {
  const auto s = simulate(200000, 7);
  const auto fit = fit_multinomial(s.x, s.y_category, 4);
  EXPECT_TRUE(fit.converged);
  EXPECT_EQ(fit.coefficients.cols(), 3);
  EXPECT_LT((fit.coefficients - gamma_matrix()).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Multinomial, ProbabilitiesSumToOne) {
  const auto s = simulate(4000, 8);
  const auto fit = fit_multinomial(s.x, s.y_category, 4);
  const Eigen::MatrixXd p = predict_probs(fit, s.x);
  ASSERT_EQ(p.cols(), 4);
  EXPECT_LT((p.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
  EXPECT_GT(p.minCoeff(), 0.0);
}

TEST(Multinomial, InterceptOnlyGivesMarginalFrequencies) {
  const auto s = simulate(4000, 9);
  DesignMatrix one;
  one.x = Eigen::MatrixXd::Ones(s.x.rows(), 1);
  one.names = {"(intercept)"};
  const auto fit = fit_multinomial(one, s.y_category, 4);
  const Eigen::MatrixXd p = predict_probs(fit, one);
  std::array<double, 4> freq{};
  for (int c : s.y_category) freq[static_cast<std::size_t>(c)] += 1.0 / static_cast<double>(s.y_category.size());
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(p(0, k), freq[static_cast<std::size_t>(k)], 1e-8);
}

TEST(Multinomial, MissingCategoryIsSeparation) {
  const auto s = simulate(500, 10);
  std::vector<int> y = s.y_category;
  for (auto& c : y) c = c == 3 ? 2 : c;
  try {
    fit_multinomial(s.x, y, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::separation);
  }
}

TEST(Predict, ColumnMismatch) {
  const auto s = simulate(500, 11);
  const auto fit = fit_logistic(s.x, s.y_binary);
  DesignMatrix other = s.x;
  other.names[1] = "renamed";
  EXPECT_THROW(predict_probs(fit, other), Error);
  DesignMatrix narrow;
  narrow.x = s.x.x.leftCols(2);
  narrow.names = {"(intercept)", "x1"};
  EXPECT_THROW(predict_probs(fit, narrow), Error);
}

TEST(Softmax, MatchesHandComputation) {
  Eigen::MatrixXd x(1, 2);
  x << 1.0, 0.5;
  Eigen::MatrixXd coef(2, 3);
  coef << 0.1, -0.2, 0.3, 1.0, 0.0, -1.0;
  const Eigen::MatrixXd p = softmax_probs(x, coef);
  const double e1 = std::exp(0.1 + 0.5), e2 = std::exp(-0.2), e3 = std::exp(0.3 - 0.5);
  const double d = 1 + e1 + e2 + e3;
  EXPECT_NEAR(p(0, 0), 1 / d, 1e-15);
  EXPECT_NEAR(p(0, 1), e1 / d, 1e-15);
  EXPECT_NEAR(p(0, 3), e3 / d, 1e-15);
}
