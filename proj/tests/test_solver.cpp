#include "tailcp/loss.hpp"
#include "tailcp/rng.hpp"
#include "tailcp/solver.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace tailcp;

namespace {

Matrix random_matrix(Index n, Index p, RngStream& rng) {
  Matrix X(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) X(i, j) = rng.normal();
  return X;
}

// Exact minimizer of sum_i rho_{0.5}(y_i - b - x_i * beta) over (b, beta) for
// scalar x. The optimum of this piecewise-linear convex function is attained
// where two residual kink lines meet, i.e. at a line through two data points
// (or a flat line through one point). Enumerating all of them is exact.
double median_line_oracle_objective(const Vector& x, const Vector& y) {
  const Index m = x.size();
  auto objective = [&](double b, double beta) {
    double acc = 0.0;
    for (Index i = 0; i < m; ++i) acc += check_loss(y[i] - b - x[i] * beta, 0.5);
    return acc / static_cast<double>(m);
  };
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < m; ++i) {
    best = std::min(best, objective(y[i], 0.0));  // horizontal line through i
    for (Index j = i + 1; j < m; ++j) {
      const double dx = x[i] - x[j];
      if (std::abs(dx) < 1e-12) continue;
      const double beta = (y[i] - y[j]) / dx;
      const double b = y[i] - beta * x[i];
      best = std::min(best, objective(b, beta));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("alpha=1 lambda=0 matches normal equations") {
  RngStream rng(101, {1});
  WeightedLossSpec spec(1.0, {0.5});
  for (int inst = 0; inst < 20; ++inst) {
    const Index n = 50, p = 2;
    Matrix X = random_matrix(n, p, rng);
    Vector beta_true(p);
    beta_true << 1.5, -2.0;
    Vector y = X * beta_true;
    for (Index i = 0; i < n; ++i) y[i] += 0.3 * rng.normal();

    const Vector oracle = (X.transpose() * X).ldlt().solve(X.transpose() * y);
    SolverConfig scfg;
    scfg.tol = 1e-9;
    const WeightedFit fit = fit_weighted_lasso(X, y, spec, 0.0, scfg);
    CHECK(fit.converged);
    CHECK((fit.beta_hat - oracle).lpNorm<Eigen::Infinity>() <= 1e-6);
  }
}

TEST_CASE("alpha=0 K=1 p=1 median regression matches line-enumeration oracle") {
  RngStream rng(102, {2});
  WeightedLossSpec spec(0.0, {0.5});
  for (int inst = 0; inst < 20; ++inst) {
    const Index m = 21;  // odd
    Matrix X(m, 1);
    Vector y(m);
    for (Index i = 0; i < m; ++i) {
      X(i, 0) = rng.normal();
      y[i] = 0.7 * X(i, 0) + rng.normal();
    }
    const double opt = median_line_oracle_objective(X.col(0), y);
    SolverConfig scfg;
    scfg.tol = 1e-10;
    scfg.max_iter = 30000;
    const WeightedFit fit = fit_weighted_lasso(X, y, spec, 0.0, scfg);
    CHECK(fit.converged);
    const double achieved = window_objective(X, y, spec, fit.b_hat, fit.beta_hat, 0.0);
    CHECK(achieved <= opt + 1e-8);
    CHECK(achieved >= opt - 1e-8);  // oracle is exact: cannot beat it
  }
}

TEST_CASE("large lambda forces beta to zero with median intercept") {
  RngStream rng(103, {3});
  WeightedLossSpec spec(0.0, {0.5});
  const Index m = 31, p = 3;
  Matrix X = random_matrix(m, p, rng);
  Vector y(m);
  for (Index i = 0; i < m; ++i) y[i] = rng.normal();

  const double lmax = lambda_max(X, y, spec);
  const WeightedFit fit = fit_weighted_lasso(X, y, spec, 1.01 * lmax);
  CHECK(fit.beta_hat.lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
  CHECK(fit.converged);

  // Any minimizer of sum rho_0.5(y_i - b) between the middle order statistics.
  std::vector<double> sorted(y.data(), y.data() + m);
  std::sort(sorted.begin(), sorted.end());
  CHECK(fit.b_hat[0] >= sorted[14] - 1e-9);
  CHECK(fit.b_hat[0] <= sorted[16] + 1e-9);
}

TEST_CASE("zero is stationary at lambda_max for mixed alpha") {
  RngStream rng(104, {4});
  for (double alpha : {0.0, 0.5, 1.0}) {
    WeightedLossSpec spec(alpha, {0.25, 0.5, 0.75});
    const Index m = 40, p = 5;
    Matrix X = random_matrix(m, p, rng);
    Vector y(m);
    for (Index i = 0; i < m; ++i) y[i] = rng.normal();
    const double lmax = lambda_max(X, y, spec);
    const WeightedFit fit = fit_weighted_lasso(X, y, spec, 1.05 * lmax);
    CHECK(fit.beta_hat.lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
  }
}

TEST_CASE("support size is nonincreasing along an increasing lambda path") {
  RngStream rng(105, {5});
  WeightedLossSpec spec(0.5, {0.5});
  const Index m = 60, p = 8;
  Matrix X = random_matrix(m, p, rng);
  Vector beta_true = Vector::Zero(p);
  beta_true[0] = 2.0;
  beta_true[3] = -1.5;
  Vector y = X * beta_true;
  for (Index i = 0; i < m; ++i) y[i] += 0.5 * rng.normal();

  const double lmax = lambda_max(X, y, spec);
  int prev_support = static_cast<int>(p) + 1;
  for (int step = 0; step < 10; ++step) {
    const double lam = lmax * std::pow(10.0, -2.0 + 2.0 * step / 9.0);
    const WeightedFit fit = fit_weighted_lasso(X, y, spec, lam);
    int support = 0;
    for (Index j = 0; j < p; ++j)
      if (std::abs(fit.beta_hat[j]) > 1e-8) ++support;
    CHECK(support <= prev_support);
    prev_support = support;
  }
}

TEST_CASE("objective of returned fit never exceeds the zero-vector objective") {
  RngStream rng(106, {6});
  for (double alpha : {0.0, 0.3, 1.0}) {
    WeightedLossSpec spec(alpha, {0.5});
    const Index m = 30, p = 4;
    Matrix X = random_matrix(m, p, rng);
    Vector y(m);
    for (Index i = 0; i < m; ++i) y[i] = rng.normal() * 2.0;
    const double lam = 0.1;
    const WeightedFit fit = fit_weighted_lasso(X, y, spec, lam);

    Vector b0(1);
    std::vector<double> sorted(y.data(), y.data() + m);
    std::nth_element(sorted.begin(), sorted.begin() + (m - 1) / 2, sorted.end());
    b0[0] = sorted[static_cast<std::size_t>((m - 1) / 2)];
    const double at_zero = window_objective(X, y, spec, b0, Vector::Zero(p), lam);
    CHECK(fit.objective <= at_zero + 1e-12);
  }
}

TEST_CASE("select_lambda formula and homogeneity") {
  TestConfig cfg;
  cfg.lambda_scale = 1.0;
  CHECK(select_lambda(100, 100, cfg) == doctest::Approx(0.30349).epsilon(1e-4));
  cfg.lambda_scale = 0.0;
  CHECK(select_lambda(100, 100, cfg) == doctest::Approx(0.0));
  cfg.lambda_scale = 2.0;
  CHECK(select_lambda(100, 100, cfg) == doctest::Approx(0.60697).epsilon(1e-4));
}

TEST_CASE("warm start and smoothing reach the same optimum") {
  RngStream rng(107, {7});
  WeightedLossSpec spec(0.3, {0.25, 0.5, 0.75});
  const Index m = 80, p = 6;
  Matrix X = random_matrix(m, p, rng);
  Vector beta_true = Vector::Zero(p);
  beta_true[1] = 1.0;
  Vector y = X * beta_true;
  for (Index i = 0; i < m; ++i) y[i] += rng.normal();

  const double lam = 0.05;
  const WeightedFit plain = fit_weighted_lasso(X, y, spec, lam);

  SolverConfig scfg;
  scfg.smoothing_bandwidth = 0.5;
  const WeightedFit smoothed = fit_weighted_lasso(X, y, spec, lam, scfg);

  WarmStart warm{plain.b_hat, plain.beta_hat};
  const WeightedFit reseeded = fit_weighted_lasso(X, y, spec, lam, SolverConfig{}, &warm);

  CHECK(plain.converged);
  CHECK(smoothed.converged);
  CHECK(reseeded.converged);
  CHECK(smoothed.objective == doctest::Approx(plain.objective).epsilon(1e-6));
  CHECK(reseeded.objective <= plain.objective + 1e-10);
}

TEST_CASE("empty and undersized windows are rejected") {
  WeightedLossSpec spec(0.5, {0.25, 0.5});
  Matrix X(1, 2);
  X << 1.0, 2.0;
  Vector y(1);
  y << 1.0;
  CHECK_THROWS_AS(fit_weighted_lasso(X, y, spec, 0.1), std::invalid_argument);
  Matrix X0(0, 2);
  Vector y0(0);
  CHECK_THROWS_AS(fit_weighted_lasso(X0, y0, spec, 0.1), std::invalid_argument);
}

TEST_CASE("cross-validated lambda is positive and finite") {
  RngStream rng(108, {8});
  const Index m = 60, p = 4;
  Matrix X = random_matrix(m, p, rng);
  Vector beta_true = Vector::Zero(p);
  beta_true[0] = 1.0;
  Vector y = X * beta_true;
  for (Index i = 0; i < m; ++i) y[i] += 0.5 * rng.normal();
  Dataset data(X, y);
  WeightedLossSpec spec(0.5, {0.5});
  TestConfig cfg;
  const double lam = select_lambda_cv(data, spec, cfg);
  CHECK(lam > 0.0);
  CHECK(std::isfinite(lam));
}
