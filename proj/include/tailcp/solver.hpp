#pragma once

#include "tailcp/types.hpp"

namespace tailcp {

struct SolverConfig {
  double tol = 1e-6;  // KKT tolerance, scaled by max(1, ||y||_inf)
  int max_iter = 10000;
  double smoothing_bandwidth = 0.0;  // > 0 enables a smoothed warm-start pass
  double admm_rho = 1.0;
};

/// Penalized minimizer of the weighted composite objective on one window.
struct WeightedFit {
  Vector b_hat;     // K unpenalized quantile intercepts
  Vector beta_hat;  // p coefficients
  double lambda = 0.0;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct WarmStart {
  Vector b;
  Vector beta;
};

/// Objective value
///   (1-alpha)/(mK) sum_i sum_k rho_{tau_k}(y_i - b_k - x_i'beta)
///   + alpha/(2m) sum_i (y_i - x_i'beta)^2 + lambda ||beta||_1.
double window_objective(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                        const WeightedLossSpec& spec, const Eigen::Ref<const Vector>& b,
                        const Eigen::Ref<const Vector>& beta, double lambda);

/// Exact subgradient stationarity residual of the objective at (b, beta),
/// maximized over all coordinates of beta and b. Subgradient intervals are
/// used at active check-loss kinks, so interpolated solutions certify.
double kkt_residual(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                    const WeightedLossSpec& spec, const Eigen::Ref<const Vector>& b,
                    const Eigen::Ref<const Vector>& beta, double lambda);

/// Solves the L1-penalized weighted composite objective by ADMM with
/// consensus on the residual vector. The beta block is a quadratic lasso
/// handled by coordinate descent, the residual block is the exact prox of a
/// sum of check losses, and the intercepts are exact quantile updates.
/// Non-convergence within max_iter returns converged = false with the best
/// iterate found; callers surface a warning rather than abort.
WeightedFit fit_weighted_lasso(const Eigen::Ref<const Matrix>& X,
                               const Eigen::Ref<const Vector>& y, const WeightedLossSpec& spec,
                               double lambda, const SolverConfig& cfg = {},
                               const WarmStart* warm = nullptr);

WeightedFit fit_weighted_lasso(const Dataset& data, const WeightedLossSpec& spec, double lambda,
                               const SolverConfig& cfg = {}, const WarmStart* warm = nullptr);

/// Smallest lambda for which beta = 0 satisfies the stationarity condition,
/// evaluated at the per-quantile empirical intercepts b(beta = 0).
double lambda_max(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                  const WeightedLossSpec& spec);

/// lambda = C_lambda * sqrt(log(p * m) / m) for a window of length m.
double select_lambda(Index m, Index p, const TestConfig& cfg);
double select_lambda(const Dataset& window, const TestConfig& cfg);

/// 5-fold cross-validation over a small grid of C_lambda multiples.
/// Returns the tuned lambda for the full window; deterministic
/// (interleaved folds, no randomness).
double select_lambda_cv(const Dataset& window, const WeightedLossSpec& spec,
                        const TestConfig& cfg, int folds = 5);

}  // namespace tailcp
