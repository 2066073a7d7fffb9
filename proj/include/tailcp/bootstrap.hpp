#pragma once

#include "tailcp/cusum.hpp"
#include "tailcp/types.hpp"
#include "tailcp/variance.hpp"

#include <vector>

namespace tailcp {

struct IndividualTestResult {
  double alpha = 0.0;
  double T = 0.0;       // standardized statistic
  double p_hat = 1.0;   // #{b : T^b > T} / (B + 1)
  bool reject = false;  // p_hat <= gamma
  ChangePointEstimate t_hat;
  VarianceEstimate sigma2;
  Vector bootstrap_samples;  // T^1 .. T^B
  bool solver_converged = true;
  bool variance_floored = false;
};

struct AdaptiveTestResult {
  double T_ad = 1.0;  // min over alpha of p_hat
  double p_ad = 1.0;
  bool reject = false;
  double alpha_star = 0.0;  // smallest argmin on ties
  ChangePointEstimate t_hat_ad;
  std::vector<IndividualTestResult> individual;
};

/// Analytic bootstrap variance for standard normal multipliers:
///   v^2 = (1-alpha)^2 Var[e(tau~)] + alpha^2 - 2 alpha (1-alpha) Cov(e(tau~), e)
/// with Var[e(tau~)] = K^-2 sum_{k1,k2} (min(tau_k1,tau_k2) - tau_k1 tau_k2)
/// and Cov(e(tau_k), e) = -phi(Phi^{-1}(tau_k)).
double bootstrap_variance_v2(const WeightedLossSpec& spec);

/// One bootstrap statistic for several alpha values sharing one multiplier
/// draw. The multipliers depend only on (cfg.seed, stream_tag, rep_index),
/// never on alpha, which is what couples the individual tests inside the
/// adaptive combination. Returns one T^b per alpha.
Vector bootstrap_statistic_multi(const Eigen::Ref<const Matrix>& X,
                                 const std::vector<double>& taus,
                                 const std::vector<double>& alphas, const TestConfig& cfg,
                                 std::uint64_t rep_index, std::uint64_t stream_tag = 0);

/// Single-alpha convenience wrapper over the multi version.
double bootstrap_statistic(const Eigen::Ref<const Matrix>& X, const WeightedLossSpec& spec,
                           const TestConfig& cfg, std::uint64_t rep_index,
                           std::uint64_t stream_tag = 0);

/// Full individual test: pooled fit, argmax location, pooled variance,
/// standardized statistic, B bootstrap replicates, p-value and decision.
IndividualTestResult run_individual_test(const Dataset& data, const WeightedLossSpec& spec,
                                         const TestConfig& cfg, std::uint64_t stream_tag = 0);

/// Combines individual results (which must share B and, for validity, the
/// same per-replicate multipliers) into the tail-adaptive decision via the
/// leave-one-out low-cost bootstrap.
AdaptiveTestResult adaptive_pvalue(std::vector<IndividualTestResult> individual,
                                   const TestConfig& cfg);

/// End-to-end adaptive test over cfg.alpha_set with shared multipliers.
AdaptiveTestResult run_adaptive_test(const Dataset& data, const std::vector<double>& taus,
                                     const TestConfig& cfg, std::uint64_t stream_tag = 0);

}  // namespace tailcp
