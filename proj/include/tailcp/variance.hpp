#pragma once

#include "tailcp/solver.hpp"
#include "tailcp/types.hpp"

#include <vector>

namespace tailcp {

/// Pooled weighted variance estimate sigma2 = t_hat * sigma2_minus +
/// (1 - t_hat) * sigma2_plus built from segment refits around t_hat.
struct VarianceEstimate {
  double sigma2 = 0.0;
  double sigma2_minus = 0.0;
  double sigma2_plus = 0.0;
  Index n_minus = 0;
  Index n_plus = 0;
  double t_hat_used = 0.0;
  bool converged = true;  // both segment fits converged
};

/// Segment residuals for the trimmed index sets
///   n_minus = {i : i <= n*h*t_hat},  n_plus = {i : i >= t_hat*n + (1-h)(1-t_hat)*n}
/// (1-based). eps is the segment-local regression residual, e the averaged
/// quantile indicator residual K^{-1} sum_k (1{eps <= b_k} - tau_k) using the
/// segment's own fitted intercepts.
struct SegmentResiduals {
  std::vector<Index> idx_minus, idx_plus;  // 0-based row indices
  Vector eps_minus, eps_plus;
  Vector e_minus, e_plus;
};

SegmentResiduals residuals(const Dataset& data, const WeightedLossSpec& spec,
                           const WeightedFit& fit1, const WeightedFit& fit2, double t_hat,
                           double h);

/// Mean of [(1-alpha) e_i - alpha eps_i]^2 over one segment.
double segment_second_moment(const Eigen::Ref<const Vector>& eps,
                             const Eigen::Ref<const Vector>& e, double alpha);

/// Combines segment second moments as the t_hat-weighted sum; exposed so the
/// formula can be exercised without refits.
VarianceEstimate sigma2_from_residuals(const SegmentResiduals& res, double alpha, double t_hat);

/// Full estimator: refits both segments with select_lambda on each window,
/// then pools the weighted second moments. Solver non-convergence is
/// propagated through the converged flag, never thrown.
VarianceEstimate estimate_sigma2(const Dataset& data, const WeightedLossSpec& spec,
                                 const TestConfig& cfg, double t_hat);

/// Floor applied to sigma2 before standardizing the CUSUM.
inline constexpr double kSigma2Floor = 1e-12;

}  // namespace tailcp
