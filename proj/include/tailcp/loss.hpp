#pragma once

#include "tailcp/types.hpp"

namespace tailcp {

/// Check loss rho_tau(t) = t * (tau - 1{t <= 0}).
double check_loss(double t, double tau);

/// Weighted composite loss
///   (1-alpha)/K * sum_k rho_{tau_k}(y - b_k - x'beta) + alpha/2 * (y - x'beta)^2.
double weighted_loss(const Eigen::Ref<const Vector>& x, double y, const WeightedLossSpec& spec,
                     const Eigen::Ref<const Vector>& b, const Eigen::Ref<const Vector>& beta);

/// Scalar c such that the score (subgradient in beta) equals c * x.
/// residual_ls = y - x'beta. Kink convention: 1{u <= 0} evaluates to 1 at u = 0.
double score_multiplier(double residual_ls, const WeightedLossSpec& spec,
                        const Eigen::Ref<const Vector>& b);

/// Subgradient of the weighted loss with respect to beta:
///   [(1-alpha)/K * sum_k x * (1{y - b_k - x'beta <= 0} - tau_k)] - alpha * x * (y - x'beta).
Vector score(const Eigen::Ref<const Vector>& x, double y, const WeightedLossSpec& spec,
             const Eigen::Ref<const Vector>& b, const Eigen::Ref<const Vector>& beta);

/// (s0,2)-norm: L2 norm of the s0 largest entries of |v|.
/// Equals max-abs for s0 = 1 and the full L2 norm for s0 = p.
double s0_norm(const Eigen::Ref<const Vector>& v, int s0);

}  // namespace tailcp
