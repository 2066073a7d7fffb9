#pragma once

#include "tailcp/solver.hpp"
#include "tailcp/types.hpp"

#include <utility>
#include <vector>

namespace tailcp {

/// Score CUSUM evaluated on the trimmed split grid. Row r holds
/// (S_{k_r} - (k_r/n) S_n) / (sqrt(n) * sigma) where S_k is the running sum
/// of score rows.
struct CusumProcess {
  std::vector<Index> grid;  // split indices k
  Matrix values;            // |grid| x p
  double sigma = 1.0;
  double alpha = 0.0;
};

/// Row i = score(X_i, y_i) at the fitted (b, beta); equals c_i * X_i with a
/// scalar multiplier per observation.
Matrix score_series(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                    const WeightedLossSpec& spec, const Eigen::Ref<const Vector>& b,
                    const Eigen::Ref<const Vector>& beta);
Matrix score_series(const Dataset& data, const WeightedLossSpec& spec, const WeightedFit& fit);

/// Trimmed split grid [ceil(n*q0), floor(n*(1-q0))] clamped to [1, n-1];
/// throws when the range is empty.
std::pair<Index, Index> trimmed_grid_bounds(Index n, double q0);

/// Prefix-sum CUSUM over the trimmed grid k = ceil(n*q0) .. floor(n*(1-q0)),
/// clamped to [1, n-1]. O(np) in total.
CusumProcess cusum(const Eigen::Ref<const Matrix>& series, double sigma, double q0,
                   double alpha = 0.0);

/// Largest (s0,2)-norm over the grid and the split index attaining it
/// (smallest index on ties).
std::pair<double, Index> max_statistic(const CusumProcess& process, int s0);

/// Argmax change-point estimate from the unstandardized process (sigma = 1).
ChangePointEstimate estimate_changepoint(const Dataset& data, const WeightedLossSpec& spec,
                                         const TestConfig& cfg, const WeightedFit& fit);

}  // namespace tailcp
