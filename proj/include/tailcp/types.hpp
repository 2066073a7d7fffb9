#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace tailcp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Time-ordered regression sample: X is n x p with rows in observation
/// order, y holds the matching responses.
struct Dataset {
  Matrix X;
  Vector y;

  Dataset() = default;
  Dataset(Matrix X_in, Vector y_in);

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }

  /// Contiguous window of rows [first, first + count).
  Dataset window(Index first, Index count) const;
};

/// Loss family parameters: weight alpha between the composite quantile
/// part (alpha = 0) and the halved squared loss (alpha = 1), plus the
/// quantile grid 0 < tau_1 < ... < tau_K < 1.
struct WeightedLossSpec {
  double alpha = 0.5;
  std::vector<double> taus = {0.5};

  WeightedLossSpec() = default;
  WeightedLossSpec(double alpha_in, std::vector<double> taus_in);

  int K() const { return static_cast<int>(taus.size()); }
};

/// Shared configuration of the testing pipeline.
struct TestConfig {
  int s0 = 5;
  double q0 = 0.1;
  double gamma = 0.05;
  int B = 200;
  double h = 0.9;
  std::vector<double> alpha_set = {0.0, 0.1, 0.5, 0.9, 1.0};
  double lambda_scale = 1.0;  // C_lambda in lambda = C * sqrt(log(p*m)/m)
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;

  /// s0 clamped to the data dimension.
  int effective_s0(Index p) const;
};

/// Estimated relative change-point location t_hat with the matching
/// integer split index k_hat = floor(n * t_hat).
struct ChangePointEstimate {
  double t_hat = 0.0;
  Index k_hat = 0;
  double alpha_used = 0.0;
};

}  // namespace tailcp
