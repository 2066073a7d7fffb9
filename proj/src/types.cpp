#include "tailcp/types.hpp"

#include <algorithm>

namespace tailcp {

Dataset::Dataset(Matrix X_in, Vector y_in) : X(std::move(X_in)), y(std::move(y_in)) {
  if (X.rows() < 2) throw std::invalid_argument("Dataset: need at least 2 rows");
  if (X.cols() < 1) throw std::invalid_argument("Dataset: need at least 1 column");
  if (X.rows() != y.size())
    throw std::invalid_argument("Dataset: row count of X must equal length of y");
  if (!X.allFinite() || !y.allFinite())
    throw std::invalid_argument("Dataset: all entries must be finite");
}

Dataset Dataset::window(Index first, Index count) const {
  if (first < 0 || count < 1 || first + count > n())
    throw std::invalid_argument("Dataset::window: range out of bounds");
  Dataset out;
  out.X = X.middleRows(first, count);
  out.y = y.segment(first, count);
  return out;
}

WeightedLossSpec::WeightedLossSpec(double alpha_in, std::vector<double> taus_in)
    : alpha(alpha_in), taus(std::move(taus_in)) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("WeightedLossSpec: alpha must lie in [0, 1]");
  if (taus.empty()) throw std::invalid_argument("WeightedLossSpec: need at least one tau");
  double prev = 0.0;
  for (double tau : taus) {
    if (!(tau > prev && tau < 1.0))
      throw std::invalid_argument("WeightedLossSpec: taus must be strictly increasing in (0, 1)");
    prev = tau;
  }
}

void TestConfig::validate() const {
  if (s0 < 1) throw std::invalid_argument("TestConfig: s0 must be >= 1");
  if (!(q0 > 0.0 && q0 < 0.5)) throw std::invalid_argument("TestConfig: q0 must lie in (0, 0.5)");
  if (!(gamma > 0.0 && gamma < 0.5))
    throw std::invalid_argument("TestConfig: gamma must lie in (0, 0.5)");
  if (B < 1) throw std::invalid_argument("TestConfig: B must be >= 1");
  if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("TestConfig: h must lie in (0, 1)");
  if (alpha_set.empty()) throw std::invalid_argument("TestConfig: alpha_set must be nonempty");
  for (double a : alpha_set)
    if (!(a >= 0.0 && a <= 1.0))
      throw std::invalid_argument("TestConfig: alpha_set entries must lie in [0, 1]");
  if (!(lambda_scale >= 0.0)) throw std::invalid_argument("TestConfig: lambda_scale must be >= 0");
  if (threads < 1) throw std::invalid_argument("TestConfig: threads must be >= 1");
}

int TestConfig::effective_s0(Index p) const {
  return static_cast<int>(std::min<Index>(s0, p));
}

}  // namespace tailcp
