#include "tailcp/cusum.hpp"

#include "tailcp/loss.hpp"

#include <cassert>
#include <cmath>

namespace tailcp {

Matrix score_series(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                    const WeightedLossSpec& spec, const Eigen::Ref<const Vector>& b,
                    const Eigen::Ref<const Vector>& beta) {
  const Index n = X.rows();
  if (n != y.size()) throw std::invalid_argument("score_series: X/y size mismatch");
  if (X.cols() != beta.size()) throw std::invalid_argument("score_series: X/beta size mismatch");
  const Vector r_fit = y - X * beta;
  Matrix out(n, X.cols());
  for (Index i = 0; i < n; ++i) out.row(i) = score_multiplier(r_fit[i], spec, b) * X.row(i);
  return out;
}

Matrix score_series(const Dataset& data, const WeightedLossSpec& spec, const WeightedFit& fit) {
  return score_series(data.X, data.y, spec, fit.b_hat, fit.beta_hat);
}

std::pair<Index, Index> trimmed_grid_bounds(Index n, double q0) {
  if (!(q0 > 0.0 && q0 < 0.5)) throw std::invalid_argument("trimmed grid: q0 must lie in (0, 0.5)");
  const double dn = static_cast<double>(n);
  Index lo = static_cast<Index>(std::ceil(dn * q0 - 1e-9));
  Index hi = static_cast<Index>(std::floor(dn * (1.0 - q0) + 1e-9));
  lo = std::max<Index>(lo, 1);
  hi = std::min<Index>(hi, n - 1);
  if (lo > hi) throw std::invalid_argument("trimmed grid: q0 too large for this n");
  return {lo, hi};
}

CusumProcess cusum(const Eigen::Ref<const Matrix>& series, double sigma, double q0, double alpha) {
  if (!(sigma > 0.0)) throw std::invalid_argument("cusum: sigma must be positive");
  const Index n = series.rows();
  const Index p = series.cols();
  const auto [lo, hi] = trimmed_grid_bounds(n, q0);

  const Vector total = series.colwise().sum().transpose();
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  CusumProcess proc;
  proc.sigma = sigma;
  proc.alpha = alpha;
  proc.grid.reserve(static_cast<std::size_t>(hi - lo + 1));
  proc.values.resize(hi - lo + 1, p);

  Vector prefix = Vector::Zero(p);
  for (Index k = 1; k <= hi; ++k) {
    prefix += series.row(k - 1).transpose();
    if (k >= lo) {
      proc.grid.push_back(k);
      const double dk = static_cast<double>(k);
      for (Index j = 0; j < p; ++j) {
        const double centered = prefix[j] - (dk * total[j]) / static_cast<double>(n);
        proc.values(k - lo, j) = (centered / sqrt_n) / sigma;
      }
    }
  }
  // Extending to k = n gives S_n - (n/n) S_n = 0 identically.
  assert(((prefix + series.bottomRows(n - hi).colwise().sum().transpose()) -
          (static_cast<double>(n) * total) / static_cast<double>(n))
             .lpNorm<Eigen::Infinity>() <= 1e-9 * (1.0 + total.lpNorm<Eigen::Infinity>()));
  return proc;
}

std::pair<double, Index> max_statistic(const CusumProcess& process, int s0) {
  if (process.grid.empty()) throw std::invalid_argument("max_statistic: empty grid");
  double best = -1.0;
  Index k_star = process.grid.front();
  for (std::size_t r = 0; r < process.grid.size(); ++r) {
    const double val = s0_norm(process.values.row(static_cast<Index>(r)).transpose(), s0);
    if (val > best) {
      best = val;
      k_star = process.grid[r];
    }
  }
  return {best, k_star};
}

ChangePointEstimate estimate_changepoint(const Dataset& data, const WeightedLossSpec& spec,
                                         const TestConfig& cfg, const WeightedFit& fit) {
  const Matrix series = score_series(data, spec, fit);
  const CusumProcess proc = cusum(series, 1.0, cfg.q0, spec.alpha);
  const auto [stat, k_star] = max_statistic(proc, cfg.effective_s0(data.p()));
  (void)stat;
  ChangePointEstimate est;
  est.t_hat = static_cast<double>(k_star) / static_cast<double>(data.n());
  est.k_hat = static_cast<Index>(std::floor(est.t_hat * static_cast<double>(data.n()) + 1e-9));
  est.alpha_used = spec.alpha;
  return est;
}

}  // namespace tailcp
