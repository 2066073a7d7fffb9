#include "tailcp/variance.hpp"

#include <cmath>

namespace tailcp {

namespace {

struct SegmentBounds {
  Index count_minus;  // n_minus = rows 1..count_minus (1-based)
  Index start_plus;   // n_plus  = rows start_plus..n (1-based)
};

SegmentBounds segment_bounds(Index n, double t_hat, double h) {
  if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("residuals: h must lie in (0, 1)");
  if (!(t_hat > 0.0 && t_hat < 1.0))
    throw std::invalid_argument("residuals: t_hat must lie in (0, 1)");
  const double dn = static_cast<double>(n);
  SegmentBounds sb;
  sb.count_minus = static_cast<Index>(std::floor(dn * h * t_hat + 1e-9));
  if (sb.count_minus < 1)
    throw std::invalid_argument(
        "residuals: left segment is empty (n*h*t_hat < 1); increase h or n");
  sb.start_plus =
      static_cast<Index>(std::ceil(t_hat * dn + (1.0 - h) * (1.0 - t_hat) * dn - 1e-9));
  sb.start_plus = std::max<Index>(sb.start_plus, 1);
  if (sb.start_plus > n)
    throw std::invalid_argument("residuals: right segment is empty; increase h or n");
  return sb;
}

}  // namespace

SegmentResiduals residuals(const Dataset& data, const WeightedLossSpec& spec,
                           const WeightedFit& fit1, const WeightedFit& fit2, double t_hat,
                           double h) {
  const Index n = data.n();
  const SegmentBounds sb = segment_bounds(n, t_hat, h);
  const int K = spec.K();

  SegmentResiduals out;
  auto fill = [&](const WeightedFit& fit, Index first, Index last, std::vector<Index>& idx,
                  Vector& eps, Vector& e) {
    const Index count = last - first + 1;
    idx.reserve(static_cast<std::size_t>(count));
    eps.resize(count);
    e.resize(count);
    for (Index r = 0; r < count; ++r) {
      const Index i = first + r - 1;  // 0-based row
      idx.push_back(i);
      eps[r] = data.y[i] - data.X.row(i).dot(fit.beta_hat);
      double acc = 0.0;
      for (int k = 0; k < K; ++k)
        acc += (eps[r] <= fit.b_hat[k] ? 1.0 : 0.0) - spec.taus[static_cast<std::size_t>(k)];
      e[r] = acc / K;
    }
  };
  fill(fit1, 1, sb.count_minus, out.idx_minus, out.eps_minus, out.e_minus);
  fill(fit2, sb.start_plus, n, out.idx_plus, out.eps_plus, out.e_plus);
  return out;
}

double segment_second_moment(const Eigen::Ref<const Vector>& eps,
                             const Eigen::Ref<const Vector>& e, double alpha) {
  if (eps.size() != e.size() || eps.size() == 0)
    throw std::invalid_argument("segment_second_moment: bad segment");
  double acc = 0.0;
  for (Index i = 0; i < eps.size(); ++i) {
    const double w = (1.0 - alpha) * e[i] - alpha * eps[i];
    acc += w * w;
  }
  return acc / static_cast<double>(eps.size());
}

VarianceEstimate sigma2_from_residuals(const SegmentResiduals& res, double alpha, double t_hat) {
  VarianceEstimate est;
  est.t_hat_used = t_hat;
  est.n_minus = static_cast<Index>(res.idx_minus.size());
  est.n_plus = static_cast<Index>(res.idx_plus.size());
  est.sigma2_minus = segment_second_moment(res.eps_minus, res.e_minus, alpha);
  est.sigma2_plus = segment_second_moment(res.eps_plus, res.e_plus, alpha);
  est.sigma2 = t_hat * est.sigma2_minus + (1.0 - t_hat) * est.sigma2_plus;
  return est;
}

VarianceEstimate estimate_sigma2(const Dataset& data, const WeightedLossSpec& spec,
                                 const TestConfig& cfg, double t_hat) {
  const Index n = data.n();
  const SegmentBounds sb = segment_bounds(n, t_hat, cfg.h);

  const Dataset left = data.window(0, sb.count_minus);
  const Dataset right = data.window(sb.start_plus - 1, n - sb.start_plus + 1);

  const WeightedFit fit1 = fit_weighted_lasso(left, spec, select_lambda(left, cfg));
  const WeightedFit fit2 = fit_weighted_lasso(right, spec, select_lambda(right, cfg));

  const SegmentResiduals res = residuals(data, spec, fit1, fit2, t_hat, cfg.h);
  VarianceEstimate est = sigma2_from_residuals(res, spec.alpha, t_hat);
  est.converged = fit1.converged && fit2.converged;
  return est;
}

}  // namespace tailcp
