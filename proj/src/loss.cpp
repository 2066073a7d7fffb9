#include "tailcp/loss.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace tailcp {

double check_loss(double t, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("check_loss: tau must lie in (0, 1)");
  return t * (tau - (t <= 0.0 ? 1.0 : 0.0));
}

double weighted_loss(const Eigen::Ref<const Vector>& x, double y, const WeightedLossSpec& spec,
                     const Eigen::Ref<const Vector>& b, const Eigen::Ref<const Vector>& beta) {
  if (x.size() != beta.size()) throw std::invalid_argument("weighted_loss: x/beta size mismatch");
  if (b.size() != spec.K()) throw std::invalid_argument("weighted_loss: b must have K entries");
  const double fit = x.dot(beta);
  const double r = y - fit;
  double quant = 0.0;
  for (int k = 0; k < spec.K(); ++k) quant += check_loss(r - b[k], spec.taus[k]);
  quant *= (1.0 - spec.alpha) / spec.K();
  return quant + 0.5 * spec.alpha * r * r;
}

double score_multiplier(double residual_ls, const WeightedLossSpec& spec,
                        const Eigen::Ref<const Vector>& b) {
  if (b.size() != spec.K()) throw std::invalid_argument("score_multiplier: b must have K entries");
  double c = 0.0;
  for (int k = 0; k < spec.K(); ++k) {
    const double u = residual_ls - b[k];
    c += (u <= 0.0 ? 1.0 : 0.0) - spec.taus[k];
  }
  c *= (1.0 - spec.alpha) / spec.K();
  return c - spec.alpha * residual_ls;
}

Vector score(const Eigen::Ref<const Vector>& x, double y, const WeightedLossSpec& spec,
             const Eigen::Ref<const Vector>& b, const Eigen::Ref<const Vector>& beta) {
  if (x.size() != beta.size()) throw std::invalid_argument("score: x/beta size mismatch");
  return score_multiplier(y - x.dot(beta), spec, b) * x;
}

double s0_norm(const Eigen::Ref<const Vector>& v, int s0) {
  const Index p = v.size();
  if (s0 < 1 || s0 > p) throw std::invalid_argument("s0_norm: s0 out of range [1, p]");
  if (s0 == p) return v.norm();
  // Partial selection of the s0 largest magnitudes; no full sort needed.
  std::vector<double> a(p);
  for (Index j = 0; j < p; ++j) a[static_cast<std::size_t>(j)] = std::abs(v[j]);
  std::nth_element(a.begin(), a.begin() + (s0 - 1), a.end(), std::greater<double>());
  double ss = 0.0;
  for (int j = 0; j < s0; ++j) ss += a[static_cast<std::size_t>(j)] * a[static_cast<std::size_t>(j)];
  return std::sqrt(ss);
}

}  // namespace tailcp
