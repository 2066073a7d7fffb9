#include "tailcp/bootstrap.hpp"

#include "tailcp/loss.hpp"
#include "tailcp/parallel.hpp"
#include "tailcp/rng.hpp"
#include "tailcp/stats.hpp"

#include <algorithm>
#include <cmath>

namespace tailcp {

double bootstrap_variance_v2(const WeightedLossSpec& spec) {
  const int K = spec.K();
  const double a = spec.alpha;
  double var_e = 0.0;
  for (int k1 = 0; k1 < K; ++k1)
    for (int k2 = 0; k2 < K; ++k2) {
      const double t1 = spec.taus[static_cast<std::size_t>(k1)];
      const double t2 = spec.taus[static_cast<std::size_t>(k2)];
      var_e += std::min(t1, t2) - t1 * t2;
    }
  var_e /= static_cast<double>(K) * K;
  double cov = 0.0;
  for (int k = 0; k < K; ++k)
    cov += -norm_pdf(norm_quantile(spec.taus[static_cast<std::size_t>(k)]));
  cov /= static_cast<double>(K);
  return (1.0 - a) * (1.0 - a) * var_e + a * a - 2.0 * a * (1.0 - a) * cov;
}

Vector bootstrap_statistic_multi(const Eigen::Ref<const Matrix>& X,
                                 const std::vector<double>& taus,
                                 const std::vector<double>& alphas, const TestConfig& cfg,
                                 std::uint64_t rep_index, std::uint64_t stream_tag) {
  const Index n = X.rows();
  const Index p = X.cols();
  const int K = static_cast<int>(taus.size());
  const int s0 = cfg.effective_s0(p);
  const auto [lo, hi] = trimmed_grid_bounds(n, cfg.q0);
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  std::vector<double> thresholds(taus.size());
  for (std::size_t k = 0; k < taus.size(); ++k) thresholds[k] = norm_quantile(taus[k]);

  // One multiplier draw per replicate, shared across every alpha.
  RngStream rng(cfg.seed, {static_cast<std::uint64_t>(StreamPurpose::bootstrap), stream_tag,
                           rep_index});
  Vector e(n), e_tau(n);
  for (Index i = 0; i < n; ++i) {
    e[i] = rng.normal();
    double acc = 0.0;
    for (int k = 0; k < K; ++k)
      acc += (e[i] <= thresholds[static_cast<std::size_t>(k)] ? 1.0 : 0.0) -
             taus[static_cast<std::size_t>(k)];
    e_tau[i] = acc / K;
  }

  Vector out(static_cast<Index>(alphas.size()));
  Vector prefix(p), total(p), row(p);
  for (std::size_t a_idx = 0; a_idx < alphas.size(); ++a_idx) {
    const double a = alphas[a_idx];
    const double v = std::sqrt(bootstrap_variance_v2(WeightedLossSpec(a, taus)));
    total.setZero();
    for (Index i = 0; i < n; ++i)
      total += ((1.0 - a) * e_tau[i] - a * e[i]) * X.row(i).transpose();
    prefix.setZero();
    double best = 0.0;
    for (Index k = 1; k <= hi; ++k) {
      prefix += ((1.0 - a) * e_tau[k - 1] - a * e[k - 1]) * X.row(k - 1).transpose();
      if (k < lo) continue;
      const double dk = static_cast<double>(k);
      row = prefix - (dk / static_cast<double>(n)) * total;
      const double val = (s0_norm(row, s0) / sqrt_n) / v;
      best = std::max(best, val);
    }
    out[static_cast<Index>(a_idx)] = best;
  }
  return out;
}

double bootstrap_statistic(const Eigen::Ref<const Matrix>& X, const WeightedLossSpec& spec,
                           const TestConfig& cfg, std::uint64_t rep_index,
                           std::uint64_t stream_tag) {
  const Vector vals =
      bootstrap_statistic_multi(X, spec.taus, {spec.alpha}, cfg, rep_index, stream_tag);
  return vals[0];
}

namespace {

// Shared machinery: everything of the individual test except the bootstrap
// replicates (those are computed jointly across alpha by the adaptive path).
IndividualTestResult individual_core(const Dataset& data, const WeightedLossSpec& spec,
                                     const TestConfig& cfg) {
  IndividualTestResult res;
  res.alpha = spec.alpha;

  const double lam = select_lambda(data, cfg);
  const WeightedFit fit = fit_weighted_lasso(data, spec, lam);
  res.solver_converged = fit.converged;

  res.t_hat = estimate_changepoint(data, spec, cfg, fit);
  res.sigma2 = estimate_sigma2(data, spec, cfg, res.t_hat.t_hat);
  res.solver_converged = res.solver_converged && res.sigma2.converged;

  double s2 = res.sigma2.sigma2;
  if (s2 < kSigma2Floor) {
    s2 = kSigma2Floor;
    res.variance_floored = true;
  }
  const Matrix series = score_series(data, spec, fit);
  const CusumProcess proc = cusum(series, std::sqrt(s2), cfg.q0, spec.alpha);
  const auto [stat, k_star] = max_statistic(proc, cfg.effective_s0(data.p()));
  (void)k_star;
  res.T = stat;
  return res;
}

void finalize_pvalue(IndividualTestResult& res, const TestConfig& cfg) {
  const Index B = res.bootstrap_samples.size();
  Index count = 0;
  for (Index b = 0; b < B; ++b)
    if (res.bootstrap_samples[b] > res.T) ++count;
  res.p_hat = static_cast<double>(count) / static_cast<double>(B + 1);
  res.reject = res.p_hat <= cfg.gamma;
}

}  // namespace

IndividualTestResult run_individual_test(const Dataset& data, const WeightedLossSpec& spec,
                                         const TestConfig& cfg, std::uint64_t stream_tag) {
  cfg.validate();
  IndividualTestResult res = individual_core(data, spec, cfg);
  res.bootstrap_samples.resize(cfg.B);
  parallel_for(static_cast<std::size_t>(cfg.B), cfg.threads, [&](std::size_t b) {
    res.bootstrap_samples[static_cast<Index>(b)] =
        bootstrap_statistic(data.X, spec, cfg, static_cast<std::uint64_t>(b) + 1, stream_tag);
  });
  finalize_pvalue(res, cfg);
  return res;
}

AdaptiveTestResult adaptive_pvalue(std::vector<IndividualTestResult> individual,
                                   const TestConfig& cfg) {
  if (individual.empty()) throw std::invalid_argument("adaptive_pvalue: no individual results");
  const Index B = individual.front().bootstrap_samples.size();
  if (B < 1) throw std::invalid_argument("adaptive_pvalue: B must be >= 1");
  for (const auto& r : individual)
    if (r.bootstrap_samples.size() != B)
      throw std::invalid_argument("adaptive_pvalue: mismatched replicate counts");

  std::sort(individual.begin(), individual.end(),
            [](const IndividualTestResult& a, const IndividualTestResult& b) {
              return a.alpha < b.alpha;
            });

  AdaptiveTestResult out;
  out.T_ad = individual.front().p_hat;
  std::size_t star = 0;
  for (std::size_t i = 1; i < individual.size(); ++i) {
    if (individual[i].p_hat < out.T_ad) {
      out.T_ad = individual[i].p_hat;
      star = i;
    }
  }
  out.alpha_star = individual[star].alpha;
  out.t_hat_ad = individual[star].t_hat;
  out.t_hat_ad.alpha_used = out.alpha_star;

  // Leave-one-out pseudo p-values within the same B replicates: for each b,
  // P^b_alpha = #{b' != b : T^{b'} > T^b} / B, and T_ad^b = min_alpha P^b.
  const std::size_t A = individual.size();
  std::vector<std::vector<double>> sorted(A);
  for (std::size_t a = 0; a < A; ++a) {
    const Vector& s = individual[a].bootstrap_samples;
    sorted[a].assign(s.data(), s.data() + s.size());
    std::sort(sorted[a].begin(), sorted[a].end());
  }
  Index count_below = 0;
  for (Index b = 0; b < B; ++b) {
    double t_ad_b = 2.0;  // pseudo p-values live in [0, 1]
    for (std::size_t a = 0; a < A; ++a) {
      const double tb = individual[a].bootstrap_samples[b];
      const auto it = std::upper_bound(sorted[a].begin(), sorted[a].end(), tb);
      const double greater = static_cast<double>(sorted[a].end() - it);
      t_ad_b = std::min(t_ad_b, greater / static_cast<double>(B));
    }
    if (t_ad_b < out.T_ad) ++count_below;
  }
  out.p_ad = static_cast<double>(count_below) / static_cast<double>(B + 1);
  out.reject = out.p_ad <= cfg.gamma;
  out.individual = std::move(individual);
  return out;
}

AdaptiveTestResult run_adaptive_test(const Dataset& data, const std::vector<double>& taus,
                                     const TestConfig& cfg, std::uint64_t stream_tag) {
  cfg.validate();
  std::vector<double> alphas = cfg.alpha_set;
  std::sort(alphas.begin(), alphas.end());
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
  const std::size_t A = alphas.size();

  std::vector<IndividualTestResult> results(A);
  parallel_for(A, cfg.threads, [&](std::size_t a) {
    results[a] = individual_core(data, WeightedLossSpec(alphas[a], taus), cfg);
  });

  // Bootstrap replicates: one multiplier draw per replicate, reused by all
  // alpha values within it.
  Matrix samples(static_cast<Index>(A), cfg.B);
  parallel_for(static_cast<std::size_t>(cfg.B), cfg.threads, [&](std::size_t b) {
    const Vector vals = bootstrap_statistic_multi(data.X, taus, alphas, cfg,
                                                  static_cast<std::uint64_t>(b) + 1, stream_tag);
    samples.col(static_cast<Index>(b)) = vals;
  });
  for (std::size_t a = 0; a < A; ++a) {
    results[a].bootstrap_samples = samples.row(static_cast<Index>(a)).transpose();
    finalize_pvalue(results[a], cfg);
  }
  return adaptive_pvalue(std::move(results), cfg);
}

}  // namespace tailcp
