#include "tailcp/solver.hpp"

#include "tailcp/loss.hpp"
#include "tailcp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace tailcp {

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// Lower empirical tau-quantile of v: order statistic ceil(m*tau), any value
// in the minimizer set of sum_i rho_tau(v_i - b) works; this one is
// deterministic.
double empirical_quantile(const Vector& v, double tau) {
  const Index m = v.size();
  std::vector<double> tmp(v.data(), v.data() + m);
  Index idx = static_cast<Index>(std::ceil(tau * static_cast<double>(m))) - 1;
  idx = std::clamp<Index>(idx, 0, m - 1);
  std::nth_element(tmp.begin(), tmp.begin() + idx, tmp.end());
  return tmp[static_cast<std::size_t>(idx)];
}

// Exact prox of t -> c2 * rho_tau(t) + (rho/2)(t - v)^2.
double prox_check(double v, double tau, double c2, double rho) {
  const double eta = c2 / rho;
  if (v > eta * tau) return v - eta * tau;
  if (v < -eta * (1.0 - tau)) return v + eta * (1.0 - tau);
  return 0.0;
}

// One concrete joint subgradient selection at (b, beta). Check-loss
// subgradients are set-valued only for samples sitting on a kink; those free
// values are used to make each b_k stationary first (clamped into the kink
// interval), and the same selection then prices every beta coordinate. Any
// feasible selection upper-bounds the distance from 0 to the subdifferential,
// so the residual is a sound certificate: it never certifies a non-optimum.
struct SelectionKkt {
  Vector score_mult;   // c_i with d/d(beta) = sum_i c_i x_i
  Vector b_residual;   // per quantile level
};

SelectionKkt subgradient_selection(const Eigen::Ref<const Vector>& r_fit,
                                   const WeightedLossSpec& spec,
                                   const Eigen::Ref<const Vector>& b, double kink_eps) {
  const Index m = r_fit.size();
  const int K = spec.K();
  const double wq = (1.0 - spec.alpha) / (static_cast<double>(m) * K);
  const double wl = spec.alpha / static_cast<double>(m);

  SelectionKkt out;
  out.score_mult = Vector::Zero(m);
  out.b_residual = Vector::Zero(K);
  std::vector<Index> kinks;
  for (int k = 0; k < K; ++k) {
    const double tau = spec.taus[static_cast<std::size_t>(k)];
    kinks.clear();
    double fixed = 0.0;
    for (Index i = 0; i < m; ++i) {
      const double u = r_fit[i] - b[k];
      if (u < -kink_eps) {
        fixed += 1.0 - tau;
        out.score_mult[i] += wq * (1.0 - tau);
      } else if (u > kink_eps) {
        fixed += -tau;
        out.score_mult[i] += wq * (-tau);
      } else {
        kinks.push_back(i);
      }
    }
    if (kinks.empty()) {
      out.b_residual[k] = std::abs(fixed) * wq;
    } else {
      const double per = std::clamp(-fixed / static_cast<double>(kinks.size()), -tau, 1.0 - tau);
      for (Index i : kinks) out.score_mult[i] += wq * per;
      out.b_residual[k] =
          std::abs(fixed + per * static_cast<double>(kinks.size())) * wq;
    }
  }
  if (spec.alpha > 0.0)
    for (Index i = 0; i < m; ++i) out.score_mult[i] -= wl * r_fit[i];
  if (spec.alpha >= 1.0) out.b_residual.setZero();  // intercepts carry no loss
  return out;
}

}  // namespace

double window_objective(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                        const WeightedLossSpec& spec, const Eigen::Ref<const Vector>& b,
                        const Eigen::Ref<const Vector>& beta, double lambda) {
  const Index m = X.rows();
  const int K = spec.K();
  const Vector r_fit = y - X * beta;
  double quant = 0.0;
  for (Index i = 0; i < m; ++i)
    for (int k = 0; k < K; ++k)
      quant += check_loss(r_fit[i] - b[k], spec.taus[static_cast<std::size_t>(k)]);
  quant *= (1.0 - spec.alpha) / (static_cast<double>(m) * K);
  const double ls = 0.5 * spec.alpha / static_cast<double>(m) * r_fit.squaredNorm();
  return quant + ls + lambda * beta.lpNorm<1>();
}

double kkt_residual(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                    const WeightedLossSpec& spec, const Eigen::Ref<const Vector>& b,
                    const Eigen::Ref<const Vector>& beta, double lambda) {
  const Index p = X.cols();
  const Vector r_fit = y - X * beta;
  const double scale = std::max(1.0, y.lpNorm<Eigen::Infinity>());
  const SelectionKkt sel = subgradient_selection(r_fit, spec, b, 1e-10 * scale);
  const Vector grad = X.transpose() * sel.score_mult;

  double worst = sel.b_residual.lpNorm<Eigen::Infinity>();
  for (Index j = 0; j < p; ++j) {
    double res;
    if (beta[j] > 0.0)
      res = std::abs(grad[j] + lambda);
    else if (beta[j] < 0.0)
      res = std::abs(grad[j] - lambda);
    else
      res = std::max(0.0, std::abs(grad[j]) - lambda);
    worst = std::max(worst, res);
  }
  return worst;
}

namespace {

// Gaussian-smoothed warm start: proximal gradient on the objective with
// rho_tau replaced by its kernel-smoothed version. Used only to seed the
// exact solve; never returned as the final estimate.
void smoothed_warm_start(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                         const WeightedLossSpec& spec, double lambda, double bandwidth,
                         Vector& b, Vector& beta) {
  const Index m = X.rows();
  const int K = spec.K();
  const double h = bandwidth;
  const double wq = (1.0 - spec.alpha) / (static_cast<double>(m) * K);
  const double wl = spec.alpha / static_cast<double>(m);

  auto smooth_value = [&](const Vector& bb, const Vector& be, Vector& r_out) {
    r_out = y - X * be;
    double val = 0.0;
    for (Index i = 0; i < m; ++i) {
      for (int k = 0; k < K; ++k) {
        const double tau = spec.taus[static_cast<std::size_t>(k)];
        const double u = r_out[i] - bb[k];
        val += wq * (u * (tau - norm_cdf(-u / h)) + h * norm_pdf(u / h));
      }
      val += 0.5 * wl * r_out[i] * r_out[i];
    }
    return val;
  };

  Vector r_fit(m);
  double f_cur = smooth_value(b, beta, r_fit);
  double step = 1.0;
  for (int it = 0; it < 200; ++it) {
    // Gradient of the smooth part in (beta, b).
    Vector c(m);
    Vector gb = Vector::Zero(K);
    for (Index i = 0; i < m; ++i) {
      double acc = 0.0;
      for (int k = 0; k < K; ++k) {
        const double tau = spec.taus[static_cast<std::size_t>(k)];
        const double d = tau - norm_cdf(-(r_fit[i] - b[k]) / h);
        acc += d;
        gb[k] -= wq * d;
      }
      c[i] = -wq * acc - wl * r_fit[i];
    }
    const Vector gbeta = X.transpose() * c;

    bool accepted = false;
    for (int bt = 0; bt < 40 && !accepted; ++bt) {
      Vector beta_new(beta.size());
      for (Index j = 0; j < beta.size(); ++j)
        beta_new[j] = soft_threshold(beta[j] - step * gbeta[j], step * lambda);
      Vector b_new = b - step * gb;
      Vector r_new(m);
      const double f_new = smooth_value(b_new, beta_new, r_new);
      const double dd =
          (beta_new - beta).squaredNorm() + (b_new - b).squaredNorm();
      const double model = f_cur + gbeta.dot(beta_new - beta) + gb.dot(b_new - b) +
                           0.5 / step * dd;
      if (f_new <= model + 1e-12) {
        const double move = std::sqrt(dd);
        beta = std::move(beta_new);
        b = std::move(b_new);
        r_fit = std::move(r_new);
        f_cur = f_new;
        accepted = true;
        if (move < 1e-8) return;
      } else {
        step *= 0.5;
      }
    }
    if (!accepted) return;
    step *= 1.5;
  }
}

}  // namespace

WeightedFit fit_weighted_lasso(const Eigen::Ref<const Matrix>& X,
                               const Eigen::Ref<const Vector>& y, const WeightedLossSpec& spec,
                               double lambda, const SolverConfig& cfg, const WarmStart* warm) {
  const Index m = X.rows();
  const Index p = X.cols();
  const int K = spec.K();
  if (m < 1) throw std::invalid_argument("fit_weighted_lasso: empty window");
  if (m < K + 1) throw std::invalid_argument("fit_weighted_lasso: window shorter than K + 1");
  if (m != y.size()) throw std::invalid_argument("fit_weighted_lasso: X/y size mismatch");
  if (!(lambda >= 0.0)) throw std::invalid_argument("fit_weighted_lasso: lambda must be >= 0");

  const double scale = std::max(1.0, y.lpNorm<Eigen::Infinity>());
  const double kkt_tol = cfg.tol * scale;

  Vector beta = (warm != nullptr && warm->beta.size() == p) ? warm->beta : Vector::Zero(p);
  Vector r_fit = y - X * beta;
  Vector b(K);
  if (warm != nullptr && warm->b.size() == K) {
    b = warm->b;
  } else {
    for (int k = 0; k < K; ++k) b[k] = empirical_quantile(r_fit, spec.taus[static_cast<std::size_t>(k)]);
  }
  if (cfg.smoothing_bandwidth > 0.0) {
    smoothed_warm_start(X, y, spec, lambda, cfg.smoothing_bandwidth, b, beta);
    r_fit = y - X * beta;
  }

  const Matrix gram = X.transpose() * X;
  const Vector xty = X.transpose() * y;

  // Consensus on the full m x K matrix of quantile residuals
  // q_ik = y_i - b_k - x_i'beta, so the nonsmooth block is a fully separable
  // single-kink prox and (beta, b) share one smooth quadratic block.
  double rho = cfg.admm_rho;
  Matrix R(m, K);  // consensus copies of q_ik
  Matrix U = Matrix::Zero(m, K);
  Vector w = X * beta;  // maintained as X * beta
  for (Index i = 0; i < m; ++i)
    for (int k = 0; k < K; ++k) R(i, k) = y[i] - b[k] - w[i];
  Vector q = gram * beta;  // maintained as gram * beta

  WeightedFit best;
  best.b_hat = b;
  best.beta_hat = beta;
  best.lambda = lambda;
  best.objective = window_objective(X, y, spec, b, beta, lambda);

  auto track_best = [&](const Vector& bb, const Vector& be) {
    const double obj = window_objective(X, y, spec, bb, be, lambda);
    if (obj < best.objective) {
      best.objective = obj;
      best.b_hat = bb;
      best.beta_hat = be;
    }
  };

  const double c2 = (1.0 - spec.alpha) / (static_cast<double>(m) * K);
  const double dK = static_cast<double>(K);

  WeightedFit out;
  out.lambda = lambda;
  int iter = 0;
  Matrix R_prev = R;

  for (iter = 1; iter <= cfg.max_iter; ++iter) {
    // -- smooth block: coordinate descent over (b, beta) on
    //    lambda||beta||_1 + alpha/(2m)||y - X beta||^2
    //      + (rho/2) sum_ik (y_i - b_k - x_i'beta - R_ik + U_ik)^2
    const double kappa = spec.alpha / static_cast<double>(m) + rho * dK;
    // s_i = sum_k (y_i - R_ik + U_ik); constant within this block except for b
    Vector s = dK * y - (R - U).rowwise().sum();
    for (int pass = 0; pass < 40; ++pass) {
      double max_move = 0.0;
      // exact intercept updates: b_k = mean_i (y_i - x_i'beta - R_ik + U_ik)
      for (int k = 0; k < K; ++k) {
        const double bk =
            (y - w - R.col(k) + U.col(k)).sum() / static_cast<double>(m);
        max_move = std::max(max_move, std::abs(bk - b[k]));
        b[k] = bk;
      }
      const double b_sum = b.sum();
      // one CD sweep over beta
      for (Index j = 0; j < p; ++j) {
        const double gjj = gram(j, j);
        if (gjj <= 0.0) continue;
        // linear coefficient at beta_j = 0 keeping other coordinates fixed
        const double cj = spec.alpha / static_cast<double>(m) * xty[j] +
                          rho * (X.col(j).dot(s) - b_sum * X.col(j).sum());
        const double z = cj - kappa * (q[j] - gjj * beta[j]);
        const double bj = soft_threshold(z, lambda) / (kappa * gjj);
        const double delta = bj - beta[j];
        if (delta != 0.0) {
          q += delta * gram.col(j);
          w += delta * X.col(j);
          beta[j] = bj;
          max_move = std::max(max_move, std::abs(delta));
        }
      }
      if (max_move <= 1e-13 * scale) break;
    }
    r_fit = y - w;

    // -- prox block: elementwise exact check-loss prox
    for (Index i = 0; i < m; ++i) {
      const double base = r_fit[i];
      for (int k = 0; k < K; ++k) {
        const double v = base - b[k] + U(i, k);
        R(i, k) = prox_check(v, spec.taus[static_cast<std::size_t>(k)], c2, rho);
      }
    }

    // -- dual update for q_ik - R_ik = 0
    for (Index i = 0; i < m; ++i)
      for (int k = 0; k < K; ++k) U(i, k) += (r_fit[i] - b[k]) - R(i, k);

    track_best(b, beta);

    if (iter % 5 == 0 || iter == cfg.max_iter) {
      // Certify the polished candidate first: intercepts re-optimized on the
      // exact residuals, which lands them on true kinks and lets the
      // certificate fire before the consensus variable fully settles.
      Vector b_pol = b;
      if (spec.alpha < 1.0)
        for (int k = 0; k < K; ++k)
          b_pol[k] = empirical_quantile(r_fit, spec.taus[static_cast<std::size_t>(k)]);
      track_best(b_pol, beta);
      const double kkt_pol = kkt_residual(X, y, spec, b_pol, beta, lambda);
      if (kkt_pol <= kkt_tol) {
        out.b_hat = b_pol;
        out.beta_hat = beta;
        out.kkt_residual = kkt_pol;
        out.objective = window_objective(X, y, spec, b_pol, beta, lambda);
        out.iterations = iter;
        out.converged = true;
        return out;
      }
      const double kkt = kkt_residual(X, y, spec, b, beta, lambda);
      if (kkt <= kkt_tol) {
        out.b_hat = b;
        out.beta_hat = beta;
        out.kkt_residual = kkt;
        out.objective = window_objective(X, y, spec, b, beta, lambda);
        out.iterations = iter;
        out.converged = true;
        return out;
      }
      // residual balancing
      const double primal = (r - r_fit).norm();
      const double dual = rho * (X.transpose() * (r - r_prev)).norm();
      if (primal > 10.0 * dual && rho < 1e6) {
        rho *= 2.0;
        u *= 0.5;
      } else if (dual > 10.0 * primal && rho > 1e-6) {
        rho *= 0.5;
        u *= 2.0;
      }
    }
    r_prev = r;
  }

  out.b_hat = best.b_hat;
  out.beta_hat = best.beta_hat;
  out.objective = best.objective;
  out.kkt_residual = kkt_residual(X, y, spec, best.b_hat, best.beta_hat, lambda);
  out.iterations = cfg.max_iter;
  out.converged = out.kkt_residual <= kkt_tol;
  return out;
}

WeightedFit fit_weighted_lasso(const Dataset& data, const WeightedLossSpec& spec, double lambda,
                               const SolverConfig& cfg, const WarmStart* warm) {
  return fit_weighted_lasso(data.X, data.y, spec, lambda, cfg, warm);
}

double lambda_max(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                  const WeightedLossSpec& spec) {
  const int K = spec.K();
  Vector b(K);
  for (int k = 0; k < K; ++k) b[k] = empirical_quantile(y, spec.taus[static_cast<std::size_t>(k)]);
  // Score at (b(beta=0), 0) with the kink samples' set-valued subgradients
  // pinned by the intercept stationarity conditions.
  const double scale = std::max(1.0, y.lpNorm<Eigen::Infinity>());
  const SelectionKkt sel = subgradient_selection(y, spec, b, 1e-10 * scale);
  return (X.transpose() * sel.score_mult).lpNorm<Eigen::Infinity>();
}

double select_lambda(Index m, Index p, const TestConfig& cfg) {
  if (m < 2) throw std::invalid_argument("select_lambda: window length must be >= 2");
  const double dm = static_cast<double>(m);
  return cfg.lambda_scale * std::sqrt(std::log(static_cast<double>(p) * dm) / dm);
}

double select_lambda(const Dataset& window, const TestConfig& cfg) {
  return select_lambda(window.n(), window.p(), cfg);
}

double select_lambda_cv(const Dataset& window, const WeightedLossSpec& spec,
                        const TestConfig& cfg, int folds) {
  const Index m = window.n();
  const Index p = window.p();
  if (folds < 2) throw std::invalid_argument("select_lambda_cv: need at least 2 folds");
  if (m < folds + 1) throw std::invalid_argument("select_lambda_cv: window too short");
  const std::vector<double> multipliers = {0.25, 0.5, 1.0, 2.0, 4.0};

  double best_c = 1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (double mult : multipliers) {
    double cv = 0.0;
    for (int f = 0; f < folds; ++f) {
      std::vector<Index> train, test;
      for (Index i = 0; i < m; ++i)
        ((i % folds) == f ? test : train).push_back(i);
      Matrix Xtr(static_cast<Index>(train.size()), p);
      Vector ytr(static_cast<Index>(train.size()));
      for (std::size_t t = 0; t < train.size(); ++t) {
        Xtr.row(static_cast<Index>(t)) = window.X.row(train[t]);
        ytr[static_cast<Index>(t)] = window.y[train[t]];
      }
      TestConfig local = cfg;
      local.lambda_scale = mult * cfg.lambda_scale;
      const double lam = select_lambda(Xtr.rows(), p, local);
      const WeightedFit fit = fit_weighted_lasso(Xtr, ytr, spec, lam);
      for (Index i : test)
        cv += weighted_loss(window.X.row(i).transpose(), window.y[i], spec, fit.b_hat,
                            fit.beta_hat);
    }
    if (cv < best_loss) {
      best_loss = cv;
      best_c = mult;
    }
  }
  TestConfig chosen = cfg;
  chosen.lambda_scale = best_c * cfg.lambda_scale;
  return select_lambda(m, p, chosen);
}

}  // namespace tailcp
