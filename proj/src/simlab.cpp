#include "tailcp/simlab.hpp"

#include "tailcp/bootstrap.hpp"
#include "tailcp/parallel.hpp"
#include "tailcp/stats.hpp"
#include "tailcp/wbs.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tailcp {

Matrix CovarianceSpec::materialize(Index p) const {
  Matrix sigma = Matrix::Identity(p, p);
  if (kind == Kind::banded) {
    for (Index j = 0; j < p; ++j)
      for (Index k = std::max<Index>(0, j - bandwidth); k <= std::min<Index>(p - 1, j + bandwidth);
           ++k)
        sigma(j, k) = std::pow(rho, static_cast<double>(std::abs(j - k)));
  }
  return sigma;
}

double ErrorDist::density(double x) const {
  switch (kind) {
    case Kind::normal:
      return norm_pdf(x / param) / param;
    case Kind::student_t:
      return boost::math::pdf(boost::math::students_t_distribution<double>(param), x);
    case Kind::laplace:
      return std::exp(-std::abs(x) / param) / (2.0 * param);
    case Kind::cauchy: {
      const double z = x / param;
      return 1.0 / (M_PI * param * (1.0 + z * z));
    }
  }
  return 0.0;
}

double ErrorDist::quantile(double tau) const {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("ErrorDist::quantile: tau in (0,1)");
  switch (kind) {
    case Kind::normal:
      return param * norm_quantile(tau);
    case Kind::student_t:
      return boost::math::quantile(boost::math::students_t_distribution<double>(param), tau);
    case Kind::laplace:
      return tau < 0.5 ? param * std::log(2.0 * tau) : -param * std::log(2.0 * (1.0 - tau));
    case Kind::cauchy:
      return param * std::tan(M_PI * (tau - 0.5));
  }
  return 0.0;
}

double ErrorDist::variance() const {
  switch (kind) {
    case Kind::normal:
      return param * param;
    case Kind::student_t:
      return param > 2.0 ? param / (param - 2.0) : std::numeric_limits<double>::infinity();
    case Kind::laplace:
      return 2.0 * param * param;
    case Kind::cauchy:
      return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

bool ErrorDist::finite_variance() const { return std::isfinite(variance()); }

double ErrorDist::lower_partial_mean(double b) const {
  switch (kind) {
    case Kind::normal:
      return -param * norm_pdf(b / param);
    case Kind::laplace: {
      if (b <= 0.0) return 0.5 * std::exp(b / param) * (b - param);
      return 0.5 * std::exp(-b / param) * (-b - param);
    }
    case Kind::student_t: {
      const boost::math::students_t_distribution<double> dist(param);
      auto integrand = [&](double x) { return x * boost::math::pdf(dist, x); };
      double err = 0.0;
      const double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
          integrand, -std::numeric_limits<double>::infinity(), b, 12, 1e-8, &err);
      return val;
    }
    case Kind::cauchy:
      throw std::domain_error("lower_partial_mean: undefined for Cauchy errors");
  }
  return 0.0;
}

double ErrorDist::sample(double u) const {
  switch (kind) {
    case Kind::normal:
      return param * norm_quantile(u);
    case Kind::student_t:
    case Kind::laplace:
    case Kind::cauchy:
      return quantile(u);
  }
  return 0.0;
}

std::string ErrorDist::name() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::normal:
      os << "normal(sd=" << param << ")";
      break;
    case Kind::student_t:
      os << "student_t(v=" << param << ")";
      break;
    case Kind::laplace:
      os << "laplace(scale=" << param << ")";
      break;
    case Kind::cauchy:
      os << "cauchy(scale=" << param << ")";
      break;
  }
  return os.str();
}

void ScenarioSpec::validate() const {
  if (n < 2 || p < 1) throw std::invalid_argument("ScenarioSpec: need n >= 2, p >= 1");
  if (betas.size() != breakpoints.size() + 1)
    throw std::invalid_argument("ScenarioSpec: betas must have breakpoints.size() + 1 entries");
  double prev = 0.0;
  for (double t : breakpoints) {
    if (!(t > prev && t < 1.0))
      throw std::invalid_argument("ScenarioSpec: breakpoints must be strictly increasing in (0,1)");
    prev = t;
  }
  for (const Vector& beta : betas)
    if (beta.size() != p) throw std::invalid_argument("ScenarioSpec: beta length != p");
  if (error.kind == ErrorDist::Kind::normal && error.param < 0.0)
    throw std::invalid_argument("ScenarioSpec: negative error scale");
}

Vector sparse_beta(Index p, int sparsity, double magnitude) {
  if (sparsity < 0 || sparsity > p) throw std::invalid_argument("sparse_beta: bad sparsity");
  Vector beta = Vector::Zero(p);
  for (int j = 0; j < sparsity; ++j) beta[j] = magnitude;
  return beta;
}

Dataset generate(const ScenarioSpec& spec, RngStream& rng) {
  spec.validate();
  const Index n = spec.n;
  const Index p = spec.p;

  const Matrix sigma = spec.cov.materialize(p);
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("generate: covariance matrix is not positive definite");
  const Matrix L = llt.matrixL();

  Matrix X(n, p);
  Vector z(p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) z[j] = rng.normal();
    X.row(i) = (L * z).transpose();
  }

  // Segment index per row, then responses with fresh error draws.
  std::vector<Index> change_rows;
  change_rows.reserve(spec.breakpoints.size());
  for (double t : spec.breakpoints)
    change_rows.push_back(static_cast<Index>(std::floor(static_cast<double>(n) * t + 1e-9)));

  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    std::size_t seg = 0;
    while (seg < change_rows.size() && i + 1 > change_rows[seg]) ++seg;
    const double eps = (spec.error.kind == ErrorDist::Kind::normal)
                           ? spec.error.param * rng.normal()
                           : spec.error.sample(rng.uniform());
    y[i] = X.row(i).dot(spec.betas[seg]) + eps;
  }
  return Dataset(std::move(X), std::move(y));
}

Dataset generate(const ScenarioSpec& spec) {
  RngStream rng(spec.seed, {static_cast<std::uint64_t>(StreamPurpose::data)});
  return generate(spec, rng);
}

double snr(double alpha, const std::vector<double>& taus, const ErrorDist& err) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("snr: alpha in [0,1]");
  if (taus.empty()) throw std::invalid_argument("snr: need at least one tau");
  const int K = static_cast<int>(taus.size());

  double mean_density = 0.0;
  for (double tau : taus) mean_density += err.density(err.quantile(tau));
  mean_density /= K;

  double var_e = 0.0;
  for (double t1 : taus)
    for (double t2 : taus) var_e += std::min(t1, t2) - t1 * t2;
  var_e /= static_cast<double>(K) * K;

  double sigma2;
  if (alpha > 0.0) {
    if (!err.finite_variance())
      throw std::domain_error("snr: undefined for alpha > 0 with " + err.name() +
                              "; use alpha = 0");
    double cov = 0.0;
    for (double tau : taus) cov += err.lower_partial_mean(err.quantile(tau));
    cov /= K;
    sigma2 = (1.0 - alpha) * (1.0 - alpha) * var_e + alpha * alpha * err.variance() -
             2.0 * alpha * (1.0 - alpha) * cov;
  } else {
    sigma2 = var_e;
  }
  return ((1.0 - alpha) * mean_density + alpha) / std::sqrt(sigma2);
}

SnrCurve snr_curve(const std::vector<double>& alphas, const std::vector<double>& taus,
                   const ErrorDist& err) {
  SnrCurve curve;
  curve.alphas = alphas;
  curve.error_name = err.name();
  curve.values.reserve(alphas.size());
  for (double a : alphas) curve.values.push_back(snr(a, taus, err));
  return curve;
}

Vector signal_vector(const ScenarioSpec& spec, double alpha, const std::vector<double>& taus) {
  spec.validate();
  if (spec.breakpoints.size() != 1)
    throw std::invalid_argument("signal_vector: requires a single-change scenario");
  const double t1 = spec.breakpoints.front();
  const Vector delta = spec.betas[0] - spec.betas[1];
  const double ratio = snr(alpha, taus, spec.error);

  const Index p = spec.p;
  Vector sigma_delta = Vector::Zero(p);
  if (spec.cov.kind == CovarianceSpec::Kind::identity) {
    sigma_delta = delta;
  } else {
    const int bw = spec.cov.bandwidth;
    for (Index j = 0; j < p; ++j) {
      double acc = 0.0;
      for (Index k = std::max<Index>(0, j - bw); k <= std::min<Index>(p - 1, j + bw); ++k)
        acc += std::pow(spec.cov.rho, static_cast<double>(std::abs(j - k))) * delta[k];
      sigma_delta[j] = acc;
    }
  }

  Vector d = Vector::Zero(p);
  for (Index j = 0; j < p; ++j)
    if (delta[j] != 0.0) d[j] = ratio * std::abs(t1 * (1.0 - t1) * sigma_delta[j]);
  return d;
}

double scaled_hausdorff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return 1.0;
  auto directed = [](const std::vector<double>& from, const std::vector<double>& to) {
    double worst = 0.0;
    for (double x : from) {
      double best = std::numeric_limits<double>::infinity();
      for (double y : to) best = std::min(best, std::abs(x - y));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "size") return ExperimentKind::size;
  if (s == "power") return ExperimentKind::power;
  if (s == "estimation") return ExperimentKind::estimation;
  if (s == "multi") return ExperimentKind::multi;
  throw std::invalid_argument("unknown experiment kind: " + s);
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::size:
      return "size";
    case ExperimentKind::power:
      return "power";
    case ExperimentKind::estimation:
      return "estimation";
    case ExperimentKind::multi:
      return "multi";
  }
  return "?";
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return (m % 2 == 1) ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

double quantile_of(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

struct RepOutcome {
  bool failed = false;
  bool adaptive_reject = false;
  std::map<double, bool> individual_reject;
  double abs_err = 0.0;
  double hausdorff = 0.0;
  bool empty_set = false;
};

}  // namespace

std::vector<CellResult> run_experiment(ExperimentKind kind,
                                       const std::vector<ExperimentCell>& cells, int reps,
                                       int threads) {
  if (reps < 1) throw std::invalid_argument("run_experiment: reps must be >= 1");
  std::vector<CellResult> out;
  out.reserve(cells.size());

  for (std::size_t c = 0; c < cells.size(); ++c) {
    const ExperimentCell& cell = cells[c];
    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(reps));

    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
      RepOutcome& oc = outcomes[r];
      try {
        RngStream stream(cell.cfg.seed, {static_cast<std::uint64_t>(StreamPurpose::experiment),
                                         static_cast<std::uint64_t>(c),
                                         static_cast<std::uint64_t>(r)});
        ScenarioSpec scen = cell.scenario;
        Dataset data = generate(scen, stream);
        TestConfig cfg = cell.cfg;
        cfg.threads = 1;  // parallelism lives at the replicate level
        cfg.seed = stream.next_u64();

        if (kind == ExperimentKind::multi) {
          const double v0 = cell.v0 > 0.0 ? cell.v0
                                          : 30.0 / static_cast<double>(scen.n);
          const double v1 = cell.v1 > 0.0 ? cell.v1 : 2.0 * v0;
          RngStream irng(cfg.seed, {static_cast<std::uint64_t>(StreamPurpose::intervals)});
          const IntervalSet set = generate_intervals(cfg, cell.V, v0, irng, v1);
          const MultiCpReport rep = wbs_detect(data, cell.taus, cfg, set);
          oc.hausdorff = scaled_hausdorff(rep.changepoints, scen.breakpoints);
          oc.empty_set = rep.changepoints.empty();
        } else {
          const AdaptiveTestResult res = run_adaptive_test(data, cell.taus, cfg);
          oc.adaptive_reject = res.reject;
          for (const auto& ind : res.individual)
            oc.individual_reject[ind.alpha] = ind.reject;
          if (kind == ExperimentKind::estimation && !scen.breakpoints.empty())
            oc.abs_err = std::abs(res.t_hat_ad.t_hat - scen.breakpoints.front());
        }
      } catch (const std::exception&) {
        oc.failed = true;
      }
    });

    CellResult res;
    res.label = cell.label;
    res.kind = kind;
    res.reps = reps;
    std::vector<double> abs_errs, hausdorffs;
    int ok = 0, adaptive_hits = 0, empties = 0;
    std::map<double, int> ind_hits;
    for (const RepOutcome& oc : outcomes) {
      if (oc.failed) {
        ++res.failures;
        continue;
      }
      ++ok;
      if (oc.adaptive_reject) ++adaptive_hits;
      for (const auto& [a, rej] : oc.individual_reject)
        if (rej) ++ind_hits[a];
      abs_errs.push_back(oc.abs_err);
      hausdorffs.push_back(oc.hausdorff);
      if (oc.empty_set) ++empties;
    }
    if (ok > 0) {
      res.adaptive_rate = static_cast<double>(adaptive_hits) / ok;
      for (double a : cell.cfg.alpha_set)
        res.individual_rates[a] = static_cast<double>(ind_hits[a]) / ok;
      res.median_abs_err = median_of(abs_errs);
      res.iqr_abs_err = quantile_of(abs_errs, 0.75) - quantile_of(abs_errs, 0.25);
      res.median_hausdorff = median_of(hausdorffs);
      res.empty_rate = static_cast<double>(empties) / ok;
    }
    out.push_back(std::move(res));
  }
  return out;
}

std::string cell_results_to_csv(const std::vector<CellResult>& results) {
  std::ostringstream os;
  os << "label,kind,reps,failures,adaptive_rate,median_abs_err,iqr_abs_err,"
        "median_hausdorff,empty_rate";
  // union of alphas across cells, sorted
  std::vector<double> alphas;
  for (const auto& r : results)
    for (const auto& [a, v] : r.individual_rates) {
      (void)v;
      if (std::find(alphas.begin(), alphas.end(), a) == alphas.end()) alphas.push_back(a);
    }
  std::sort(alphas.begin(), alphas.end());
  for (double a : alphas) os << ",rate_alpha_" << a;
  os << "\n";
  for (const auto& r : results) {
    os << r.label << ',' << to_string(r.kind) << ',' << r.reps << ',' << r.failures << ','
       << r.adaptive_rate << ',' << r.median_abs_err << ',' << r.iqr_abs_err << ','
       << r.median_hausdorff << ',' << r.empty_rate;
    for (double a : alphas) {
      auto it = r.individual_rates.find(a);
      os << ',';
      if (it != r.individual_rates.end()) os << it->second;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace tailcp
