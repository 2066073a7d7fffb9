#pragma once

#include "tailcp/rng.hpp"
#include "tailcp/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace tailcp {

struct CovarianceSpec {
  enum class Kind { identity, banded } kind = Kind::banded;
  double rho = 0.5;
  int bandwidth = 10;

  static CovarianceSpec identity() { return {Kind::identity, 0.0, 0}; }
  static CovarianceSpec banded(double rho, int bandwidth) {
    return {Kind::banded, rho, bandwidth};
  }

  /// Dense p x p covariance matrix.
  Matrix materialize(Index p) const;
};

struct ErrorDist {
  enum class Kind { normal, student_t, laplace, cauchy } kind = Kind::normal;
  double param = 1.0;  // normal: sd, student_t: dof, laplace: scale, cauchy: scale

  static ErrorDist normal(double sd) { return {Kind::normal, sd}; }
  static ErrorDist student_t(double dof) { return {Kind::student_t, dof}; }
  static ErrorDist laplace(double scale) { return {Kind::laplace, scale}; }
  static ErrorDist cauchy(double scale = 1.0) { return {Kind::cauchy, scale}; }

  double density(double x) const;
  double quantile(double tau) const;
  double variance() const;  // +inf when undefined
  bool finite_variance() const;
  /// E[eps * 1{eps <= b}]; closed form for normal and Laplace, adaptive
  /// quadrature for Student's t (relative tolerance 1e-8).
  double lower_partial_mean(double b) const;
  /// Inverse-CDF draw from one uniform.
  double sample(double u) const;

  std::string name() const;
};

/// One synthetic regression scenario. Empty breakpoints = homogeneous data;
/// otherwise betas holds one coefficient vector per segment.
struct ScenarioSpec {
  Index n = 200;
  Index p = 50;
  CovarianceSpec cov;
  ErrorDist error;
  std::vector<double> breakpoints;  // strictly increasing, in (0, 1)
  std::vector<Vector> betas;        // breakpoints.size() + 1 entries
  std::uint64_t seed = 1;

  void validate() const;
};

/// Sparse coefficient vector: `sparsity` leading coordinates set to
/// `magnitude`, rest zero.
Vector sparse_beta(Index p, int sparsity, double magnitude);

Dataset generate(const ScenarioSpec& spec, RngStream& rng);
Dataset generate(const ScenarioSpec& spec);  // stream derived from spec.seed

/// Theoretical SNR(alpha, tau~) for the given error law:
///   [(1-alpha) K^-1 sum_k f(b_k) + alpha] / sigma(alpha, tau~).
/// Throws for alpha > 0 with an infinite-variance law.
double snr(double alpha, const std::vector<double>& taus, const ErrorDist& err);

struct SnrCurve {
  std::vector<double> alphas;
  std::vector<double> values;
  std::string error_name;
};

SnrCurve snr_curve(const std::vector<double>& alphas, const std::vector<double>& taus,
                   const ErrorDist& err);

/// Oracle signal vector D: D_j = SNR * |t1 (1-t1) (Sigma (beta1 - beta2))_j|
/// on the changed support, 0 elsewhere. Requires a single-change scenario.
Vector signal_vector(const ScenarioSpec& spec, double alpha, const std::vector<double>& taus);

/// Scaled Hausdorff distance between two sets of relative locations.
/// Empty vs nonempty is 1.0; empty vs empty is 0.
double scaled_hausdorff(const std::vector<double>& a, const std::vector<double>& b);

// ---------------------------------------------------------------------------
// Monte-Carlo experiment harness

enum class ExperimentKind { size, power, estimation, multi };

ExperimentKind experiment_kind_from_string(const std::string& s);
std::string to_string(ExperimentKind k);

struct ExperimentCell {
  std::string label;
  ScenarioSpec scenario;
  TestConfig cfg;
  std::vector<double> taus = {0.5};
  // multi-change settings (kind == multi)
  int V = 50;
  double v0 = 0.0;  // 0 = 30/n
  double v1 = 0.0;  // 0 = 2*v0
};

struct CellResult {
  std::string label;
  ExperimentKind kind = ExperimentKind::size;
  int reps = 0;
  int failures = 0;
  double adaptive_rate = 0.0;                    // rejection rate (size/power)
  std::map<double, double> individual_rates;     // per alpha
  double median_abs_err = 0.0, iqr_abs_err = 0.0;  // estimation
  double median_hausdorff = 0.0;                 // multi
  double empty_rate = 0.0;                       // multi: fraction with empty set
};

/// Runs every cell for `reps` replicates. Per-replicate streams derive from
/// (cell.cfg.seed, cell index, replicate), so results do not depend on the
/// schedule. Replicate errors are counted, not fatal.
std::vector<CellResult> run_experiment(ExperimentKind kind,
                                       const std::vector<ExperimentCell>& cells, int reps,
                                       int threads);

std::string cell_results_to_csv(const std::vector<CellResult>& results);

}  // namespace tailcp
