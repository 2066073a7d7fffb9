#pragma once

#include "tailcp/bootstrap.hpp"
#include "tailcp/rng.hpp"
#include "tailcp/types.hpp"

#include <string>
#include <vector>

namespace tailcp {

/// Random intervals on [q0, 1-q0], drawn once and reused across the whole
/// recursion.
struct IntervalSet {
  std::vector<std::pair<double, double>> intervals;  // (s, e), s < e
  int V = 0;
  double v0 = 0.0;  // minimum interval length
  double v1 = 0.0;  // minimum recursion span
};

/// Uniform endpoints, intervals shorter than v0 redrawn; throws when v0
/// cannot be satisfied (v0 > 1 - 2 q0, or the attempt cap of 100 V is hit).
/// v1 defaults to 2 v0 when not given.
IntervalSet generate_intervals(const TestConfig& cfg, int V, double v0, RngStream& rng,
                               double v1 = 0.0);

/// Cached per-interval outcome of the adaptive test on the interval's rows.
struct IntervalEvaluation {
  double s = 0.0, e = 0.0;
  double p_ad = 1.0;
  double t_hat_abs = 0.0;  // change-point estimate mapped to [s, e]
  bool usable = false;
  std::string error;  // populated when the interval's test failed
};

/// Runs the adaptive test once per interval (Algorithm step 1); recursion
/// afterwards only filters and compares cached values.
std::vector<IntervalEvaluation> evaluate_intervals(const Dataset& data,
                                                   const std::vector<double>& taus,
                                                   const TestConfig& cfg,
                                                   const IntervalSet& intervals);

struct WbsNode {
  double S = 0.0, E = 0.0;
  double p_bar = 1.0;  // min cached p over usable contained intervals
  int nu_star = -1;
  int depth = 0;
  enum class Decision { span_too_short, no_interval, accept_null, split } decision =
      Decision::accept_null;
};

struct MultiCpReport {
  std::vector<double> changepoints;  // sorted relative locations
  std::vector<WbsNode> per_node;
  double threshold = 0.0;  // gamma / V
  int max_depth = 0;
};

/// Recursion over cached interval evaluations: split at the winning
/// interval's change-point estimate while min p < gamma / V.
MultiCpReport wbs_from_evaluated(const std::vector<IntervalEvaluation>& evals,
                                 const TestConfig& cfg, const IntervalSet& intervals);

MultiCpReport wbs_detect(const Dataset& data, const std::vector<double>& taus,
                         const TestConfig& cfg, const IntervalSet& intervals);

}  // namespace tailcp
