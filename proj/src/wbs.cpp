#include "tailcp/wbs.hpp"

#include "tailcp/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace tailcp {

IntervalSet generate_intervals(const TestConfig& cfg, int V, double v0, RngStream& rng,
                               double v1) {
  if (V < 1) throw std::invalid_argument("generate_intervals: V must be >= 1");
  if (!(v0 > 0.0)) throw std::invalid_argument("generate_intervals: v0 must be positive");
  const double range = 1.0 - 2.0 * cfg.q0;
  if (v0 > range)
    throw std::invalid_argument("generate_intervals: v0 exceeds the trimmed range 1 - 2*q0");

  IntervalSet set;
  set.V = V;
  set.v0 = v0;
  set.v1 = (v1 > 0.0) ? v1 : 2.0 * v0;
  set.intervals.reserve(static_cast<std::size_t>(V));

  const long cap = 100L * V;
  long attempts = 0;
  while (static_cast<int>(set.intervals.size()) < V) {
    if (attempts++ >= cap)
      throw std::runtime_error("generate_intervals: attempt cap reached; v0 too large");
    double a = cfg.q0 + range * rng.uniform();
    double b = cfg.q0 + range * rng.uniform();
    if (a > b) std::swap(a, b);
    if (b - a < v0) continue;
    set.intervals.emplace_back(a, b);
  }
  return set;
}

std::vector<IntervalEvaluation> evaluate_intervals(const Dataset& data,
                                                   const std::vector<double>& taus,
                                                   const TestConfig& cfg,
                                                   const IntervalSet& intervals) {
  const Index n = data.n();
  const std::size_t V = intervals.intervals.size();
  std::vector<IntervalEvaluation> evals(V);
  parallel_for(V, cfg.threads, [&](std::size_t nu) {
    IntervalEvaluation& ev = evals[nu];
    const auto [s, e] = intervals.intervals[nu];
    ev.s = s;
    ev.e = e;
    // Rows floor(n*s) .. floor(n*e), 1-based as the interval is defined on
    // relative time.
    const Index first = std::max<Index>(
        1, static_cast<Index>(std::floor(static_cast<double>(n) * s + 1e-9)));
    const Index last = std::min<Index>(
        n, static_cast<Index>(std::floor(static_cast<double>(n) * e + 1e-9)));
    const Index m = last - first + 1;
    if (m < 10) {
      ev.error = "window too short";
      return;
    }
    try {
      const Dataset win = data.window(first - 1, m);
      TestConfig local = cfg;
      local.threads = 1;  // parallelism lives at the interval level
      const AdaptiveTestResult res =
          run_adaptive_test(win, taus, local, static_cast<std::uint64_t>(nu) + 1);
      ev.p_ad = res.p_ad;
      ev.t_hat_abs = s + res.t_hat_ad.t_hat * (e - s);
      ev.usable = true;
    } catch (const std::exception& ex) {
      ev.error = ex.what();
    }
  });
  return evals;
}

namespace {

struct WbsState {
  const std::vector<IntervalEvaluation>* evals;
  double v0 = 0.0;
  double v1 = 0.0;
  double threshold = 0.0;
  MultiCpReport* report;
};

void wbs_recurse(WbsState& st, double S, double E, int depth) {
  WbsNode node;
  node.S = S;
  node.E = E;
  node.depth = depth;
  st.report->max_depth = std::max(st.report->max_depth, depth);

  if (E - S <= st.v1) {
    node.decision = WbsNode::Decision::span_too_short;
    st.report->per_node.push_back(node);
    return;
  }
  // Both length checks kept: generation enforces v0, the filter restates it.
  int best = -1;
  double p_bar = 1.0;
  for (std::size_t nu = 0; nu < st.evals->size(); ++nu) {
    const IntervalEvaluation& ev = (*st.evals)[nu];
    if (!ev.usable) continue;
    if (!(ev.s >= S && ev.e <= E)) continue;
    if (ev.e - ev.s < st.v0) continue;
    if (best < 0 || ev.p_ad < p_bar) {
      best = static_cast<int>(nu);
      p_bar = ev.p_ad;
    }
  }
  if (best < 0) {
    node.decision = WbsNode::Decision::no_interval;
    st.report->per_node.push_back(node);
    return;
  }
  node.nu_star = best;
  node.p_bar = p_bar;
  if (p_bar >= st.threshold) {
    node.decision = WbsNode::Decision::accept_null;
    st.report->per_node.push_back(node);
    return;
  }
  node.decision = WbsNode::Decision::split;
  st.report->per_node.push_back(node);
  const double t = (*st.evals)[static_cast<std::size_t>(best)].t_hat_abs;
  st.report->changepoints.push_back(t);
  wbs_recurse(st, S, t, depth + 1);
  wbs_recurse(st, t, E, depth + 1);
}

}  // namespace

MultiCpReport wbs_from_evaluated(const std::vector<IntervalEvaluation>& evals,
                                 const TestConfig& cfg, const IntervalSet& intervals) {
  if (intervals.V < 1) throw std::invalid_argument("wbs: V must be >= 1");
  if (intervals.v1 < intervals.v0)
    throw std::invalid_argument("wbs: v1 must be >= v0");
  MultiCpReport report;
  report.threshold = cfg.gamma / static_cast<double>(intervals.V);
  WbsState st;
  st.evals = &evals;
  st.v0 = intervals.v0;
  st.v1 = intervals.v1;
  st.threshold = report.threshold;
  st.report = &report;
  wbs_recurse(st, cfg.q0, 1.0 - cfg.q0, 1);
  std::sort(report.changepoints.begin(), report.changepoints.end());
  return report;
}

MultiCpReport wbs_detect(const Dataset& data, const std::vector<double>& taus,
                         const TestConfig& cfg, const IntervalSet& intervals) {
  cfg.validate();
  const std::vector<IntervalEvaluation> evals = evaluate_intervals(data, taus, cfg, intervals);
  return wbs_from_evaluated(evals, cfg, intervals);
}

}  // namespace tailcp
