#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "hessopt/config.hpp"
#include "hessopt/fd_check.hpp"
#include "hessopt/optimizers.hpp"
#include "hessopt/trace.hpp"

namespace hessopt {

// Stream labels split off a run seed. Oracle sampling and algorithmic
// randomness (iterate selection) never share a stream, so adding or removing
// measurement code cannot perturb a trajectory.
inline constexpr std::uint64_t kOracleStream = 1;
inline constexpr std::uint64_t kSelectionStream = 2;

struct RunOptions {
  bool keep_trace = true;
  long force_stride = 0;  // 0 = honor config
};

struct RunResult {
  std::vector<TraceRecord> trace;
  RunSummary summary;
  ScheduleParams schedule;
  AssumptionConstants constants;
};

// Fills unset schedule constants from the problem's declared constants; the
// explicit config always wins so sweeps can tune freely.
inline ScheduleParams resolve_schedule(const OptimizerConfig& opt, const AssumptionConstants& consts,
                                       long T) {
  ScheduleParams p;
  p.variant = opt.schedule;
  p.horizon_T = T;
  p.G = opt.G.value_or(consts.grad_bound_g);
  p.K = opt.K.value_or(compute_K(p.G, consts.rho, consts.sigma_h));
  p.C = opt.C.value_or(std::max(std::sqrt(2.0 * p.K), 4.0 * consts.lipschitz_l));
  p.c = opt.c.value_or(2.0 * std::pow(p.G, 2.0 / 3.0) / std::sqrt(p.K));
  p.w = opt.w.value_or(std::max(std::pow(4.0 * consts.lipschitz_l * p.c, 3), 3.0 * p.G * p.G));
  if (opt.schedule == ScheduleVariant::normalized) {
    const NormalizedTuning tuned = tune_normalized(consts, T);
    p.alpha_const = opt.alpha.value_or(tuned.alpha);
    p.eta_const = opt.eta.value_or(tuned.eta);
  } else {
    p.alpha_const = opt.alpha.value_or(1.0);
    p.eta_const = opt.eta.value_or(0.1);
  }
  return p;
}

inline RunResult run(const RunConfig& cfg, const StochasticOracle& problem,
                     const RunOptions& opts = {}) {
  const auto t_start = std::chrono::steady_clock::now();
  const std::size_t d = problem.dim();

  CountingOracle oracle(problem);
  RngStream master(cfg.seed);
  RngStream oracle_rng = master.split(kOracleStream);
  RngStream select_rng = master.split(kSelectionStream);

  Vec x1 = cfg.problem.start ? *cfg.problem.start : problem.default_start();
  require_dim(x1, d, "run start");

  AssumptionConstants consts = problem.constants();
  if (problem.has_reference())
    consts.delta = std::max(0.0, problem.true_loss(x1) - problem.optimal_value());
  const ScheduleParams sched = resolve_schedule(cfg.optimizer, consts, cfg.T);

  const long stride = opts.force_stride > 0 ? opts.force_stride : cfg.resolved_stride(d);
  const std::string& opt_name = cfg.optimizer.name;
  const bool power_law_schedule = sched.variant == ScheduleVariant::power_law;

  long selected_t = cfg.T;
  if (cfg.iterate_mode == IterateMode::uniform_random)
    selected_t = 1 + static_cast<long>(select_rng.uniform_index(static_cast<std::uint64_t>(cfg.T)));

  RunResult result;
  result.schedule = sched;
  result.constants = consts;
  RunSummary& summary = result.summary;
  summary.T = cfg.T;
  summary.warnings = sched.check(consts);
  summary.subsampled = stride > 1;

  OptimizerState state = OptimizerState::at(x1);
  double sum_sq = 0.0, sum_norm = 0.0, sum_err_sq = 0.0;
  double eta_prev = 0.0;

  for (long t = 1; t <= cfg.T; ++t) {
    const Vec x_t = state.x;

    if (opt_name == "hess_momentum") {
      const double eta_t = power_law_schedule ? eta_power_law(sched.C, t) : sched.eta_const;
      const double alpha_prev =
          t == 1 ? 1.0
                 : (power_law_schedule ? alpha_from_etas(sched.K, eta_prev, eta_t) : sched.alpha_const);
      hess_momentum_step(state, oracle, oracle_rng, eta_t, alpha_prev, sched.G);
      eta_prev = eta_t;
    } else if (opt_name == "hess_momentum_normalized") {
      nhess_momentum_step(state, oracle, oracle_rng, sched.eta_const, t == 1 ? 1.0 : sched.alpha_const);
    } else if (opt_name == "hess_momentum_adaptive") {
      adahess_momentum_step(state, oracle, oracle_rng, sched.c, sched.w, sched.K, sched.G);
    } else if (opt_name == "sgd_momentum") {
      sgd_momentum_step(state, oracle, oracle_rng, sched.eta_const, t == 1 ? 1.0 : sched.alpha_const);
    } else if (opt_name == "grad_diff_momentum") {
      if (t == 1) grad_diff_init(state, oracle, oracle_rng, sched.eta_const);
      else grad_diff_step(state, oracle, oracle_rng, sched.eta_const, sched.alpha_const);
    } else {
      throw ConfigError({"$.optimizer.name: unknown optimizer '" + opt_name + "'"});
    }

    summary.zero_steps += state.zero_step_last ? 1 : 0;
    summary.max_iterate_inf_norm = std::max(summary.max_iterate_inf_norm, norm_inf(x_t));

    if (t == selected_t) {
      summary.selected_t = t;
      summary.selected_iterate = x_t;
    }

    const bool traced = (t - 1) % stride == 0 || t == cfg.T;
    if (traced) {
      TraceRecord rec;
      rec.t = t;
      rec.eta = state.eta_last;
      rec.alpha = state.alpha_last;
      rec.loss = problem.true_loss(x_t);
      const Vec tg = problem.true_grad(x_t);
      rec.true_grad_norm = norm2(tg);
      if (!std::isfinite(rec.loss) || !std::isfinite(rec.true_grad_norm))
        throw NumericalAbort(t);
      rec.est_norm = norm2(state.g_hat);
      rec.err_norm = norm2(sub(state.g_hat, tg));
      rec.clipped = state.clipped_last;
      rec.step_norm = state.step_norm_last;
      sum_sq += rec.true_grad_norm * rec.true_grad_norm;
      sum_norm += rec.true_grad_norm;
      sum_err_sq += rec.err_norm * rec.err_norm;
      summary.traced_rows += 1;
      if (t == cfg.T) summary.final_loss = rec.loss;
      if (opts.keep_trace) result.trace.push_back(rec);
    }
  }

  summary.avg_sq_grad_norm = sum_sq / static_cast<double>(summary.traced_rows);
  summary.avg_grad_norm = sum_norm / static_cast<double>(summary.traced_rows);
  summary.left_test_box = summary.max_iterate_inf_norm > kTestBoxInf;
  if (summary.left_test_box)
    summary.warnings.push_back("iterates left the declared test box; declared G does not cover the run");
  summary.selected_grad_norm = norm2(problem.true_grad(summary.selected_iterate));
  summary.grad_calls = oracle.grad_calls();
  summary.hvp_calls = oracle.hvp_calls();
  summary.sample_calls = oracle.sample_calls();
  summary.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

inline RunResult run(const RunConfig& cfg, const RunOptions& opts = {}) {
  const auto problem = make_problem(cfg.problem);
  return run(cfg, *problem, opts);
}

// Mean of err_norm^2 over traced rows with t > burn_in.
inline double mean_err_sq(const std::vector<TraceRecord>& trace, long burn_in = 0) {
  double s = 0.0;
  long n = 0;
  for (const auto& r : trace)
    if (r.t > burn_in) {
      s += r.err_norm * r.err_norm;
      ++n;
    }
  if (n == 0) throw std::invalid_argument("mean_err_sq: no rows past burn-in");
  return s / static_cast<double>(n);
}

inline const Vec& select_iterate(const std::vector<Vec>& iterates, IterateMode mode,
                                 RngStream& rng) {
  if (iterates.empty()) throw std::invalid_argument("select_iterate: empty iterate list");
  if (mode == IterateMode::last) return iterates.back();
  return iterates[rng.uniform_index(iterates.size())];
}

// ---- rate fitting ----

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
  int n_used = 0;
  std::vector<std::string> rejected;
};

// Least-squares fit of log(metric) against log(T).
inline RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
  RateFit fit;
  std::vector<std::pair<double, double>> logpts;
  for (const auto& [T, y] : points) {
    if (!(y > 0.0) || !(T > 0.0)) {
      fit.rejected.push_back("rejected non-positive point (T=" + format_g17(T) +
                             ", metric=" + format_g17(y) + ")");
      continue;
    }
    logpts.emplace_back(std::log(T), std::log(y));
  }
  std::vector<double> distinct;
  for (const auto& [x, y] : logpts)
    if (std::find(distinct.begin(), distinct.end(), x) == distinct.end()) distinct.push_back(x);
  if (distinct.size() < 3)
    throw std::invalid_argument("fit_rate: need >= 3 distinct positive horizons");

  const double n = static_cast<double>(logpts.size());
  double sx = 0, sy = 0;
  for (const auto& [x, y] : logpts) {
    sx += x;
    sy += y;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : logpts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (const auto& [x, y] : logpts) {
    const double e = y - (fit.intercept + fit.slope * x);
    ss_res += e * e;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.n_used = static_cast<int>(logpts.size());
  return fit;
}

// ---- paired estimator comparison ----

struct EstimatorComparison {
  int n_seeds = 0;
  int a_better = 0;        // seeds where config A's mean err^2 is strictly smaller
  double mean_diff = 0.0;  // mean of (A - B)
  double p_value = 1.0;    // one-sided sign test for "A better"
  std::vector<std::pair<double, double>> per_seed;
};

namespace detail {
inline double sign_test_p(int n, int wins) {
  // P(Binomial(n, 1/2) >= wins), exact.
  double p = 0.0;
  double log_half = std::log(0.5);
  for (int k = wins; k <= n; ++k) {
    double log_binom = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    p += std::exp(log_binom + n * log_half);
  }
  return std::min(p, 1.0);
}
}  // namespace detail

// Common-random-numbers comparison: both configs run with the same per-seed
// stream, so the oracle noise realizations match pairwise.
inline EstimatorComparison compare_estimators(const RunConfig& a, const RunConfig& b, int n_seeds,
                                              long burn_in = 0) {
  if (to_json(a)["problem"] != to_json(b)["problem"])
    throw std::invalid_argument("compare_estimators: configs must share the problem");
  if (a.T != b.T) throw std::invalid_argument("compare_estimators: configs must share T");
  const auto problem = make_problem(a.problem);
  RunOptions opts;
  opts.force_stride = 1;
  EstimatorComparison cmp;
  cmp.n_seeds = n_seeds;
  for (int i = 0; i < n_seeds; ++i) {
    RunConfig ca = a, cb = b;
    ca.seed = a.seed + static_cast<std::uint64_t>(i);
    cb.seed = ca.seed;
    const double ma = mean_err_sq(run(ca, *problem, opts).trace, burn_in);
    const double mb = mean_err_sq(run(cb, *problem, opts).trace, burn_in);
    cmp.per_seed.emplace_back(ma, mb);
    cmp.mean_diff += (ma - mb) / static_cast<double>(n_seeds);
    if (ma < mb) ++cmp.a_better;
  }
  cmp.p_value = detail::sign_test_p(cmp.n_seeds, cmp.a_better);
  return cmp;
}

// ---- bound reports ----

struct BoundReport {
  std::string guarantee;  // "power_law" or "adaptive"
  double measured = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
  bool satisfied = false;
  bool compliant = true;
  std::vector<std::string> warnings;
};

// Compares the measured average against the guarantee's right-hand side.
// The bound may be loose by orders of magnitude; only the direction
// measured <= bound is meaningful. Returns nothing for schedules without an
// evaluated guarantee (normalized, manual).
inline std::optional<BoundReport> bound_report(const RunSummary& summary,
                                               const ScheduleParams& sched,
                                               const AssumptionConstants& consts) {
  BoundReport rep;
  rep.warnings = sched.check(consts);
  rep.compliant = rep.warnings.empty();
  if (sched.variant == ScheduleVariant::power_law) {
    rep.guarantee = "power_law";
    rep.measured = summary.avg_sq_grad_norm;
    rep.bound = power_law_bound(sched.C, sched.K, sched.G, consts.delta, summary.T);
  } else if (sched.variant == ScheduleVariant::adaptive) {
    rep.guarantee = "adaptive";
    rep.measured = summary.avg_grad_norm;
    rep.bound = adaptive_bound(sched.c, sched.w, sched.K, sched.G, consts.delta, consts.sigma_g,
                               summary.T);
  } else {
    return std::nullopt;
  }
  rep.ratio = rep.measured / rep.bound;
  rep.satisfied = rep.measured <= rep.bound;
  return rep;
}

// ---- sweeps ----

struct SweepPoint {
  long T = 0;
  std::uint64_t seed = 0;
  double avg_sq_grad_norm = 0.0;
  double avg_grad_norm = 0.0;
  std::optional<BoundReport> bound;
};

struct SweepResult {
  std::vector<SweepPoint> points;  // sorted by (T, seed)
  std::vector<std::pair<double, double>> mean_sq_by_T;
  std::vector<std::pair<double, double>> mean_norm_by_T;
  std::optional<RateFit> fit_sq;   // absent when fewer than 3 distinct horizons
  std::optional<RateFit> fit_norm;
};

// Fans runs out over a worker pool. Results land in pre-assigned slots, so
// aggregation order does not depend on scheduling.
inline SweepResult sweep(const RunConfig& base, const std::vector<long>& horizons, int n_seeds,
                         int workers = 0) {
  if (horizons.empty() || n_seeds < 1) throw std::invalid_argument("sweep: empty grid");
  const auto problem = make_problem(base.problem);

  struct Task {
    long T;
    int seed_index;
  };
  std::vector<Task> tasks;
  std::vector<long> sorted_T = horizons;
  std::sort(sorted_T.begin(), sorted_T.end());
  sorted_T.erase(std::unique(sorted_T.begin(), sorted_T.end()), sorted_T.end());
  for (long T : sorted_T)
    for (int i = 0; i < n_seeds; ++i) tasks.push_back({T, i});

  SweepResult result;
  result.points.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker_fn = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      RunConfig cfg = base;
      cfg.T = tasks[k].T;
      cfg.seed = base.seed + static_cast<std::uint64_t>(tasks[k].seed_index);
      cfg.output = {};
      RunOptions opts;
      opts.keep_trace = false;
      opts.force_stride = 1;
      const RunResult r = run(cfg, *problem, opts);
      SweepPoint& pt = result.points[k];
      pt.T = cfg.T;
      pt.seed = cfg.seed;
      pt.avg_sq_grad_norm = r.summary.avg_sq_grad_norm;
      pt.avg_grad_norm = r.summary.avg_grad_norm;
      pt.bound = bound_report(r.summary, r.schedule, r.constants);
    }
  };
  int n_workers = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  n_workers = std::max(1, std::min<int>(n_workers, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker_fn);
  for (auto& th : pool) th.join();

  for (long T : sorted_T) {
    double msq = 0.0, mnorm = 0.0;
    for (const auto& pt : result.points)
      if (pt.T == T) {
        msq += pt.avg_sq_grad_norm / n_seeds;
        mnorm += pt.avg_grad_norm / n_seeds;
      }
    result.mean_sq_by_T.emplace_back(static_cast<double>(T), msq);
    result.mean_norm_by_T.emplace_back(static_cast<double>(T), mnorm);
  }
  if (sorted_T.size() >= 3) {
    result.fit_sq = fit_rate(result.mean_sq_by_T);
    result.fit_norm = fit_rate(result.mean_norm_by_T);
  }
  return result;
}

// ---- summary serialization ----

inline json summary_to_json(const RunSummary& s, const RunConfig& cfg) {
  return json{{"T", s.T},
              {"avg_sq_grad_norm", s.avg_sq_grad_norm},
              {"avg_grad_norm", s.avg_grad_norm},
              {"final_loss", s.final_loss},
              {"selected_t", s.selected_t},
              {"selected_iterate", s.selected_iterate},
              {"selected_grad_norm", s.selected_grad_norm},
              {"grad_calls", s.grad_calls},
              {"hvp_calls", s.hvp_calls},
              {"sample_calls", s.sample_calls},
              {"zero_steps", s.zero_steps},
              {"traced_rows", s.traced_rows},
              {"subsampled", s.subsampled},
              {"left_test_box", s.left_test_box},
              {"max_iterate_inf_norm", s.max_iterate_inf_norm},
              {"wall_time_s", s.wall_time_s},
              {"warnings", s.warnings},
              {"config", to_json(cfg)}};
}

inline void write_summary_json(const RunSummary& s, const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << summary_to_json(s, cfg).dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace hessopt
