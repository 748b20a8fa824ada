#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hessopt/check.hpp"
#include "hessopt/harness.hpp"
#include "hessopt/svg.hpp"

using namespace hessopt;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig quad_config() {
  RunConfig cfg;
  cfg.problem.name = "quadratic";
  cfg.problem.dim = 6;
  cfg.problem.condition_number = 5.0;
  cfg.problem.sigma_g = 0.0;
  cfg.problem.start = Vec(6, 1.0);
  cfg.optimizer.name = "hess_momentum";
  cfg.optimizer.schedule = ScheduleVariant::power_law;
  cfg.T = 200;
  cfg.seed = 42;
  return cfg;
}

}  // namespace

TEST_CASE("a one-step run's summary equals its single trace row") {
  RunConfig cfg = quad_config();
  cfg.T = 1;
  const RunResult r = run(cfg);
  REQUIRE(r.trace.size() == 1);
  const TraceRecord& rec = r.trace[0];
  CHECK(rec.t == 1);
  CHECK(r.summary.avg_sq_grad_norm ==
        doctest::Approx(rec.true_grad_norm * rec.true_grad_norm).epsilon(1e-15));
  CHECK(r.summary.final_loss == rec.loss);
  CHECK(r.summary.selected_t == 1);
}

TEST_CASE("identical config and seed give byte-identical traces") {
  RunConfig cfg = quad_config();
  cfg.problem.sigma_g = 1.0;
  const std::string p1 = "/tmp/hessopt_trace_a.csv", p2 = "/tmp/hessopt_trace_b.csv";
  write_trace_csv(run(cfg).trace, p1);
  write_trace_csv(run(cfg).trace, p2);
  const std::string s1 = slurp(p1), s2 = slurp(p2);
  CHECK(!s1.empty());
  CHECK(s1 == s2);
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("noiseless quadratic: the estimate error column is numerically zero") {
  const RunResult r = run(quad_config());
  for (const auto& rec : r.trace) REQUIRE(rec.err_norm <= 1e-12);
}

TEST_CASE("trace rows satisfy the norm triangle inequality") {
  RunConfig cfg = quad_config();
  cfg.problem.sigma_g = 0.7;
  const RunResult r = run(cfg);
  for (const auto& rec : r.trace)
    REQUIRE(rec.err_norm >= std::fabs(rec.est_norm - rec.true_grad_norm) - 1e-12);
}

TEST_CASE("summary averages recompute from a stride-1 trace") {
  RunConfig cfg = quad_config();
  cfg.problem.sigma_g = 0.5;
  cfg.trace_every = 1;
  const RunResult r = run(cfg);
  REQUIRE(static_cast<long>(r.trace.size()) == cfg.T);
  double sum_sq = 0.0;
  for (const auto& rec : r.trace) sum_sq += rec.true_grad_norm * rec.true_grad_norm;
  CHECK(r.summary.avg_sq_grad_norm == doctest::Approx(sum_sq / cfg.T).epsilon(1e-12));
  CHECK(!r.summary.subsampled);
}

TEST_CASE("strided traces keep the endpoints and mark subsampling") {
  RunConfig cfg = quad_config();
  cfg.T = 103;
  cfg.trace_every = 10;
  const RunResult r = run(cfg);
  CHECK(r.summary.subsampled);
  CHECK(r.trace.front().t == 1);
  CHECK(r.trace.back().t == 103);
  for (std::size_t i = 1; i + 1 < r.trace.size(); ++i)
    CHECK((r.trace[i].t - 1) % 10 == 0);
}

TEST_CASE("iterate selection: degenerate, uniform frequencies, and last mode") {
  std::vector<Vec> iterates;
  for (int i = 0; i < 10; ++i) iterates.push_back(Vec{static_cast<double>(i)});
  RngStream rng(11);

  std::vector<Vec> one = {Vec{7.0}};
  CHECK(select_iterate(one, IterateMode::last, rng)[0] == 7.0);
  CHECK(select_iterate(one, IterateMode::uniform_random, rng)[0] == 7.0);

  long counts[10] = {0};
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const Vec& pick = select_iterate(iterates, IterateMode::uniform_random, rng);
    counts[static_cast<int>(pick[0])]++;
  }
  double chi_sq = 0.0;
  for (long c : counts) {
    const double freq = static_cast<double>(c) / draws;
    CHECK(std::fabs(freq - 0.1) <= 0.01);
    const double expect = draws / 10.0;
    chi_sq += (c - expect) * (c - expect) / expect;
  }
  CHECK(chi_sq < 27.88);  // chi-square(9) quantile at p = 0.001

  const std::uint64_t before = rng.next_u64();
  RngStream replay(11);
  // last mode must not consume randomness
  RngStream probe(123);
  const Vec& last_pick = select_iterate(iterates, IterateMode::last, probe);
  CHECK(last_pick[0] == 9.0);
  RngStream probe2(123);
  CHECK(probe.next_u64() == probe2.next_u64());
  (void)before;
  (void)replay;
}

TEST_CASE("rate fitting: exact power law, constant series, rejected points") {
  std::vector<std::pair<double, double>> pts;
  for (double T : {1e3, 1e4, 1e5}) pts.emplace_back(T, std::pow(T, -2.0 / 3.0));
  const RateFit fit = fit_rate(pts);
  CHECK(std::fabs(fit.slope + 2.0 / 3.0) <= 1e-12);
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<std::pair<double, double>> flat = {{1e3, 2.0}, {1e4, 2.0}, {1e5, 2.0}};
  CHECK(std::fabs(fit_rate(flat).slope) <= 1e-12);

  std::vector<std::pair<double, double>> mixed = {{1e3, 1.0}, {1e4, 0.5}, {1e5, 0.25}, {1e6, -1.0}};
  const RateFit fm = fit_rate(mixed);
  CHECK(fm.n_used == 3);
  REQUIRE(fm.rejected.size() == 1);

  std::vector<std::pair<double, double>> few = {{1e3, 1.0}, {1e4, -0.5}, {1e5, -0.25}};
  CHECK_THROWS_AS(fit_rate(few), std::invalid_argument);
}

TEST_CASE("estimator comparison: self-comparison and degenerate alpha = 1 ties") {
  RunConfig a = quad_config();
  a.problem.sigma_g = 1.0;
  a.optimizer.name = "hess_momentum";
  a.optimizer.schedule = ScheduleVariant::manual;
  a.optimizer.eta = 0.05;
  a.optimizer.alpha = 0.2;
  a.optimizer.G = 1e9;
  a.T = 300;
  const EstimatorComparison self = compare_estimators(a, a, 5);
  CHECK(self.mean_diff == 0.0);
  CHECK(self.a_better == 0);

  RunConfig b = a;
  b.optimizer.name = "sgd_momentum";
  a.optimizer.alpha = 1.0;
  b.optimizer.alpha = 1.0;
  const EstimatorComparison ties = compare_estimators(a, b, 5);
  CHECK(ties.mean_diff == 0.0);  // both are plain SGD on the same stream
  CHECK(ties.a_better == 0);

  RunConfig c = b;
  c.problem.dim = 7;
  CHECK_THROWS_AS(compare_estimators(a, c, 2), std::invalid_argument);
}

TEST_CASE("bound reports: direction, degenerate horizon, and warning banner") {
  RunConfig cfg = quad_config();
  const RunResult r = run(cfg);
  const auto rep = bound_report(r.summary, r.schedule, r.constants);
  REQUIRE(rep.has_value());
  CHECK(rep->guarantee == "power_law");
  CHECK(rep->compliant);
  CHECK(rep->satisfied);
  CHECK(rep->measured <= rep->bound);

  RunConfig one = cfg;
  one.T = 1;
  const RunResult r1 = run(one);
  const auto rep1 = bound_report(r1.summary, r1.schedule, r1.constants);
  REQUIRE(rep1.has_value());
  CHECK(rep1->bound > 0.0);

  RunConfig bad = cfg;
  bad.optimizer.K = 1e6;  // forces C below sqrt(2K) and below 4L
  bad.optimizer.C = 10.0;
  const RunResult rb = run(bad);
  const auto repb = bound_report(rb.summary, rb.schedule, rb.constants);
  REQUIRE(repb.has_value());
  CHECK(!repb->compliant);
  CHECK(repb->warnings.size() == 2);
}

TEST_CASE("csv writer: header-only for empty traces, exact parse-back") {
  const std::string path = "/tmp/hessopt_trace_rt.csv";
  write_trace_csv({}, path);
  CHECK(slurp(path) == std::string(kTraceCsvHeader) + "\n");

  RunConfig cfg = quad_config();
  cfg.problem.sigma_g = 0.3;
  cfg.T = 50;
  const RunResult r = run(cfg);
  write_trace_csv(r.trace, path);
  const auto rows = read_trace_csv(path);
  REQUIRE(rows.size() == r.trace.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].t == r.trace[i].t);
    CHECK(rows[i].loss == r.trace[i].loss);  // %.17g round-trips exactly
    CHECK(rows[i].err_norm == r.trace[i].err_norm);
    CHECK(rows[i].step_norm == r.trace[i].step_norm);
  }
  std::remove(path.c_str());
}

TEST_CASE("summary json echoes the config losslessly") {
  RunConfig cfg = quad_config();
  cfg.output.summary_json = "/tmp/hessopt_summary.json";
  const RunResult r = run(cfg);
  write_summary_json(r.summary, cfg, cfg.output.summary_json);
  const json loaded = json::parse(slurp(cfg.output.summary_json));
  CHECK(loaded.at("config") == to_json(cfg));
  CHECK(loaded.at("T") == cfg.T);
  const RunConfig round = parse_run_config(loaded.at("config"));
  CHECK(to_json(round) == to_json(cfg));
  std::remove(cfg.output.summary_json.c_str());
}

TEST_CASE("config validation reports field-level errors") {
  json j = {{"problem", {{"name", "unknown_thing"}, {"dim", 4}}},
            {"optimizer", {{"name", "hess_momentum"}, {"bogus", 1}}},
            {"T", 100}};
  try {
    parse_run_config(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    bool saw_name = false, saw_bogus = false;
    for (const auto& d : e.details) {
      if (d.find("$.problem.name") != std::string::npos) saw_name = true;
      if (d.find("$.optimizer.bogus") != std::string::npos) saw_bogus = true;
    }
    CHECK(saw_name);
    CHECK(saw_bogus);
  }
}

TEST_CASE("sweep aggregates points sorted by horizon and seed") {
  RunConfig cfg = quad_config();
  cfg.problem.sigma_g = 0.5;
  const SweepResult sr = sweep(cfg, {50, 100, 200}, 3, 2);
  REQUIRE(sr.points.size() == 9);
  for (std::size_t i = 1; i < sr.points.size(); ++i) {
    const auto &a = sr.points[i - 1], &b = sr.points[i];
    REQUIRE((a.T < b.T || (a.T == b.T && a.seed < b.seed)));
  }
  CHECK(sr.mean_sq_by_T.size() == 3);
  REQUIRE(sr.fit_sq.has_value());
  CHECK(std::isfinite(sr.fit_sq->slope));
}

TEST_CASE("svg plots render polylines for the requested columns") {
  RunConfig cfg = quad_config();
  cfg.problem.sigma_g = 0.4;
  const RunResult r = run(cfg);
  const std::string path = "/tmp/hessopt_plot.svg";
  emit_plot(r.trace, {"true_grad_norm", "err_norm"}, path, "test");
  const std::string svg = slurp(path);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("err_norm") != std::string::npos);
  std::remove(path.c_str());
  CHECK_THROWS_AS(emit_plot(r.trace, {"nope"}, path), std::invalid_argument);
}

TEST_CASE("problem check suite passes for the default problems") {
  ProblemConfig quad;
  quad.name = "quadratic";
  quad.dim = 8;
  quad.sigma_g = 1.0;
  CHECK(check_problem(quad).all_pass());
  ProblemConfig sep;
  sep.name = "separable_nonconvex";
  sep.dim = 10;
  sep.sigma_g = 0.5;
  sep.sigma_h = 0.5;
  CHECK(check_problem(sep).all_pass());
}
