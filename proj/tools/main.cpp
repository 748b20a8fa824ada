#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hessopt/check.hpp"
#include "hessopt/harness.hpp"
#include "hessopt/svg.hpp"

namespace fs = std::filesystem;
using namespace hessopt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file: " + path});
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError({path + ": " + e.what()});
  }
}

std::string out_dir_or_env(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("HESSOPT_OUT_DIR")) return env;
  return {};
}

void apply_output_defaults(RunConfig& cfg, const std::string& out_dir, bool want_plot) {
  if (out_dir.empty()) return;
  fs::create_directories(out_dir);
  if (cfg.output.trace_csv.empty()) cfg.output.trace_csv = out_dir + "/trace.csv";
  if (cfg.output.summary_json.empty()) cfg.output.summary_json = out_dir + "/summary.json";
  if (want_plot && cfg.output.plot_svg.empty()) cfg.output.plot_svg = out_dir + "/plot.svg";
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

void print_bound(const std::optional<BoundReport>& rep) {
  if (!rep) return;
  if (!rep->compliant)
    std::cout << "  [non-compliant schedule constants; guarantee not in force]\n";
  std::cout << "  " << rep->guarantee << " bound: measured " << format_g17(rep->measured)
            << (rep->satisfied ? " <= " : " > ") << format_g17(rep->bound) << "  (ratio "
            << format_g17(rep->ratio) << ")\n";
}

std::vector<long> parse_horizons(const std::string& spec) {
  std::vector<long> horizons;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const double v = std::stod(item);
    if (v < 1) throw ConfigError({"--horizons: values must be >= 1"});
    horizons.push_back(static_cast<long>(v));
  }
  if (horizons.empty()) throw ConfigError({"--horizons: empty list"});
  return horizons;
}

int cmd_run(const std::string& config_path, std::uint64_t* seed_override,
            const std::string& out_flag, bool plot, const std::string& iterate) {
  RunConfig cfg = parse_run_config(load_json(config_path));
  if (seed_override) cfg.seed = *seed_override;
  if (iterate == "uniform") cfg.iterate_mode = IterateMode::uniform_random;
  else if (iterate == "last") cfg.iterate_mode = IterateMode::last;
  else if (!iterate.empty()) throw ConfigError({"--iterate: must be 'uniform' or 'last'"});
  apply_output_defaults(cfg, out_dir_or_env(out_flag), plot);

  const RunResult r = run(cfg);
  print_warnings(r.summary.warnings);
  if (!cfg.output.trace_csv.empty()) write_trace_csv(r.trace, cfg.output.trace_csv);
  if (!cfg.output.summary_json.empty()) write_summary_json(r.summary, cfg, cfg.output.summary_json);
  if (plot || !cfg.output.plot_svg.empty()) {
    if (cfg.output.plot_svg.empty())
      throw ConfigError({"--plot requires an output directory (--out) or output.plot_svg"});
    emit_plot(r.trace, {"true_grad_norm", "est_norm", "err_norm"}, cfg.output.plot_svg,
              cfg.problem.name + " / " + cfg.optimizer.name);
  }
  std::cout << cfg.problem.name << " / " << cfg.optimizer.name << "  T=" << cfg.T
            << "  seed=" << cfg.seed << "\n"
            << "  avg |grad F|^2 = " << format_g17(r.summary.avg_sq_grad_norm)
            << "   avg |grad F| = " << format_g17(r.summary.avg_grad_norm)
            << "   final loss = " << format_g17(r.summary.final_loss) << "\n"
            << "  selected iterate t=" << r.summary.selected_t
            << "  |grad F| = " << format_g17(r.summary.selected_grad_norm) << "\n"
            << "  oracle calls: " << r.summary.grad_calls << " grad, " << r.summary.hvp_calls
            << " hvp\n";
  print_bound(bound_report(r.summary, r.schedule, r.constants));
  return kExitOk;
}

int cmd_check(const std::string& problem, std::size_t dim, double sigma_g, double sigma_h,
              std::size_t n_samples, std::size_t hidden_width, double cond) {
  ProblemConfig cfg;
  cfg.name = problem;
  cfg.dim = dim;
  cfg.sigma_g = sigma_g;
  cfg.sigma_h = sigma_h;
  cfg.n_samples = n_samples;
  cfg.hidden_width = hidden_width;
  cfg.condition_number = cond;
  bool known = false;
  for (const auto& n : problem_names()) known |= n == problem;
  if (!known) throw ConfigError({"check: unknown problem '" + problem + "'"});
  const CheckReport rep = check_problem(cfg);
  for (const auto& it : rep.items)
    std::cout << (it.pass ? "PASS " : "FAIL ") << rep.problem << "." << it.name << ": "
              << it.detail << "\n";
  return rep.all_pass() ? kExitOk : kExitValidation;
}

int cmd_sweep(const std::string& config_path, const std::string& horizons_spec, int seeds,
              const std::string& out_flag, int workers) {
  RunConfig cfg = parse_run_config(load_json(config_path));
  const std::vector<long> horizons = parse_horizons(horizons_spec);
  const SweepResult sr = sweep(cfg, horizons, seeds, workers);

  std::cout << "T,seed,avg_sq_grad_norm,avg_grad_norm\n";
  for (const auto& pt : sr.points)
    std::cout << pt.T << "," << pt.seed << "," << format_g17(pt.avg_sq_grad_norm) << ","
              << format_g17(pt.avg_grad_norm) << "\n";
  if (sr.fit_sq && sr.fit_norm) {
    std::cout << "fit avg|grad|^2: slope " << format_g17(sr.fit_sq->slope) << "  r2 "
              << format_g17(sr.fit_sq->r2) << "\n";
    std::cout << "fit avg|grad|:   slope " << format_g17(sr.fit_norm->slope) << "  r2 "
              << format_g17(sr.fit_norm->r2) << "\n";
  } else {
    std::cout << "rate fit skipped: fewer than 3 distinct horizons\n";
  }
  for (const auto& pt : sr.points)
    if (pt.bound && !pt.bound->satisfied)
      std::cout << "bound violation at T=" << pt.T << " seed=" << pt.seed << "\n";

  const std::string out_dir = out_dir_or_env(out_flag);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream pts(out_dir + "/sweep_points.csv", std::ios::binary);
    pts << "T,seed,avg_sq_grad_norm,avg_grad_norm\n";
    for (const auto& pt : sr.points)
      pts << pt.T << "," << pt.seed << "," << format_g17(pt.avg_sq_grad_norm) << ","
          << format_g17(pt.avg_grad_norm) << "\n";
    json fit = {{"config", to_json(cfg)}, {"seeds", seeds}};
    if (sr.fit_sq && sr.fit_norm) {
      fit["slope_avg_sq_grad_norm"] = sr.fit_sq->slope;
      fit["r2_avg_sq_grad_norm"] = sr.fit_sq->r2;
      fit["slope_avg_grad_norm"] = sr.fit_norm->slope;
      fit["r2_avg_grad_norm"] = sr.fit_norm->r2;
    }
    std::ofstream(out_dir + "/sweep_fit.json", std::ios::binary) << fit.dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_tune(double delta, double L, double rho, double sigma_g, double sigma_h, double G,
             long T, double c_flag) {
  AssumptionConstants consts;
  consts.delta = delta;
  consts.lipschitz_l = L;
  consts.rho = rho;
  consts.sigma_g = sigma_g;
  consts.sigma_h = sigma_h;
  consts.grad_bound_g = G;
  consts.validate();

  const double K = compute_K(G, rho, sigma_h);
  const double C = std::max(std::sqrt(2.0 * K), 4.0 * L);
  const double c = c_flag > 0.0 ? c_flag : 2.0 * std::pow(G, 2.0 / 3.0) / std::sqrt(K);
  const double w = std::max(std::pow(4.0 * L * c, 3), 3.0 * G * G);
  const NormalizedTuning nt = tune_normalized(consts, T);

  json out = {{"K", K},
              {"clipped", {{"C_min", C}, {"eta_1", eta_power_law(C, 1)},
                           {"alpha_1", alpha_from_etas(K, eta_power_law(C, 1), eta_power_law(C, 2))},
                           {"bound_at_T", power_law_bound(C, K, G, delta, T)}}},
              {"normalized", {{"alpha", nt.alpha}, {"eta", nt.eta}}},
              {"adaptive", {{"c", c}, {"w", w}, {"eta_1", adaptive_eta({}, c, w)},
                            {"bound_at_T", adaptive_bound(c, w, K, G, delta, sigma_g, T)}}},
              {"T", T}};
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& summary_paths) {
  struct SeriesKey {
    std::string problem, optimizer, schedule;
    bool operator<(const SeriesKey& o) const {
      return std::tie(problem, optimizer, schedule) < std::tie(o.problem, o.optimizer, o.schedule);
    }
  };
  std::map<SeriesKey, std::vector<std::pair<double, double>>> sq_series;

  for (const auto& path : summary_paths) {
    const json j = load_json(path);
    const RunConfig cfg = parse_run_config(j.at("config"));
    const auto problem = make_problem(cfg.problem);
    AssumptionConstants consts = problem->constants();
    const Vec x1 = cfg.problem.start ? *cfg.problem.start : problem->default_start();
    consts.delta = std::max(0.0, problem->true_loss(x1) - problem->optimal_value());
    const ScheduleParams sched = resolve_schedule(cfg.optimizer, consts, cfg.T);

    RunSummary s;
    s.T = j.at("T").get<long>();
    s.avg_sq_grad_norm = j.at("avg_sq_grad_norm").get<double>();
    s.avg_grad_norm = j.at("avg_grad_norm").get<double>();

    std::cout << path << ": " << cfg.problem.name << " / " << cfg.optimizer.name << " T=" << s.T
              << "\n";
    print_bound(bound_report(s, sched, consts));
    sq_series[{cfg.problem.name, cfg.optimizer.name, to_string(sched.variant)}].emplace_back(
        static_cast<double>(s.T), s.avg_sq_grad_norm);
  }

  for (const auto& [key, pts] : sq_series) {
    std::vector<double> distinct;
    for (const auto& [T, y] : pts)
      if (std::find(distinct.begin(), distinct.end(), T) == distinct.end()) distinct.push_back(T);
    if (distinct.size() < 3) continue;
    const RateFit fit = fit_rate(pts);
    std::cout << "slope[" << key.problem << "/" << key.optimizer << "]: avg|grad|^2 ~ T^"
              << format_g17(fit.slope) << " (r2 " << format_g17(fit.r2) << ")\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic optimization benchmark harness with curvature-corrected momentum"};
  app.require_subcommand(1);

  // run
  std::string run_config, run_out, run_iterate;
  std::uint64_t run_seed = 0;
  bool run_plot = false;
  auto* run_cmd = app.add_subcommand("run", "execute one experiment from a config file");
  run_cmd->add_option("config", run_config, "JSON config file")->required();
  auto* seed_opt = run_cmd->add_option("--seed", run_seed, "override the run seed");
  run_cmd->add_option("--out", run_out, "output directory");
  run_cmd->add_flag("--plot", run_plot, "emit an SVG trace plot");
  run_cmd->add_option("--iterate", run_iterate, "iterate selection: uniform|last");

  // check
  std::string check_name;
  std::size_t check_dim = 20, check_n = 200, check_hidden = 8;
  double check_sg = 1.0, check_sh = 0.5, check_cond = 10.0;
  auto* check_cmd = app.add_subcommand("check", "finite-difference and invariant suite");
  check_cmd->add_option("problem", check_name, "problem name")->required();
  check_cmd->add_option("--dim", check_dim, "dimension");
  check_cmd->add_option("--sigma-g", check_sg, "gradient noise level");
  check_cmd->add_option("--sigma-h", check_sh, "curvature noise level");
  check_cmd->add_option("--n-samples", check_n, "dataset size");
  check_cmd->add_option("--hidden-width", check_hidden, "network hidden width");
  check_cmd->add_option("--cond", check_cond, "quadratic condition number");

  // sweep
  std::string sweep_config, sweep_horizons = "1e3,1e4,1e5", sweep_out;
  int sweep_seeds = 10, sweep_workers = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "convergence-rate sweep over horizons");
  sweep_cmd->add_option("config", sweep_config, "JSON config file")->required();
  sweep_cmd->add_option("--horizons", sweep_horizons, "comma-separated horizon list");
  sweep_cmd->add_option("--seeds", sweep_seeds, "seeds per horizon")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--out", sweep_out, "output directory");
  sweep_cmd->add_option("--workers", sweep_workers, "worker threads (default: hardware)");

  // tune
  double tu_delta = 1.0, tu_L = 1.0, tu_rho = 0.0, tu_sg = 0.0, tu_sh = 0.0, tu_G = 1.0,
         tu_c = 0.0;
  long tu_T = 100000;
  auto* tune_cmd = app.add_subcommand("tune", "print schedule constants for given assumptions");
  tune_cmd->add_option("--delta", tu_delta, "initial suboptimality");
  tune_cmd->add_option("--lipschitz", tu_L, "gradient Lipschitz constant L");
  tune_cmd->add_option("--rho", tu_rho, "Hessian Lipschitz constant");
  tune_cmd->add_option("--sigma-g", tu_sg, "gradient noise bound");
  tune_cmd->add_option("--sigma-h", tu_sh, "curvature noise bound");
  tune_cmd->add_option("--grad-bound", tu_G, "gradient norm bound G");
  tune_cmd->add_option("-T,--horizon", tu_T, "horizon T");
  tune_cmd->add_option("--c", tu_c, "adaptive coefficient c (default: largest admissible)");

  // report
  std::vector<std::string> report_paths;
  auto* report_cmd = app.add_subcommand("report", "bound checks and slope table from summaries");
  report_cmd->add_option("summaries", report_paths, "summary JSON files")->required();

  try {
    app.parse(argc, argv);
    if (*run_cmd)
      return cmd_run(run_config, seed_opt->count() > 0 ? &run_seed : nullptr, run_out, run_plot,
                     run_iterate);
    if (*check_cmd)
      return cmd_check(check_name, check_dim, check_sg, check_sh, check_n, check_hidden,
                       check_cond);
    if (*sweep_cmd) return cmd_sweep(sweep_config, sweep_horizons, sweep_seeds, sweep_out,
                                     sweep_workers);
    if (*tune_cmd) return cmd_tune(tu_delta, tu_L, tu_rho, tu_sg, tu_sh, tu_G, tu_T, tu_c);
    if (*report_cmd) return cmd_report(report_paths);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
