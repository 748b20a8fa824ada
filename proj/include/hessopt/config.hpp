#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hessopt/mlp.hpp"
#include "hessopt/problems.hpp"
#include "hessopt/schedules.hpp"

namespace hessopt {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::vector<std::string>& errors)
      : std::runtime_error(join(errors)), details(errors) {}
  std::vector<std::string> details;

 private:
  static std::string join(const std::vector<std::string>& errors) {
    std::string s = "invalid config:";
    for (const auto& e : errors) s += "\n  " + e;
    return s;
  }
};

enum class IterateMode { uniform_random, last };

struct ProblemConfig {
  std::string name = "quadratic";
  std::size_t dim = 20;
  double condition_number = 10.0;
  double sigma_g = 0.0;
  double sigma_h = 0.0;
  std::size_t n_samples = 200;
  std::size_t hidden_width = 8;
  std::uint64_t seed = 1234;  // dataset seed, recorded so data regenerates identically
  std::optional<Vec> start;
};

struct OptimizerConfig {
  std::string name = "hess_momentum";
  ScheduleVariant schedule = ScheduleVariant::power_law;
  std::optional<double> C;
  std::optional<double> K;
  std::optional<double> G;
  std::optional<double> c;
  std::optional<double> w;
  std::optional<double> alpha;
  std::optional<double> eta;
};

struct OutputConfig {
  std::string trace_csv;
  std::string summary_json;
  std::string plot_svg;
};

struct RunConfig {
  ProblemConfig problem;
  OptimizerConfig optimizer;
  long T = 1000;
  std::uint64_t seed = 1;
  long trace_every = 0;  // 0 = auto: 1 for dim <= 100, else 10
  IterateMode iterate_mode = IterateMode::last;
  OutputConfig output;

  long resolved_stride(std::size_t dim) const {
    if (trace_every > 0) return trace_every;
    return dim <= 100 ? 1 : 10;
  }
};

namespace detail {

template <typename T>
bool read_field(const json& j, const char* key, T& out, const std::string& path,
                std::vector<std::string>& errors) {
  if (!j.contains(key)) return false;
  try {
    out = j.at(key).get<T>();
    return true;
  } catch (const json::exception& e) {
    errors.push_back(path + "." + key + ": " + e.what());
    return false;
  }
}

inline void check_known_keys(const json& j, std::initializer_list<const char*> known,
                             const std::string& path, std::vector<std::string>& errors) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) ok = true;
    if (!ok) errors.push_back(path + "." + it.key() + ": unknown field");
  }
}

}  // namespace detail

inline const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names = {"quadratic", "separable_nonconvex", "logistic",
                                                 "rosenbrock", "mlp"};
  return names;
}

inline const std::vector<std::string>& optimizer_names() {
  static const std::vector<std::string> names = {"hess_momentum", "hess_momentum_normalized",
                                                 "hess_momentum_adaptive", "sgd_momentum",
                                                 "grad_diff_momentum"};
  return names;
}

inline ScheduleVariant default_schedule_for(const std::string& optimizer) {
  if (optimizer == "hess_momentum") return ScheduleVariant::power_law;
  if (optimizer == "hess_momentum_normalized") return ScheduleVariant::normalized;
  if (optimizer == "hess_momentum_adaptive") return ScheduleVariant::adaptive;
  return ScheduleVariant::manual;
}

inline RunConfig parse_run_config(const json& j) {
  std::vector<std::string> errors;
  RunConfig cfg;

  detail::check_known_keys(j, {"problem", "optimizer", "T", "seed", "trace_every", "iterate_mode", "output"},
                           "$", errors);

  if (j.contains("problem") && j.at("problem").is_object()) {
    const json& p = j.at("problem");
    const std::string path = "$.problem";
    detail::check_known_keys(p, {"name", "dim", "condition_number", "sigma_g", "sigma_h",
                                 "n_samples", "hidden_width", "seed", "start"},
                             path, errors);
    detail::read_field(p, "name", cfg.problem.name, path, errors);
    detail::read_field(p, "dim", cfg.problem.dim, path, errors);
    detail::read_field(p, "condition_number", cfg.problem.condition_number, path, errors);
    detail::read_field(p, "sigma_g", cfg.problem.sigma_g, path, errors);
    detail::read_field(p, "sigma_h", cfg.problem.sigma_h, path, errors);
    detail::read_field(p, "n_samples", cfg.problem.n_samples, path, errors);
    detail::read_field(p, "hidden_width", cfg.problem.hidden_width, path, errors);
    detail::read_field(p, "seed", cfg.problem.seed, path, errors);
    Vec start;
    if (detail::read_field(p, "start", start, path, errors)) cfg.problem.start = start;
    bool known = false;
    for (const auto& n : problem_names()) known |= n == cfg.problem.name;
    if (!known) errors.push_back(path + ".name: unknown problem '" + cfg.problem.name + "'");
    if (cfg.problem.sigma_g < 0) errors.push_back(path + ".sigma_g: must be >= 0");
    if (cfg.problem.sigma_h < 0) errors.push_back(path + ".sigma_h: must be >= 0");
    if (cfg.problem.condition_number < 1) errors.push_back(path + ".condition_number: must be >= 1");
  } else {
    errors.push_back("$.problem: required object");
  }

  if (j.contains("optimizer") && j.at("optimizer").is_object()) {
    const json& o = j.at("optimizer");
    const std::string path = "$.optimizer";
    detail::check_known_keys(o, {"name", "schedule", "C", "K", "G", "c", "w", "alpha", "eta"}, path,
                             errors);
    detail::read_field(o, "name", cfg.optimizer.name, path, errors);
    bool known = false;
    for (const auto& n : optimizer_names()) known |= n == cfg.optimizer.name;
    if (!known) errors.push_back(path + ".name: unknown optimizer '" + cfg.optimizer.name + "'");
    cfg.optimizer.schedule = default_schedule_for(cfg.optimizer.name);
    std::string sched;
    if (detail::read_field(o, "schedule", sched, path, errors)) {
      if (sched == "power_law") cfg.optimizer.schedule = ScheduleVariant::power_law;
      else if (sched == "normalized") cfg.optimizer.schedule = ScheduleVariant::normalized;
      else if (sched == "adaptive") cfg.optimizer.schedule = ScheduleVariant::adaptive;
      else if (sched == "manual") cfg.optimizer.schedule = ScheduleVariant::manual;
      else errors.push_back(path + ".schedule: unknown schedule '" + sched + "'");
    }
    auto opt_num = [&](const char* key, std::optional<double>& slot) {
      double v;
      if (detail::read_field(o, key, v, path, errors)) slot = v;
    };
    opt_num("C", cfg.optimizer.C);
    opt_num("K", cfg.optimizer.K);
    opt_num("G", cfg.optimizer.G);
    opt_num("c", cfg.optimizer.c);
    opt_num("w", cfg.optimizer.w);
    opt_num("alpha", cfg.optimizer.alpha);
    opt_num("eta", cfg.optimizer.eta);
  } else {
    errors.push_back("$.optimizer: required object");
  }

  detail::read_field(j, "T", cfg.T, "$", errors);
  if (cfg.T < 1) errors.push_back("$.T: must be >= 1");
  detail::read_field(j, "seed", cfg.seed, "$", errors);
  detail::read_field(j, "trace_every", cfg.trace_every, "$", errors);
  if (cfg.trace_every < 0) errors.push_back("$.trace_every: must be >= 0");
  std::string mode = "last";
  if (detail::read_field(j, "iterate_mode", mode, "$", errors)) {
    if (mode == "uniform_random") cfg.iterate_mode = IterateMode::uniform_random;
    else if (mode == "last") cfg.iterate_mode = IterateMode::last;
    else errors.push_back("$.iterate_mode: must be 'uniform_random' or 'last'");
  }
  if (j.contains("output") && j.at("output").is_object()) {
    const json& out = j.at("output");
    detail::check_known_keys(out, {"trace_csv", "summary_json", "plot_svg"}, "$.output", errors);
    detail::read_field(out, "trace_csv", cfg.output.trace_csv, "$.output", errors);
    detail::read_field(out, "summary_json", cfg.output.summary_json, "$.output", errors);
    detail::read_field(out, "plot_svg", cfg.output.plot_svg, "$.output", errors);
  }

  if (!errors.empty()) throw ConfigError(errors);
  return cfg;
}

inline json to_json(const RunConfig& cfg) {
  json p = {{"name", cfg.problem.name},
            {"dim", cfg.problem.dim},
            {"condition_number", cfg.problem.condition_number},
            {"sigma_g", cfg.problem.sigma_g},
            {"sigma_h", cfg.problem.sigma_h},
            {"n_samples", cfg.problem.n_samples},
            {"hidden_width", cfg.problem.hidden_width},
            {"seed", cfg.problem.seed}};
  if (cfg.problem.start) p["start"] = *cfg.problem.start;

  json o = {{"name", cfg.optimizer.name}, {"schedule", to_string(cfg.optimizer.schedule)}};
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) o[key] = *v;
  };
  put("C", cfg.optimizer.C);
  put("K", cfg.optimizer.K);
  put("G", cfg.optimizer.G);
  put("c", cfg.optimizer.c);
  put("w", cfg.optimizer.w);
  put("alpha", cfg.optimizer.alpha);
  put("eta", cfg.optimizer.eta);

  return json{{"problem", p},
              {"optimizer", o},
              {"T", cfg.T},
              {"seed", cfg.seed},
              {"trace_every", cfg.trace_every},
              {"iterate_mode", cfg.iterate_mode == IterateMode::last ? "last" : "uniform_random"},
              {"output", {{"trace_csv", cfg.output.trace_csv},
                          {"summary_json", cfg.output.summary_json},
                          {"plot_svg", cfg.output.plot_svg}}}};
}

inline std::unique_ptr<StochasticOracle> make_problem(const ProblemConfig& p) {
  if (p.name == "quadratic")
    return std::make_unique<NoisyQuadratic>(p.dim, p.condition_number, p.sigma_g, p.seed);
  if (p.name == "separable_nonconvex")
    return std::make_unique<SeparableNonconvex>(p.dim, p.sigma_g, p.sigma_h);
  if (p.name == "logistic") return std::make_unique<LogisticRegression>(p.dim, p.n_samples, p.seed);
  if (p.name == "rosenbrock") return std::make_unique<Rosenbrock>(p.sigma_g);
  if (p.name == "mlp") return std::make_unique<TwoLayerMlp>(p.hidden_width, p.n_samples, p.seed);
  throw ConfigError({"$.problem.name: unknown problem '" + p.name + "'"});
}

}  // namespace hessopt
