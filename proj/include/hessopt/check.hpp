#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hessopt/config.hpp"
#include "hessopt/fd_check.hpp"
#include "hessopt/harness.hpp"

namespace hessopt {

struct CheckItem {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct CheckReport {
  std::string problem;
  std::vector<CheckItem> items;
  bool all_pass() const {
    for (const auto& it : items)
      if (!it.pass) return false;
    return true;
  }
};

namespace detail {

inline Vec random_point(std::size_t d, RngStream& rng, double scale = 2.0) {
  Vec x(d);
  for (double& v : x) v = rng.uniform(-scale, scale);
  return x;
}

inline CheckItem fd_grad_item(const StochasticOracle& p, int n_points, double tol,
                              RngStream& rng) {
  double worst = 0.0;
  for (int i = 0; i < n_points; ++i) {
    const Vec x = random_point(p.dim(), rng);
    const OracleSample z = p.sample(rng);
    worst = std::max(worst, fd_check_grad(p, x, z, fd_eps(x), tol).max_rel_err);
  }
  return {"fd_grad", worst <= tol,
          "max rel err " + format_g17(worst) + " over " + std::to_string(n_points) +
              " points (tol " + format_g17(tol) + ")"};
}

inline CheckItem fd_hvp_item(const StochasticOracle& p, int n_points, double tol, RngStream& rng) {
  double worst = 0.0;
  for (int i = 0; i < n_points; ++i) {
    const Vec x = random_point(p.dim(), rng);
    Vec v = random_point(p.dim(), rng, 1.0);
    const OracleSample z = p.sample(rng);
    worst = std::max(worst, fd_check_hvp(p, x, z, v, fd_eps(x), tol).max_rel_err);
  }
  return {"fd_hvp", worst <= tol,
          "max rel err " + format_g17(worst) + " over " + std::to_string(n_points) +
              " points (tol " + format_g17(tol) + ")"};
}

inline CheckItem hvp_linearity_item(const StochasticOracle& p, RngStream& rng) {
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Vec x = random_point(p.dim(), rng);
    const Vec u = random_point(p.dim(), rng, 1.0);
    const Vec v = random_point(p.dim(), rng, 1.0);
    const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
    const OracleSample z = p.sample(rng);
    Vec lhs_arg = scaled(u, a);
    axpy(b, v, lhs_arg);
    const Vec lhs = p.hvp(x, z, lhs_arg);
    Vec rhs = scaled(p.hvp(x, z, u), a);
    axpy(b, p.hvp(x, z, v), rhs);
    const double scale = std::max({norm2(lhs), norm2(rhs), 1.0});
    worst = std::max(worst, norm2(sub(lhs, rhs)) / scale);
  }
  return {"hvp_linearity", worst <= 1e-12, "max rel deviation " + format_g17(worst)};
}

inline CheckItem determinism_item(const StochasticOracle& p, RngStream& rng) {
  const Vec x = random_point(p.dim(), rng);
  const Vec v = random_point(p.dim(), rng, 1.0);
  const OracleSample z = p.sample(rng);
  const bool same_grad = p.grad(x, z) == p.grad(x, z);
  const bool same_hvp = p.hvp(x, z, v) == p.hvp(x, z, v);
  return {"replay_determinism", same_grad && same_hvp,
          same_grad && same_hvp ? "grad and hvp replay bit-identically" : "replay mismatch"};
}

inline CheckItem grad_noise_budget_item(const StochasticOracle& p, double sigma_g,
                                        RngStream& rng) {
  const int n_x = 10, n_z = 10000;
  double sum = 0.0;
  long count = 0;
  for (int i = 0; i < n_x; ++i) {
    const Vec x = random_point(p.dim(), rng);
    const Vec tg = p.true_grad(x);
    for (int k = 0; k < n_z; ++k) {
      const OracleSample z = p.sample(rng);
      const double e = norm2(sub(p.grad(x, z), tg));
      sum += e * e;
      ++count;
    }
  }
  const double est = sum / count;
  const double lo = 0.95 * sigma_g * sigma_g, hi = 1.05 * sigma_g * sigma_g;
  return {"grad_noise_budget", est >= lo && est <= hi,
          "Monte-Carlo second moment " + format_g17(est) + " vs sigma_g^2 = " +
              format_g17(sigma_g * sigma_g) + " (band 0.95..1.05)"};
}

inline CheckItem hess_noise_budget_item(const StochasticOracle& p, double sigma_h,
                                        RngStream& rng) {
  // The deviation bound must hold for every sample, not just on average.
  double worst_excess = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec x = random_point(p.dim(), rng);
    const Vec v = random_point(p.dim(), rng, 1.0);
    const OracleSample z = p.sample(rng);
    OracleSample z_clean = z;
    z_clean.hess_noise = 0.0;
    const double dev = norm2(sub(p.hvp(x, z, v), p.hvp(x, z_clean, v)));
    worst_excess = std::max(worst_excess, dev - sigma_h * norm2(v));
  }
  return {"hess_noise_budget", worst_excess <= 1e-12,
          "max deviation minus sigma_h*|v|: " + format_g17(worst_excess)};
}

inline CheckItem reference_fd_item(const StochasticOracle& p, RngStream& rng) {
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    const Vec x = random_point(p.dim(), rng);
    const Vec analytic = p.true_grad(x);
    const double eps = fd_eps(x);
    Vec numeric(p.dim());
    Vec xp = x;
    for (std::size_t k = 0; k < p.dim(); ++k) {
      const double xk = x[k];
      xp[k] = xk + eps;
      const double fp = p.true_loss(xp);
      xp[k] = xk - eps;
      const double fm = p.true_loss(xp);
      xp[k] = xk;
      numeric[k] = (fp - fm) / (2.0 * eps);
    }
    worst = std::max(worst, detail::max_rel_err(analytic, numeric));
  }
  return {"reference_fd", worst <= 1e-6, "max rel err " + format_g17(worst)};
}

}  // namespace detail

// Finite-difference and invariant suite for one problem. Instances with
// curvature noise get their Hessian action verified on the analytic twin
// (sigma_h = 0): the curvature perturbation is its own channel with a
// dedicated budget check, not a derivative of the sampled gradient.
inline CheckReport check_problem(const ProblemConfig& cfg, std::uint64_t seed = 20240817) {
  CheckReport report;
  report.problem = cfg.name;
  const auto problem = make_problem(cfg);
  RngStream rng(seed);

  report.items.push_back(detail::fd_grad_item(*problem, 20, 1e-6, rng));
  const bool curvature_noise = cfg.name == "separable_nonconvex" && cfg.sigma_h > 0.0;
  if (curvature_noise) {
    ProblemConfig analytic = cfg;
    analytic.sigma_h = 0.0;
    const auto twin = make_problem(analytic);
    report.items.push_back(detail::fd_hvp_item(*twin, 20, 1e-4, rng));
    report.items.push_back(detail::hess_noise_budget_item(*problem, cfg.sigma_h, rng));
  } else {
    report.items.push_back(detail::fd_hvp_item(*problem, 20, 1e-4, rng));
  }
  report.items.push_back(detail::hvp_linearity_item(*problem, rng));
  report.items.push_back(detail::determinism_item(*problem, rng));
  report.items.push_back(detail::reference_fd_item(*problem, rng));

  const bool synthetic_grad_noise =
      cfg.name == "quadratic" || cfg.name == "separable_nonconvex" || cfg.name == "rosenbrock";
  if (synthetic_grad_noise && cfg.sigma_g > 0.0)
    report.items.push_back(detail::grad_noise_budget_item(*problem, cfg.sigma_g, rng));

  if (cfg.name == "quadratic") {
    // Constant Hessian: the action must not depend on the evaluation point.
    const auto& p = *problem;
    RngStream r2(seed + 1);
    const OracleSample z = p.sample(r2);
    const Vec v = detail::random_point(p.dim(), r2, 1.0);
    const Vec x1 = detail::random_point(p.dim(), r2);
    const Vec x2 = detail::random_point(p.dim(), r2);
    const bool same = p.hvp(x1, z, v) == p.hvp(x2, z, v);
    report.items.push_back({"constant_hessian", same, same ? "hvp independent of x" : "hvp varies with x"});
  }
  if (cfg.name == "logistic") {
    const auto& p = *problem;
    const double G = p.constants().grad_bound_g;
    RngStream r2(seed + 2);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const Vec x = detail::random_point(p.dim(), r2, kTestBoxInf);
      const OracleSample z = p.sample(r2);
      worst = std::max(worst, norm2(p.grad(x, z)));
    }
    report.items.push_back({"grad_bound", worst <= G,
                            "max sampled grad norm " + format_g17(worst) + " vs declared G " +
                                format_g17(G)});
  }
  if (cfg.name == "separable_nonconvex") {
    // Declared curvature constants against a fine grid of the 1-D component.
    double max_d2 = 0.0, max_d3 = 0.0;
    for (int i = 0; i <= 200000; ++i) {
      const double u = -10.0 + 20.0 * i / 200000.0;
      max_d2 = std::max(max_d2, std::fabs(SeparableNonconvex::d2phi(u)));
      max_d3 = std::max(max_d3, std::fabs(SeparableNonconvex::d3phi(u)));
    }
    const bool l_ok = std::fabs(max_d2 - 2.0) <= 1e-3;
    const bool rho_ok = std::fabs(max_d3 - SeparableNonconvex::max_abs_d3phi()) <= 1e-3;
    report.items.push_back({"declared_constants", l_ok && rho_ok,
                            "grid max |phi''| = " + format_g17(max_d2) + ", grid max |phi'''| = " +
                                format_g17(max_d3)});
  }
  return report;
}

}  // namespace hessopt
