#pragma once

#include <algorithm>
#include <cmath>

#include "hessopt/oracle.hpp"
#include "hessopt/vec.hpp"

namespace hessopt {

struct FdReport {
  double max_rel_err = 0.0;
  double tol = 0.0;
  double eps = 0.0;
  bool pass = false;
};

// Central-difference step balancing truncation against rounding in 64-bit.
inline double fd_eps(const Vec& x) { return 1e-5 * (1.0 + norm2(x)); }

namespace detail {
// Per-coordinate error scaled by the larger of the two vector magnitudes, so
// coordinates that are incidentally tiny do not dominate the report.
inline double max_rel_err(const Vec& analytic, const Vec& numeric) {
  const double scale = std::max({norm_inf(analytic), norm_inf(numeric), 1e-12});
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i)
    worst = std::max(worst, std::fabs(analytic[i] - numeric[i]) / scale);
  return worst;
}
}  // namespace detail

// Checks grad(x, z) against the central difference of sampled_loss(., z).
inline FdReport fd_check_grad(const StochasticOracle& oracle, const Vec& x,
                              const OracleSample& z, double eps, double tol = 1e-6) {
  const Vec analytic = oracle.grad(x, z);
  Vec numeric(x.size());
  Vec xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + eps;
    const double fp = oracle.sampled_loss(xp, z);
    xp[i] = xi - eps;
    const double fm = oracle.sampled_loss(xp, z);
    xp[i] = xi;
    numeric[i] = (fp - fm) / (2.0 * eps);
  }
  FdReport r;
  r.max_rel_err = detail::max_rel_err(analytic, numeric);
  r.tol = tol;
  r.eps = eps;
  r.pass = r.max_rel_err <= tol;
  return r;
}

// Checks hvp(x, z, v) against the central difference of grad(., z) along v.
inline FdReport fd_check_hvp(const StochasticOracle& oracle, const Vec& x,
                             const OracleSample& z, const Vec& v, double eps,
                             double tol = 1e-4) {
  const Vec analytic = oracle.hvp(x, z, v);
  Vec xp = x;
  axpy(eps, v, xp);
  const Vec gp = oracle.grad(xp, z);
  Vec xm = x;
  axpy(-eps, v, xm);
  const Vec gm = oracle.grad(xm, z);
  Vec numeric(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) numeric[i] = (gp[i] - gm[i]) / (2.0 * eps);
  FdReport r;
  r.max_rel_err = detail::max_rel_err(analytic, numeric);
  r.tol = tol;
  r.eps = eps;
  r.pass = r.max_rel_err <= tol;
  return r;
}

}  // namespace hessopt
