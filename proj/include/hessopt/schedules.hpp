#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "hessopt/oracle.hpp"

namespace hessopt {

// Floor for the momentum-coupling constant: with no curvature variation at
// all (rho = sigma_h = 0) the formula degenerates to 0, which would freeze
// the momentum mixing (alpha_t = 0 forever).
inline constexpr double kMinK = 1e-12;

// Coupling constant between step size and momentum, written in rationalized
// form (multiply through by the conjugate):
//     K = 8 sigma_h^2 + 4 sqrt(4 sigma_h^4 + rho^2 G^2 / 2),
// which avoids cancellation when sigma_h dominates rho*G and has a finite
// rho -> 0 limit of 16 sigma_h^2.
inline double compute_K(double grad_bound_g, double rho, double sigma_h) {
  if (!(grad_bound_g > 0.0)) throw std::invalid_argument("compute_K: G must be > 0");
  if (rho < 0.0 || sigma_h < 0.0) throw std::invalid_argument("compute_K: rho, sigma_h must be >= 0");
  const double s2 = sigma_h * sigma_h;
  const double K = 8.0 * s2 + 4.0 * std::sqrt(4.0 * s2 * s2 + 0.5 * rho * rho * grad_bound_g * grad_bound_g);
  return std::max(K, kMinK);
}

// eta_t = 1 / (C t^{1/3})
inline double eta_power_law(double C, long t) {
  if (!(C > 0.0) || t < 1) throw std::invalid_argument("eta_power_law: C > 0 and t >= 1 required");
  return 1.0 / (C * std::cbrt(static_cast<double>(t)));
}

// alpha_t = 2 K eta_t eta_{t+1}, clamped at 1 (the analysis requires
// alpha_t <= 1; with C >= sqrt(2K) the clamp is never active).
inline double alpha_from_etas(double K, double eta_t, double eta_next) {
  return std::min(2.0 * K * eta_t * eta_next, 1.0);
}

struct NormalizedTuning {
  double alpha = 1.0;
  double eta = 0.0;
};

namespace detail {
// Ratio with explicit handling of the degenerate corners: a zero numerator
// wins over a zero denominator, and a positive numerator over a zero
// denominator is +infinity (the surrounding min/max absorbs it).
inline double guarded_ratio(double num, double den) {
  if (num == 0.0) return 0.0;
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return num / den;
}
}  // namespace detail

// Closed-form (alpha, eta) for the normalized variant at horizon T:
//   alpha = min{ max{ 1/T^{2/3},
//                     Delta^{4/5} rho^{2/5} / (T^{4/5} sigma_g^{6/5}),
//                     (2 Delta sigma_h)^{2/3} / (T^{2/3} sigma_g^{4/3}) }, 1 }
//   eta   = min{ sqrt(2 Delta) alpha^{1/4} / sqrt(T (L sqrt(alpha) + 4 sigma_h)),
//                (Delta alpha)^{1/3} / (rho T)^{1/3} }
// With sigma_g = 0 the noise-dependent terms are infinite and alpha clamps
// to 1; with rho = 0 the second eta branch is infinite and the first wins.
inline NormalizedTuning tune_normalized(const AssumptionConstants& consts, long T) {
  if (T < 1) throw std::invalid_argument("tune_normalized: T >= 1 required");
  const double Td = static_cast<double>(T);
  const double delta = consts.delta;
  const double rho = consts.rho;
  const double sg = consts.sigma_g;
  const double sh = consts.sigma_h;
  const double L = consts.lipschitz_l;

  NormalizedTuning out;
  if (sg == 0.0) {
    // Noise-free clamp: the noise-dependent terms dominate as sigma_g -> 0,
    // so the mixing coefficient saturates at 1.
    out.alpha = 1.0;
  } else {
    const double t1 = std::pow(Td, -2.0 / 3.0);
    const double t2 = detail::guarded_ratio(std::pow(delta, 0.8) * std::pow(rho, 0.4),
                                            std::pow(Td, 0.8) * std::pow(sg, 1.2));
    const double t3 = detail::guarded_ratio(std::pow(2.0 * delta * sh, 2.0 / 3.0),
                                            std::pow(Td, 2.0 / 3.0) * std::pow(sg, 4.0 / 3.0));
    out.alpha = std::min(std::max({t1, t2, t3}), 1.0);
  }

  const double e1 = detail::guarded_ratio(std::sqrt(2.0 * delta) * std::pow(out.alpha, 0.25),
                                          std::sqrt(Td * (L * std::sqrt(out.alpha) + 4.0 * sh)));
  const double e2 = detail::guarded_ratio(std::cbrt(delta * out.alpha), std::cbrt(rho * Td));
  out.eta = std::min(e1, e2);
  return out;
}

// Running sum of squared sampled-gradient norms with a one-step lag: the
// most recent push stays pending, so after pushes G_1..G_t the usable sum is
// G_1^2 + ... + G_{t-1}^2. Querying before pushing G_t therefore yields the
// sum up to index t-2, which is what the step-size formula consumes.
struct AdaptiveAccumulator {
  double sum_g_sq = 0.0;
  double pending = 0.0;
  long t = 0;
};

inline AdaptiveAccumulator accumulator_push(AdaptiveAccumulator acc, double g_norm) {
  if (g_norm < 0.0) throw std::invalid_argument("accumulator_push: g_norm >= 0 required");
  acc.sum_g_sq += acc.pending;
  acc.pending = g_norm * g_norm;
  acc.t += 1;
  return acc;
}

// eta_t = c / (w + sum_{i<=t-2} G_i^2)^{1/3}; equals c / w^{1/3} for the
// first two steps.
inline double adaptive_eta(const AdaptiveAccumulator& acc, double c, double w) {
  if (!(c > 0.0) || !(w > 0.0)) throw std::invalid_argument("adaptive_eta: c > 0 and w > 0 required");
  return c / std::cbrt(w + acc.sum_g_sq);
}

// Guaranteed bound on (1/T) sum_t |grad F(x_t)|^2 for the clipped variant:
//   (20 C Delta + 96 C^2 G^2 / K) / T^{2/3}
//     + 20 G^2 D (1 + ln T) / (C^2 T^{2/3}),   D = (24/5) K + 16 C^6 / (25 K^2)
inline double power_law_bound(double C, double K, double G, double delta, long T) {
  if (!(K > 0.0)) throw std::invalid_argument("power_law_bound: K > 0 required");
  if (!(C > 0.0) || T < 1) throw std::invalid_argument("power_law_bound: C > 0, T >= 1 required");
  const double Td = static_cast<double>(T);
  const double D = (24.0 / 5.0) * K + 16.0 * std::pow(C, 6) / (25.0 * K * K);
  const double t23 = std::pow(Td, 2.0 / 3.0);
  return (20.0 * C * delta + 96.0 * C * C * G * G / K) / t23 +
         20.0 * G * G * D * (1.0 + std::log(Td)) / (C * C * t23);
}

// Guaranteed bound on (1/T) sum_t |grad F(x_t)| for the adaptive variant:
//   (w^{1/6} sqrt(2M) + 2 M^{3/4}) / sqrt(T) + 2 sigma_g^{1/3} / T^{1/3}
//   M = (1/c) (20 (Delta + 6 sigma_g^2 w^{1/3} / (5Kc))
//              + 96 K c^2 ln(T+1) + (64 G^4 / (5 K^2 c^3)) ln T)
inline double adaptive_bound(double c, double w, double K, double G, double delta,
                             double sigma_g, long T) {
  if (!(K > 0.0) || !(c > 0.0)) throw std::invalid_argument("adaptive_bound: K > 0 and c > 0 required");
  if (!(w > 0.0) || T < 1) throw std::invalid_argument("adaptive_bound: w > 0, T >= 1 required");
  const double Td = static_cast<double>(T);
  const double M = (1.0 / c) * (20.0 * (delta + 6.0 * sigma_g * sigma_g * std::cbrt(w) / (5.0 * K * c)) +
                                96.0 * K * c * c * std::log(Td + 1.0) +
                                64.0 * std::pow(G, 4) / (5.0 * K * K * c * c * c) * std::log(Td));
  return (std::pow(w, 1.0 / 6.0) * std::sqrt(2.0 * M) + 2.0 * std::pow(M, 0.75)) / std::sqrt(Td) +
         2.0 * std::cbrt(sigma_g) / std::cbrt(Td);
}

enum class ScheduleVariant { power_law, normalized, adaptive, manual };

inline std::string to_string(ScheduleVariant v) {
  switch (v) {
    case ScheduleVariant::power_law: return "power_law";
    case ScheduleVariant::normalized: return "normalized";
    case ScheduleVariant::adaptive: return "adaptive";
    case ScheduleVariant::manual: return "manual";
  }
  return "?";
}

struct ScheduleParams {
  ScheduleVariant variant = ScheduleVariant::manual;
  double C = 1.0;
  double K = kMinK;
  double G = 1.0;
  double c = 1.0;
  double w = 1.0;
  double alpha_const = 1.0;
  double eta_const = 0.1;
  long horizon_T = 1;

  // Constant inequalities the guarantees assume. Violations are reported as
  // warnings rather than errors so empirical sweeps can tune freely.
  std::vector<std::string> check(const AssumptionConstants& consts) const {
    std::vector<std::string> warnings;
    auto warn = [&](const std::string& s) { warnings.push_back(s); };
    if (variant == ScheduleVariant::power_law) {
      if (C < std::sqrt(2.0 * K)) warn("C < sqrt(2K): guarantee constants not satisfied");
      if (C < 4.0 * consts.lipschitz_l) warn("C < 4L: guarantee constants not satisfied");
    } else if (variant == ScheduleVariant::adaptive) {
      if (c > 2.0 * std::pow(G, 2.0 / 3.0) / std::sqrt(K))
        warn("c > 2 G^{2/3} / sqrt(K): guarantee constants not satisfied");
      const double w_req = std::max(std::pow(4.0 * consts.lipschitz_l * c, 3), 3.0 * G * G);
      if (w < w_req) warn("w < max{(4Lc)^3, 3G^2}: guarantee constants not satisfied");
    }
    return warnings;
  }
};

}  // namespace hessopt
