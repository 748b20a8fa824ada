#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "hessopt/oracle.hpp"
#include "hessopt/schedules.hpp"
#include "hessopt/vec.hpp"

namespace hessopt {

struct NumericalAbort : std::runtime_error {
  explicit NumericalAbort(long step)
      : std::runtime_error("non-finite value in update at t=" + std::to_string(step)), t(step) {}
  long t;
};

// Rescale to norm at most G, direction preserved; the boundary |g| = G is
// left untouched. Non-finite inputs pass through so the step guard can
// abort on them, and huge finite inputs are renormalized without letting
// the squared norm overflow.
inline std::pair<Vec, bool> clip(const Vec& g, double G) {
  if (!(G > 0.0)) throw std::invalid_argument("clip: G > 0 required");
  const double m = norm_inf(g);
  if (m == 0.0 || !std::isfinite(m)) return {g, false};
  double n;
  if (m > 1e150) {
    Vec unit = scaled(g, 1.0 / m);
    n = m * norm2(unit);
    if (!(n > G)) return {g, false};
    return {scaled(unit, G / (n / m)), true};
  }
  n = norm2(g);
  if (n <= G) return {g, false};
  return {scaled(g, G / n), true};
}

// Mutable per-run state. x is the current iterate x_t; g_hat holds the
// momentum estimate formed at step t (post-clip for the clipped variants),
// so after a step, |g_hat - true_grad(captured x_t)| is the estimate error.
struct OptimizerState {
  Vec x;
  Vec x_prev;
  Vec g_hat;
  long t = 1;
  AdaptiveAccumulator acc;
  bool clipped_last = false;
  bool zero_step_last = false;
  double eta_last = 0.0;
  double alpha_last = 0.0;
  double step_norm_last = 0.0;

  static OptimizerState at(Vec x1) {
    OptimizerState s;
    s.x = std::move(x1);
    s.x_prev = s.x;
    s.g_hat.assign(s.x.size(), 0.0);
    return s;
  }
};

namespace detail {

// One momentum update with curvature correction along the last displacement:
//   g_new = (1 - alpha)(g_hat + H(x, z)(x - x_prev)) + alpha grad(x, z).
// At t = 1 (x_prev == x) the correction is the Hessian action on the zero
// vector and alpha is forced to 1, which reduces to g_1 = grad(x_1, z_1)
// while keeping the per-step oracle budget uniform (one grad + one hvp).
inline Vec corrected_momentum(const OptimizerState& s, const StochasticOracle& oracle,
                              const OracleSample& z, double alpha, Vec* fresh_grad_out = nullptr) {
  Vec g = oracle.grad(s.x, z);
  const Vec disp = sub(s.x, s.x_prev);
  Vec corr = oracle.hvp(s.x, z, disp);
  Vec out(s.x.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (1.0 - alpha) * (s.g_hat[i] + corr[i]) + alpha * g[i];
  if (fresh_grad_out) *fresh_grad_out = std::move(g);
  return out;
}

inline void advance(OptimizerState& s, const Vec& direction, double eta) {
  Vec step = scaled(direction, eta);
  s.step_norm_last = norm2(step);
  s.x_prev = s.x;
  for (std::size_t i = 0; i < s.x.size(); ++i) s.x[i] -= step[i];
  s.eta_last = eta;
  s.t += 1;
  if (!all_finite(s.x) || !all_finite(s.g_hat)) throw NumericalAbort(s.t - 1);
}

}  // namespace detail

// ---- clipped variant ----

inline void hess_momentum_step(OptimizerState& s, const StochasticOracle& oracle, RngStream& rng,
                         double eta_t, double alpha_prev, double G) {
  const OracleSample z = oracle.sample(rng);
  Vec g_new = detail::corrected_momentum(s, oracle, z, alpha_prev);
  auto [g_clip, was_clipped] = clip(g_new, G);
  s.g_hat = std::move(g_clip);
  s.clipped_last = was_clipped;
  s.alpha_last = alpha_prev;
  detail::advance(s, s.g_hat, eta_t);
}

inline void hess_momentum_init(OptimizerState& s, const StochasticOracle& oracle, RngStream& rng,
                         double eta_1, double G) {
  hess_momentum_step(s, oracle, rng, eta_1, /*alpha_prev=*/1.0, G);
}

// ---- normalized variant ----

inline void nhess_momentum_step(OptimizerState& s, const StochasticOracle& oracle, RngStream& rng,
                          double eta, double alpha) {
  const OracleSample z = oracle.sample(rng);
  Vec g_new = detail::corrected_momentum(s, oracle, z, alpha);
  s.g_hat = std::move(g_new);
  s.clipped_last = false;
  s.alpha_last = alpha;
  const double n = norm2(s.g_hat);
  if (n == 0.0) {
    // A fabricated direction would break the unit-step geometry; stand still
    // and flag it.
    s.zero_step_last = true;
    detail::advance(s, Vec(s.x.size(), 0.0), eta);
    return;
  }
  s.zero_step_last = false;
  detail::advance(s, scaled(s.g_hat, 1.0 / n), eta);
}

inline void nhess_momentum_init(OptimizerState& s, const StochasticOracle& oracle, RngStream& rng,
                          double eta) {
  nhess_momentum_step(s, oracle, rng, eta, /*alpha=*/1.0);
}

// ---- adaptive variant ----

// Queries eta_t before pushing the fresh gradient norm, so the step size
// sees the squared-norm sum only up to index t-2.
inline void adahess_momentum_step(OptimizerState& s, const StochasticOracle& oracle, RngStream& rng,
                            double c, double w, double K, double G) {
  const double eta_t = adaptive_eta(s.acc, c, w);
  const double alpha_prev = s.t == 1 ? 1.0 : alpha_from_etas(K, s.eta_last, eta_t);
  const OracleSample z = oracle.sample(rng);
  Vec fresh;
  Vec g_new = detail::corrected_momentum(s, oracle, z, alpha_prev, &fresh);
  auto [g_clip, was_clipped] = clip(g_new, G);
  s.g_hat = std::move(g_clip);
  s.clipped_last = was_clipped;
  s.alpha_last = alpha_prev;
  s.acc = accumulator_push(s.acc, norm2(fresh));
  detail::advance(s, s.g_hat, eta_t);
}

inline void adahess_momentum_init(OptimizerState& s, const StochasticOracle& oracle, RngStream& rng,
                            double c, double w, double K, double G) {
  adahess_momentum_step(s, oracle, rng, c, w, K, G);
}

// ---- baselines ----

inline void sgd_momentum_step(OptimizerState& s, const StochasticOracle& oracle, RngStream& rng,
                              double eta, double alpha) {
  const OracleSample z = oracle.sample(rng);
  const Vec g = oracle.grad(s.x, z);
  for (std::size_t i = 0; i < s.x.size(); ++i)
    s.g_hat[i] = (1.0 - alpha) * s.g_hat[i] + alpha * g[i];
  s.clipped_last = false;
  s.alpha_last = alpha;
  detail::advance(s, s.g_hat, eta);
}

inline void sgd_momentum_init(OptimizerState& s, const StochasticOracle& oracle, RngStream& rng,
                              double eta) {
  sgd_momentum_step(s, oracle, rng, eta, /*alpha=*/1.0);
}

// Curvature correction replaced by two gradient evaluations at the same
// sample: grad(x_t, z_t) - grad(x_{t-1}, z_t).
inline void grad_diff_step(OptimizerState& s, const StochasticOracle& oracle, RngStream& rng,
                           double eta, double alpha) {
  const OracleSample z = oracle.sample(rng);
  const Vec g_here = oracle.grad(s.x, z);
  const Vec g_prev = oracle.grad(s.x_prev, z);
  for (std::size_t i = 0; i < s.x.size(); ++i)
    s.g_hat[i] = (1.0 - alpha) * (s.g_hat[i] + g_here[i] - g_prev[i]) + alpha * g_here[i];
  s.clipped_last = false;
  s.alpha_last = alpha;
  detail::advance(s, s.g_hat, eta);
}

inline void grad_diff_init(OptimizerState& s, const StochasticOracle& oracle, RngStream& rng,
                           double eta) {
  // Single gradient call at t = 1; the displacement is zero so the
  // difference term vanishes identically.
  const OracleSample z = oracle.sample(rng);
  s.g_hat = oracle.grad(s.x, z);
  s.clipped_last = false;
  s.alpha_last = 1.0;
  detail::advance(s, s.g_hat, eta);
}

}  // namespace hessopt
