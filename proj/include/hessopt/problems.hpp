#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hessopt/oracle.hpp"
#include "hessopt/rng.hpp"
#include "hessopt/vec.hpp"

namespace hessopt {

// Default box on which unbounded problems declare their gradient bound; the
// harness asserts iterates stay inside it instead of clipping the oracle.
inline constexpr double kTestBoxInf = 10.0;

namespace detail {

// Additive gradient noise with E|xi|^2 = sigma_g^2 exactly: each coordinate
// is N(0, sigma_g^2 / d).
inline Vec draw_grad_noise(double sigma_g, std::size_t d, RngStream& rng) {
  if (sigma_g == 0.0) return {};
  Vec xi(d);
  const double coord_std = sigma_g / std::sqrt(static_cast<double>(d));
  for (double& v : xi) v = coord_std * rng.normal();
  return xi;
}

inline void add_noise(Vec& g, const OracleSample& z) {
  if (!z.grad_noise.empty()) axpy(1.0, z.grad_noise, g);
}

inline double noise_inner(const Vec& x, const OracleSample& z) {
  return z.grad_noise.empty() ? 0.0 : dot(z.grad_noise, x);
}

}  // namespace detail

// F(x) = 1/2 x'Ax - b'x with A diagonal, spectrum log-spaced on [1, cond].
// Constant Hessian, so the curvature-correction term is exact and the
// momentum estimate tracks the true gradient identically in the noiseless
// case. Gradient noise is additive and x-independent; the sampled loss
// carries the matching linear term <xi, x> so the gradient channel is the
// exact derivative of the loss channel.
class NoisyQuadratic final : public StochasticOracle {
 public:
  NoisyQuadratic(std::size_t dim, double condition_number, double sigma_g, std::uint64_t seed)
      : dim_(dim), cond_(condition_number), sigma_g_(sigma_g), lambda_(dim), b_(dim) {
    if (dim == 0) throw std::invalid_argument("quadratic: dim must be >= 1");
    if (condition_number < 1.0) throw std::invalid_argument("quadratic: condition_number must be >= 1");
    for (std::size_t i = 0; i < dim; ++i) {
      lambda_[i] = dim == 1 ? condition_number
                            : std::pow(condition_number,
                                       static_cast<double>(i) / static_cast<double>(dim - 1));
    }
    RngStream rng(seed, /*stream_label=*/0x71);
    for (double& v : b_) v = rng.normal();
  }

  // Direct construction from an explicit spectrum and offset.
  NoisyQuadratic(Vec eigenvalues, Vec offset, double sigma_g)
      : dim_(eigenvalues.size()), sigma_g_(sigma_g), lambda_(std::move(eigenvalues)), b_(std::move(offset)) {
    if (dim_ == 0 || b_.size() != dim_) throw std::invalid_argument("quadratic: bad spectrum/offset");
    cond_ = 1.0;
    for (double l : lambda_) {
      if (!(l > 0.0)) throw std::invalid_argument("quadratic: eigenvalues must be > 0");
      cond_ = std::max(cond_, l);
    }
  }

  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "quadratic"; }

  AssumptionConstants constants() const override {
    AssumptionConstants c;
    c.lipschitz_l = cond_;
    c.rho = 0.0;
    c.sigma_g = sigma_g_;
    c.sigma_h = 0.0;
    double box_sq = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double m = lambda_[i] * kTestBoxInf + std::fabs(b_[i]);
      box_sq += m * m;
    }
    c.grad_bound_g = std::sqrt(box_sq) + 6.0 * sigma_g_;
    c.delta = true_loss(default_start()) - optimal_value();
    return c;
  }

  OracleSample sample(RngStream& rng) const override {
    OracleSample z;
    z.grad_noise = detail::draw_grad_noise(sigma_g_, dim_, rng);
    return z;
  }

  double sampled_loss(const Vec& x, const OracleSample& z) const override {
    return true_loss(x) + detail::noise_inner(x, z);
  }

  Vec grad(const Vec& x, const OracleSample& z) const override {
    Vec g = true_grad(x);
    detail::add_noise(g, z);
    return g;
  }

  Vec hvp(const Vec& x, const OracleSample&, const Vec& v) const override {
    require_dim(x, dim_, "quadratic hvp x");
    require_dim(v, dim_, "quadratic hvp v");
    Vec out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = lambda_[i] * v[i];
    return out;
  }

  double true_loss(const Vec& x) const override {
    require_dim(x, dim_, "quadratic loss");
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += 0.5 * lambda_[i] * x[i] * x[i] - b_[i] * x[i];
    return s;
  }

  Vec true_grad(const Vec& x) const override {
    require_dim(x, dim_, "quadratic grad");
    Vec g(dim_);
    for (std::size_t i = 0; i < dim_; ++i) g[i] = lambda_[i] * x[i] - b_[i];
    return g;
  }

  double optimal_value() const override {
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s -= 0.5 * b_[i] * b_[i] / lambda_[i];
    return s;
  }

  const Vec& eigenvalues() const { return lambda_; }

 private:
  std::size_t dim_;
  double cond_;
  double sigma_g_;
  Vec lambda_;
  Vec b_;
};

// F(x) = sum_i u_i^2 / (1 + u_i^2), u = x - x*. Bounded, non-convex, with
// closed-form first through third derivatives of the 1-D component:
//   phi'(u)   = 2u / (1+u^2)^2
//   phi''(u)  = (2 - 6u^2) / (1+u^2)^3        max |phi''|  = 2      (at u=0)
//   phi'''(u) = 24u(u^2 - 1) / (1+u^2)^4      max |phi'''| at u^2 = 1 - sqrt(4/5)
// Separability makes the declared L and rho the 1-D extrema: for diagonal
// Hessians, |(H(x)-H(y))w| <= max_i |phi''(u_i)-phi''(v_i)| |w|.
//
// Curvature noise adds s*I to the sampled Hessian action with
// s ~ Uniform(-sigma_h, sigma_h), so the per-sample deviation norm is
// |s||v| <= sigma_h|v| deterministically. This channel is deliberately not
// the derivative of the sampled gradient: gradient noise must stay governed
// by sigma_g alone, so finite-difference verification of the Hessian action
// runs on instances with the curvature noise off.
class SeparableNonconvex final : public StochasticOracle {
 public:
  SeparableNonconvex(std::size_t dim, double sigma_g, double sigma_h)
      : dim_(dim), sigma_g_(sigma_g), sigma_h_(sigma_h), center_(dim) {
    if (dim == 0) throw std::invalid_argument("separable: dim must be >= 1");
    for (std::size_t i = 0; i < dim; ++i)
      center_[i] = 0.5 * (static_cast<double>(i % 7) - 3.0);
  }

  static double phi(double u) { return u * u / (1.0 + u * u); }
  static double dphi(double u) {
    const double q = 1.0 + u * u;
    return 2.0 * u / (q * q);
  }
  static double d2phi(double u) {
    const double q = 1.0 + u * u;
    return (2.0 - 6.0 * u * u) / (q * q * q);
  }
  static double d3phi(double u) {
    const double q = 1.0 + u * u;
    return 24.0 * u * (u * u - 1.0) / (q * q * q * q);
  }
  static double max_abs_dphi() { return dphi(1.0 / std::sqrt(3.0)); }
  static double max_abs_d3phi() { return std::fabs(d3phi(std::sqrt(1.0 - std::sqrt(0.8)))); }

  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "separable_nonconvex"; }

  AssumptionConstants constants() const override {
    AssumptionConstants c;
    c.lipschitz_l = 2.0;
    c.rho = max_abs_d3phi();
    c.sigma_g = sigma_g_;
    c.sigma_h = sigma_h_;
    c.grad_bound_g = max_abs_dphi() * std::sqrt(static_cast<double>(dim_)) + 6.0 * sigma_g_;
    c.delta = true_loss(default_start());
    return c;
  }

  OracleSample sample(RngStream& rng) const override {
    OracleSample z;
    z.grad_noise = detail::draw_grad_noise(sigma_g_, dim_, rng);
    z.hess_noise = sigma_h_ == 0.0 ? 0.0 : rng.uniform(-sigma_h_, sigma_h_);
    return z;
  }

  double sampled_loss(const Vec& x, const OracleSample& z) const override {
    return true_loss(x) + detail::noise_inner(x, z);
  }

  Vec grad(const Vec& x, const OracleSample& z) const override {
    Vec g = true_grad(x);
    detail::add_noise(g, z);
    return g;
  }

  Vec hvp(const Vec& x, const OracleSample& z, const Vec& v) const override {
    require_dim(x, dim_, "separable hvp x");
    require_dim(v, dim_, "separable hvp v");
    Vec out(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      out[i] = (d2phi(x[i] - center_[i]) + z.hess_noise) * v[i];
    return out;
  }

  double true_loss(const Vec& x) const override {
    require_dim(x, dim_, "separable loss");
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += phi(x[i] - center_[i]);
    return s;
  }

  Vec true_grad(const Vec& x) const override {
    require_dim(x, dim_, "separable grad");
    Vec g(dim_);
    for (std::size_t i = 0; i < dim_; ++i) g[i] = dphi(x[i] - center_[i]);
    return g;
  }

  double optimal_value() const override { return 0.0; }

  Vec default_start() const override {
    Vec x = center_;
    for (double& v : x) v += 1.0;
    return x;
  }

  const Vec& center() const { return center_; }

 private:
  std::size_t dim_;
  double sigma_g_;
  double sigma_h_;
  Vec center_;
};

// Binary logistic regression over an embedded dataset generated from a
// recorded seed; z picks a sample uniformly. Labels come from a random
// teacher direction with 5% flips, so the data is separable-ish and the loss
// floor is small. Per-sample gradient norm is at most |a|, hence the exact
// declared bound G = max_i |a_i|. L, rho, sigma_h are the standard logistic
// curvature bounds, conservative but valid everywhere.
class LogisticRegression final : public StochasticOracle {
 public:
  LogisticRegression(std::size_t dim, std::size_t n_samples, std::uint64_t seed)
      : dim_(dim), n_(n_samples) {
    if (dim == 0 || n_samples == 0) throw std::invalid_argument("logistic: dim and n_samples must be >= 1");
    RngStream rng(seed, /*stream_label=*/0x1091);
    Vec teacher(dim);
    for (double& v : teacher) v = rng.normal();
    features_.resize(n_, Vec(dim));
    labels_.resize(n_);
    max_feature_norm_ = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      for (double& v : features_[i]) v = rng.normal();
      const double margin = dot(features_[i], teacher);
      double y = margin >= 0.0 ? 1.0 : -1.0;
      if (rng.uniform01() < 0.05) y = -y;
      labels_[i] = y;
      max_feature_norm_ = std::max(max_feature_norm_, norm2(features_[i]));
    }
  }

  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "logistic"; }

  AssumptionConstants constants() const override {
    AssumptionConstants c;
    const double gmax = max_feature_norm_;
    c.grad_bound_g = gmax;
    c.lipschitz_l = 0.25 * gmax * gmax;
    c.rho = gmax * gmax * gmax / (6.0 * std::sqrt(3.0));
    c.sigma_g = gmax;
    c.sigma_h = 0.5 * gmax * gmax;
    c.delta = true_loss(default_start());
    return c;
  }

  OracleSample sample(RngStream& rng) const override {
    OracleSample z;
    z.index = rng.uniform_index(n_);
    return z;
  }

  double sampled_loss(const Vec& x, const OracleSample& z) const override {
    require_dim(x, dim_, "logistic loss");
    return softplus(-labels_[z.index] * dot(features_[z.index], x));
  }

  Vec grad(const Vec& x, const OracleSample& z) const override {
    require_dim(x, dim_, "logistic grad");
    const Vec& a = features_[z.index];
    const double y = labels_[z.index];
    const double s = sigmoid(y * dot(a, x));
    return scaled(a, -(1.0 - s) * y);
  }

  Vec hvp(const Vec& x, const OracleSample& z, const Vec& v) const override {
    require_dim(x, dim_, "logistic hvp x");
    require_dim(v, dim_, "logistic hvp v");
    const Vec& a = features_[z.index];
    const double s = sigmoid(labels_[z.index] * dot(a, x));
    return scaled(a, s * (1.0 - s) * dot(a, v));
  }

  double true_loss(const Vec& x) const override {
    require_dim(x, dim_, "logistic loss");
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += softplus(-labels_[i] * dot(features_[i], x));
    return s / static_cast<double>(n_);
  }

  Vec true_grad(const Vec& x) const override {
    require_dim(x, dim_, "logistic grad");
    Vec g(dim_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double s = sigmoid(labels_[i] * dot(features_[i], x));
      axpy(-(1.0 - s) * labels_[i] / static_cast<double>(n_), features_[i], g);
    }
    return g;
  }

  double optimal_value() const override { return 0.0; }  // lower bound; loss is positive

  std::size_t n_samples() const { return n_; }

 private:
  static double sigmoid(double t) { return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }
  static double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

  std::size_t dim_;
  std::size_t n_;
  std::vector<Vec> features_;
  Vec labels_;
  double max_feature_norm_ = 0.0;
};

// Classic 2-D Rosenbrock (a=1, b=100) with optional additive gradient noise;
// analytic gradient and Hessian. Declared constants are crude box bounds.
class Rosenbrock final : public StochasticOracle {
 public:
  explicit Rosenbrock(double sigma_g) : sigma_g_(sigma_g) {}

  std::size_t dim() const override { return 2; }
  std::string name() const override { return "rosenbrock"; }

  AssumptionConstants constants() const override {
    AssumptionConstants c;
    const double R = kTestBoxInf;
    // Frobenius bound on the Hessian over the box, and a crude third
    // derivative bound from F_xxx = 2400x, F_xxy = -400.
    const double hxx = 2.0 + 400.0 * R + 1200.0 * R * R;
    const double hxy = 400.0 * R;
    c.lipschitz_l = std::sqrt(hxx * hxx + 2.0 * hxy * hxy + 200.0 * 200.0);
    c.rho = 2400.0 * R + 800.0;
    c.sigma_g = sigma_g_;
    c.sigma_h = 0.0;
    const double gx = 2.0 * (1.0 + R) + 400.0 * R * (R + R * R);
    const double gy = 200.0 * (R + R * R);
    c.grad_bound_g = std::sqrt(gx * gx + gy * gy) + 6.0 * sigma_g_;
    c.delta = true_loss(default_start());
    return c;
  }

  OracleSample sample(RngStream& rng) const override {
    OracleSample z;
    z.grad_noise = detail::draw_grad_noise(sigma_g_, 2, rng);
    return z;
  }

  double sampled_loss(const Vec& x, const OracleSample& z) const override {
    return true_loss(x) + detail::noise_inner(x, z);
  }

  Vec grad(const Vec& x, const OracleSample& z) const override {
    Vec g = true_grad(x);
    detail::add_noise(g, z);
    return g;
  }

  Vec hvp(const Vec& x, const OracleSample&, const Vec& v) const override {
    require_dim(x, 2, "rosenbrock hvp x");
    require_dim(v, 2, "rosenbrock hvp v");
    const double hxx = 2.0 - 400.0 * x[1] + 1200.0 * x[0] * x[0];
    const double hxy = -400.0 * x[0];
    return {hxx * v[0] + hxy * v[1], hxy * v[0] + 200.0 * v[1]};
  }

  double true_loss(const Vec& x) const override {
    require_dim(x, 2, "rosenbrock loss");
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
  }

  Vec true_grad(const Vec& x) const override {
    require_dim(x, 2, "rosenbrock grad");
    const double b = x[1] - x[0] * x[0];
    return {-2.0 * (1.0 - x[0]) - 400.0 * x[0] * b, 200.0 * b};
  }

  double optimal_value() const override { return 0.0; }
  Vec default_start() const override { return {-1.2, 1.0}; }

 private:
  double sigma_g_;
};

}  // namespace hessopt
