#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

#include "hessopt/rng.hpp"
#include "hessopt/vec.hpp"

namespace hessopt {

// Problem-level smoothness and noise constants. Where a problem cannot state
// an exact constant (e.g. a gradient bound for an objective with unbounded
// gradients), the declared value is a documented bound valid on the problem's
// test box.
struct AssumptionConstants {
  double delta = 0.0;       // initial suboptimality bound, >= 0
  double lipschitz_l = 1.0; // gradient Lipschitz constant, > 0
  double sigma_g = 0.0;     // gradient noise std bound, >= 0
  double sigma_h = 0.0;     // Hessian-vector noise bound per unit |v|, >= 0
  double rho = 0.0;         // Hessian Lipschitz constant, >= 0
  double grad_bound_g = 1.0;// per-sample gradient norm bound, > 0

  void validate() const {
    auto bad = [](double v) { return !std::isfinite(v); };
    if (bad(delta) || delta < 0) throw std::invalid_argument("delta must be finite and >= 0");
    if (bad(lipschitz_l) || lipschitz_l <= 0) throw std::invalid_argument("lipschitz_l must be > 0");
    if (bad(sigma_g) || sigma_g < 0) throw std::invalid_argument("sigma_g must be >= 0");
    if (bad(sigma_h) || sigma_h < 0) throw std::invalid_argument("sigma_h must be >= 0");
    if (bad(rho) || rho < 0) throw std::invalid_argument("rho must be >= 0");
    if (bad(grad_bound_g) || grad_bound_g <= 0) throw std::invalid_argument("grad_bound_g must be > 0");
  }
};

// One realized draw z. The realization is materialized at sample() time so
// that grad(x, z) and hvp(x, z, v) are pure functions of (x, z, v): the same
// sample can be replayed at several points, which the gradient-difference
// update and the finite-difference checks both rely on.
struct OracleSample {
  Vec grad_noise;          // realized additive gradient noise (empty = none)
  double hess_noise = 0.0; // realized curvature perturbation scale
  std::uint64_t index = 0; // dataset index for finite-sum problems
};

struct NoReferenceError : std::runtime_error {
  NoReferenceError() : std::runtime_error("oracle declares no exact reference (true_loss/true_grad unavailable)") {}
};

// First/second-order stochastic oracle. Implementations are immutable after
// construction and safe to share across concurrent runs; per-run randomness
// lives in the caller's RngStream.
class StochasticOracle {
 public:
  virtual ~StochasticOracle() = default;

  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;
  virtual AssumptionConstants constants() const = 0;

  virtual OracleSample sample(RngStream& rng) const = 0;

  // Sampled loss f(x, z); the channel fd_check_grad differentiates.
  virtual double sampled_loss(const Vec& x, const OracleSample& z) const = 0;
  virtual Vec grad(const Vec& x, const OracleSample& z) const = 0;
  virtual Vec hvp(const Vec& x, const OracleSample& z, const Vec& v) const = 0;

  // Exact reference quantities, for measurement only; never fed to optimizers.
  virtual bool has_reference() const { return true; }
  virtual double true_loss(const Vec& x) const = 0;
  virtual Vec true_grad(const Vec& x) const = 0;

  // Known infimum of F (or a lower bound), when available.
  virtual double optimal_value() const { return 0.0; }
  virtual Vec default_start() const { return Vec(dim(), 0.0); }
};

// Pass-through wrapper that counts oracle calls; one instance per run.
class CountingOracle final : public StochasticOracle {
 public:
  explicit CountingOracle(const StochasticOracle& inner) : inner_(inner) {}

  std::size_t dim() const override { return inner_.dim(); }
  std::string name() const override { return inner_.name(); }
  AssumptionConstants constants() const override { return inner_.constants(); }

  OracleSample sample(RngStream& rng) const override {
    ++sample_calls_;
    return inner_.sample(rng);
  }
  double sampled_loss(const Vec& x, const OracleSample& z) const override {
    ++loss_calls_;
    return inner_.sampled_loss(x, z);
  }
  Vec grad(const Vec& x, const OracleSample& z) const override {
    ++grad_calls_;
    return inner_.grad(x, z);
  }
  Vec hvp(const Vec& x, const OracleSample& z, const Vec& v) const override {
    ++hvp_calls_;
    return inner_.hvp(x, z, v);
  }
  bool has_reference() const override { return inner_.has_reference(); }
  double true_loss(const Vec& x) const override { return inner_.true_loss(x); }
  Vec true_grad(const Vec& x) const override { return inner_.true_grad(x); }
  double optimal_value() const override { return inner_.optimal_value(); }
  Vec default_start() const override { return inner_.default_start(); }

  long grad_calls() const { return grad_calls_; }
  long hvp_calls() const { return hvp_calls_; }
  long sample_calls() const { return sample_calls_; }

 private:
  const StochasticOracle& inner_;
  mutable long grad_calls_ = 0;
  mutable long hvp_calls_ = 0;
  mutable long sample_calls_ = 0;
  mutable long loss_calls_ = 0;
};

}  // namespace hessopt
