#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hessopt/oracle.hpp"
#include "hessopt/rng.hpp"
#include "hessopt/vec.hpp"

namespace hessopt {

// Fixed two-layer tanh network with squared loss on teacher-generated data,
// so the loss floor is exactly attainable. Parameters are flattened as
// [W1 (h x in, row-major), b1 (h), W2 (h), b2 (1)], input dimension 4.
//
// Per-sample gradients come from plain backprop. The per-sample Hessian
// action along v is computed by forward-over-reverse differentiation:
// propagate directional tangents (Ra, Rh, Ryhat) through the forward pass,
// then differentiate each backprop quantity along them. No general autodiff
// is involved; the formulas are hand-derived for this architecture:
//
//   a      = W1 u + b1          Ra     = V_W1 u + V_b1
//   h      = tanh(a)            Rh     = (1 - h^2) . Ra
//   yhat   = W2'h + b2          Ryhat  = V_W2'h + W2'Rh + V_b2
//   r      = yhat - y           Rr     = Ryhat
//   g_b2   = r                  Rg_b2  = Rr
//   g_W2   = r h                Rg_W2  = Rr h + r Rh
//   d_j    = r W2_j (1-h_j^2)   Rd_j   = Rr W2_j (1-h_j^2) + r V_W2j (1-h_j^2)
//                                        - 2 r W2_j h_j Rh_j
//   g_W1   = d u'               Rg_W1  = Rd u'
//   g_b1   = d                  Rg_b1  = Rd
class TwoLayerMlp final : public StochasticOracle {
 public:
  static constexpr std::size_t kInputDim = 4;

  TwoLayerMlp(std::size_t hidden_width, std::size_t n_samples, std::uint64_t seed)
      : h_(hidden_width), n_(n_samples) {
    if (hidden_width == 0 || n_samples == 0)
      throw std::invalid_argument("mlp: hidden_width and n_samples must be >= 1");
    RngStream data_rng(seed, /*stream_label=*/0x317);
    Vec teacher(param_count());
    const double w2_scale = 1.0 / std::sqrt(static_cast<double>(h_));
    for (std::size_t i = 0; i < param_count(); ++i) {
      const bool second_layer = i >= h_ * (kInputDim + 1);
      teacher[i] = (second_layer ? w2_scale : 1.0) * data_rng.normal();
    }
    inputs_.resize(n_, Vec(kInputDim));
    targets_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (double& v : inputs_[i]) v = data_rng.normal();
      targets_[i] = forward(teacher, inputs_[i]);
      max_input_norm_ = std::max(max_input_norm_, norm2(inputs_[i]));
      max_target_ = std::max(max_target_, std::fabs(targets_[i]));
    }
    RngStream start_rng(seed, /*stream_label=*/0x57a27);
    start_.resize(param_count());
    for (double& v : start_) v = 0.5 * start_rng.normal();
  }

  std::size_t param_count() const { return h_ * kInputDim + h_ + h_ + 1; }
  std::size_t dim() const override { return param_count(); }
  std::string name() const override { return "mlp"; }

  AssumptionConstants constants() const override {
    // Crude but valid box bounds (|x|_inf <= 10, tanh and its derivatives
    // bounded by 1). None of the schedule-critical experiments run on the
    // network, so tightness is not needed here.
    AssumptionConstants c;
    const double B = 10.0;
    const double hw = static_cast<double>(h_);
    const double residual = hw * B + B + max_target_;
    const double act_path = 1.0 + max_input_norm_;
    c.grad_bound_g = residual * std::sqrt(hw * act_path * act_path * (B * B + 1.0) + hw + 1.0);
    c.lipschitz_l = 4.0 * (1.0 + hw * B * B * act_path * act_path) * (1.0 + residual);
    c.rho = 8.0 * c.lipschitz_l * act_path * (1.0 + B);
    c.sigma_g = c.grad_bound_g;
    c.sigma_h = 2.0 * c.lipschitz_l;
    c.delta = true_loss(default_start());
    return c;
  }

  OracleSample sample(RngStream& rng) const override {
    OracleSample z;
    z.index = rng.uniform_index(n_);
    return z;
  }

  double sampled_loss(const Vec& x, const OracleSample& z) const override {
    require_dim(x, param_count(), "mlp loss");
    const double r = forward(x, inputs_[z.index]) - targets_[z.index];
    return 0.5 * r * r;
  }

  Vec grad(const Vec& x, const OracleSample& z) const override {
    require_dim(x, param_count(), "mlp grad");
    return sample_grad(x, inputs_[z.index], targets_[z.index]);
  }

  Vec hvp(const Vec& x, const OracleSample& z, const Vec& v) const override {
    require_dim(x, param_count(), "mlp hvp x");
    require_dim(v, param_count(), "mlp hvp v");
    return sample_hvp(x, v, inputs_[z.index], targets_[z.index]);
  }

  double true_loss(const Vec& x) const override {
    require_dim(x, param_count(), "mlp loss");
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double r = forward(x, inputs_[i]) - targets_[i];
      s += 0.5 * r * r;
    }
    return s / static_cast<double>(n_);
  }

  Vec true_grad(const Vec& x) const override {
    require_dim(x, param_count(), "mlp grad");
    Vec g(param_count(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      Vec gi = sample_grad(x, inputs_[i], targets_[i]);
      axpy(inv_n, gi, g);
    }
    return g;
  }

  double optimal_value() const override { return 0.0; }
  Vec default_start() const override { return start_; }

 private:
  // Parameter block offsets within the flat vector.
  std::size_t w1_at(std::size_t j, std::size_t k) const { return j * kInputDim + k; }
  std::size_t b1_at(std::size_t j) const { return h_ * kInputDim + j; }
  std::size_t w2_at(std::size_t j) const { return h_ * (kInputDim + 1) + j; }
  std::size_t b2_at() const { return h_ * (kInputDim + 2); }

  double forward(const Vec& x, const Vec& u) const {
    double yhat = x[b2_at()];
    for (std::size_t j = 0; j < h_; ++j) {
      double a = x[b1_at(j)];
      for (std::size_t k = 0; k < kInputDim; ++k) a += x[w1_at(j, k)] * u[k];
      yhat += x[w2_at(j)] * std::tanh(a);
    }
    return yhat;
  }

  Vec sample_grad(const Vec& x, const Vec& u, double y) const {
    Vec hid(h_);
    double yhat = x[b2_at()];
    for (std::size_t j = 0; j < h_; ++j) {
      double a = x[b1_at(j)];
      for (std::size_t k = 0; k < kInputDim; ++k) a += x[w1_at(j, k)] * u[k];
      hid[j] = std::tanh(a);
      yhat += x[w2_at(j)] * hid[j];
    }
    const double r = yhat - y;
    Vec g(param_count());
    g[b2_at()] = r;
    for (std::size_t j = 0; j < h_; ++j) {
      g[w2_at(j)] = r * hid[j];
      const double d = r * x[w2_at(j)] * (1.0 - hid[j] * hid[j]);
      g[b1_at(j)] = d;
      for (std::size_t k = 0; k < kInputDim; ++k) g[w1_at(j, k)] = d * u[k];
    }
    return g;
  }

  Vec sample_hvp(const Vec& x, const Vec& v, const Vec& u, double y) const {
    Vec hid(h_), rhid(h_);
    double yhat = x[b2_at()];
    double ryhat = v[b2_at()];
    for (std::size_t j = 0; j < h_; ++j) {
      double a = x[b1_at(j)];
      double ra = v[b1_at(j)];
      for (std::size_t k = 0; k < kInputDim; ++k) {
        a += x[w1_at(j, k)] * u[k];
        ra += v[w1_at(j, k)] * u[k];
      }
      hid[j] = std::tanh(a);
      rhid[j] = (1.0 - hid[j] * hid[j]) * ra;
      yhat += x[w2_at(j)] * hid[j];
      ryhat += v[w2_at(j)] * hid[j] + x[w2_at(j)] * rhid[j];
    }
    const double r = yhat - y;
    const double rr = ryhat;
    Vec out(param_count());
    out[b2_at()] = rr;
    for (std::size_t j = 0; j < h_; ++j) {
      const double sech2 = 1.0 - hid[j] * hid[j];
      out[w2_at(j)] = rr * hid[j] + r * rhid[j];
      const double rd = rr * x[w2_at(j)] * sech2 + r * v[w2_at(j)] * sech2 -
                        2.0 * r * x[w2_at(j)] * hid[j] * rhid[j];
      out[b1_at(j)] = rd;
      for (std::size_t k = 0; k < kInputDim; ++k) out[w1_at(j, k)] = rd * u[k];
    }
    return out;
  }

  std::size_t h_;
  std::size_t n_;
  std::vector<Vec> inputs_;
  Vec targets_;
  Vec start_;
  double max_input_norm_ = 0.0;
  double max_target_ = 0.0;
};

}  // namespace hessopt
