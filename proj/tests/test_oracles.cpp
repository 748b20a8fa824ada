#include "doctest.h"

#include <cmath>

#include "hessopt/fd_check.hpp"
#include "hessopt/mlp.hpp"
#include "hessopt/problems.hpp"

using namespace hessopt;

namespace {

// Measurement-free oracle used to exercise the missing-reference error path.
struct OpaqueOracle final : StochasticOracle {
  std::size_t dim() const override { return 1; }
  std::string name() const override { return "opaque"; }
  AssumptionConstants constants() const override { return {}; }
  OracleSample sample(RngStream&) const override { return {}; }
  double sampled_loss(const Vec& x, const OracleSample&) const override { return x[0] * x[0]; }
  Vec grad(const Vec& x, const OracleSample&) const override { return {2.0 * x[0]}; }
  Vec hvp(const Vec&, const OracleSample&, const Vec& v) const override { return {2.0 * v[0]}; }
  bool has_reference() const override { return false; }
  double true_loss(const Vec&) const override { throw NoReferenceError(); }
  Vec true_grad(const Vec&) const override { throw NoReferenceError(); }
};

// Sign-flips one Hessian-action coordinate; the finite-difference check must
// catch it.
struct CorruptedHvp final : StochasticOracle {
  explicit CorruptedHvp(const StochasticOracle& inner) : inner_(inner) {}
  std::size_t dim() const override { return inner_.dim(); }
  std::string name() const override { return "corrupted"; }
  AssumptionConstants constants() const override { return inner_.constants(); }
  OracleSample sample(RngStream& rng) const override { return inner_.sample(rng); }
  double sampled_loss(const Vec& x, const OracleSample& z) const override {
    return inner_.sampled_loss(x, z);
  }
  Vec grad(const Vec& x, const OracleSample& z) const override { return inner_.grad(x, z); }
  Vec hvp(const Vec& x, const OracleSample& z, const Vec& v) const override {
    Vec out = inner_.hvp(x, z, v);
    out[0] = -out[0];
    return out;
  }
  double true_loss(const Vec& x) const override { return inner_.true_loss(x); }
  Vec true_grad(const Vec& x) const override { return inner_.true_grad(x); }
  const StochasticOracle& inner_;
};

}  // namespace

TEST_CASE("noiseless quadratic: grad equals true gradient for any sample") {
  NoisyQuadratic p({1.0, 1.0}, {0.0, 0.0}, 0.0);
  RngStream rng(1);
  const OracleSample z = p.sample(rng);
  CHECK(z.grad_noise.empty());
  const Vec g = p.grad({1.0, 2.0}, z);
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(2.0));
}

TEST_CASE("samples are deterministic given the rng state") {
  NoisyQuadratic p(4, 10.0, 1.0, 7);
  RngStream a(99), b(99);
  const OracleSample za = p.sample(a);
  const OracleSample zb = p.sample(b);
  CHECK(za.grad_noise == zb.grad_noise);
}

TEST_CASE("same (x, z) re-queries are bit-identical") {
  NoisyQuadratic p(6, 10.0, 1.0, 7);
  RngStream rng(3);
  const OracleSample z = p.sample(rng);
  Vec x(6), v(6);
  for (int i = 0; i < 6; ++i) {
    x[i] = 0.3 * i - 1.0;
    v[i] = 0.1 * i + 0.5;
  }
  CHECK(p.grad(x, z) == p.grad(x, z));
  CHECK(p.hvp(x, z, v) == p.hvp(x, z, v));
}

TEST_CASE("Monte-Carlo gradient noise matches sigma_g^2 on the noisy quadratic") {
  NoisyQuadratic p(20, 10.0, 1.0, 11);
  RngStream rng(5);
  double sum = 0.0;
  long count = 0;
  for (int i = 0; i < 10; ++i) {
    Vec x(20);
    for (double& c : x) c = rng.uniform(-2.0, 2.0);
    const Vec tg = p.true_grad(x);
    for (int k = 0; k < 10000; ++k) {
      const OracleSample z = p.sample(rng);
      const double e = norm2(sub(p.grad(x, z), tg));
      sum += e * e;
      ++count;
    }
  }
  const double est = sum / count;
  CHECK(est > 0.95);
  CHECK(est < 1.05);
}

TEST_CASE("hessian action: diagonal spectrum and zero direction") {
  NoisyQuadratic p({1.0, 3.0}, {0.0, 0.0}, 0.0);
  RngStream rng(1);
  const OracleSample z = p.sample(rng);
  const Vec hv = p.hvp({5.0, -2.0}, z, {1.0, 1.0});
  CHECK(hv[0] == doctest::Approx(1.0));
  CHECK(hv[1] == doctest::Approx(3.0));

  SeparableNonconvex sep(4, 1.0, 0.5);
  RngStream rng2(2);
  const OracleSample zs = sep.sample(rng2);
  const Vec zero = sep.hvp({1.0, 2.0, 3.0, 4.0}, zs, Vec(4, 0.0));
  for (double c : zero) CHECK(c == 0.0);
}

TEST_CASE("hessian noise deviation is bounded by sigma_h |v| for every sample") {
  SeparableNonconvex p(8, 0.0, 0.7);
  RngStream rng(21);
  for (int i = 0; i < 2000; ++i) {
    Vec x(8), v(8);
    for (double& c : x) c = rng.uniform(-3.0, 3.0);
    for (double& c : v) c = rng.uniform(-2.0, 2.0);
    OracleSample z = p.sample(rng);
    OracleSample clean = z;
    clean.hess_noise = 0.0;
    const double dev = norm2(sub(p.hvp(x, z, v), p.hvp(x, clean, v)));
    REQUIRE(dev <= 0.7 * norm2(v) + 1e-15);
  }
}

TEST_CASE("true loss and gradient on the identity quadratic") {
  NoisyQuadratic p({1.0, 1.0}, {0.0, 0.0}, 0.0);
  CHECK(p.true_loss({1.0, 2.0}) == doctest::Approx(2.5));
  const Vec g = p.true_grad({1.0, 2.0});
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(2.0));
}

TEST_CASE("gradient vanishes at a constructed stationary point") {
  SeparableNonconvex p(9, 1.0, 0.5);
  const Vec g = p.true_grad(p.center());
  CHECK(norm2(g) == 0.0);
}

TEST_CASE("measurement-free oracle reports missing reference explicitly") {
  OpaqueOracle p;
  CHECK(!p.has_reference());
  CHECK_THROWS_AS(p.true_loss({1.0}), NoReferenceError);
  CHECK_THROWS_AS(p.true_grad({1.0}), NoReferenceError);
}

TEST_CASE("dimension mismatch is rejected") {
  NoisyQuadratic p(3, 10.0, 0.0, 1);
  RngStream rng(1);
  const OracleSample z = p.sample(rng);
  CHECK_THROWS_AS(p.grad({1.0, 2.0}, z), std::invalid_argument);
  CHECK_THROWS_AS(p.hvp({1.0, 2.0, 3.0}, z, {1.0}), std::invalid_argument);
}

TEST_CASE("fd check passes on the quadratic across epsilon scales") {
  NoisyQuadratic p(5, 10.0, 0.5, 13);
  RngStream rng(17);
  Vec x(5), v(5);
  for (double& c : x) c = rng.uniform(-2.0, 2.0);
  for (double& c : v) c = rng.uniform(-1.0, 1.0);
  const OracleSample z = p.sample(rng);
  for (double eps : {1e-7, 1e-5, 1e-3}) {
    CHECK(fd_check_grad(p, x, z, eps, 1e-6).pass);
    CHECK(fd_check_hvp(p, x, z, v, eps, 1e-6).pass);
  }
}

TEST_CASE("fd check fails on a deliberately corrupted hessian action") {
  TwoLayerMlp p(4, 20, 3);
  CorruptedHvp bad(p);
  RngStream rng(5);
  Vec x(p.dim()), v(p.dim());
  for (double& c : x) c = rng.uniform(-1.0, 1.0);
  for (double& c : v) c = rng.uniform(-1.0, 1.0);
  const OracleSample z = p.sample(rng);
  CHECK(fd_check_hvp(p, x, z, v, fd_eps(x), 1e-4).pass);
  CHECK(!fd_check_hvp(bad, x, z, v, fd_eps(x), 1e-4).pass);
}

TEST_CASE("hvp is linear in v") {
  TwoLayerMlp p(6, 30, 9);
  RngStream rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Vec x(p.dim()), u(p.dim()), v(p.dim());
    for (double& c : x) c = rng.uniform(-1.0, 1.0);
    for (double& c : u) c = rng.uniform(-1.0, 1.0);
    for (double& c : v) c = rng.uniform(-1.0, 1.0);
    const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
    const OracleSample z = p.sample(rng);
    Vec arg = scaled(u, a);
    axpy(b, v, arg);
    const Vec lhs = p.hvp(x, z, arg);
    Vec rhs = scaled(p.hvp(x, z, u), a);
    axpy(b, p.hvp(x, z, v), rhs);
    const double scale = std::max({norm2(lhs), norm2(rhs), 1.0});
    REQUIRE(norm2(sub(lhs, rhs)) / scale <= 1e-12);
  }
}
