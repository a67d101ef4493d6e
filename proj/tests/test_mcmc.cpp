#include "gpbnn/mcmc.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>

using namespace gpbnn;

namespace {

LogDensityFn std_normal() {
  return [](const Vector& x, Vector* grad) {
    if (grad != nullptr) *grad = -x;
    return -0.5 * x.squaredNorm();
  };
}

double sample_variance(const Vector& v) { return (v.array() - v.mean()).square().sum() / double(v.size() - 1); }

}  // namespace

TEST_CASE("uphill proposals are always accepted") {
  Pcg32 rng(1);
  auto log_target = [](int s) { return s == 1 ? 0.0 : -1.0; };
  auto propose = [](int, Pcg32&) { return 1; };
  for (int i = 0; i < 100; ++i) {
    const auto step = mh_transition(0, -1.0, log_target, propose, rng);
    CHECK(step.accepted);
    CHECK(step.state == 1);
  }
}

TEST_CASE("two-state chain matches its stationary law") {
  const std::array<double, 2> pi{0.3, 0.7};
  auto log_target = [&](int s) { return std::log(pi[static_cast<std::size_t>(s)]); };
  auto flip = [](int s, Pcg32&) { return 1 - s; };
  Pcg32 rng(2);
  int state = 0;
  double lp = log_target(state);
  std::array<long, 2> visits{0, 0};
  const long n = 100000;
  for (long t = 0; t < n; ++t) {
    const auto step = mh_transition(state, lp, log_target, flip, rng);
    state = step.state;
    lp = step.log_density;
    ++visits[static_cast<std::size_t>(state)];
  }
  CHECK(std::abs(double(visits[0]) / n - pi[0]) < 0.01);
  CHECK(std::abs(double(visits[1]) / n - pi[1]) < 0.01);
}

TEST_CASE("three-state chain satisfies detailed balance") {
  const std::array<double, 3> pi{0.2, 0.3, 0.5};
  auto log_target = [&](int s) { return std::log(pi[static_cast<std::size_t>(s)]); };
  auto other = [](int s, Pcg32& r) { return (s + 1 + static_cast<int>(r.below(2))) % 3; };
  Pcg32 rng(3);
  int state = 0;
  double lp = log_target(state);
  double counts[3][3] = {};
  const long n = 1000000;
  for (long t = 0; t < n; ++t) {
    const auto step = mh_transition(state, lp, log_target, other, rng);
    counts[state][step.state] += 1.0;
    state = step.state;
    lp = step.log_density;
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      const double fij = counts[i][j] / n;
      const double fji = counts[j][i] / n;
      // Exact flow pi_i P_ij with P_ij = min(1, pi_j / pi_i) / 2.
      const double exact = pi[i] * 0.5 * std::min(1.0, pi[j] / pi[i]);
      const double tol = 4.0 * std::sqrt(exact / n);
      CAPTURE(i);
      CAPTURE(j);
      CHECK(std::abs(fij - fji) < tol);
      CHECK(std::abs(fij - exact) < tol);
    }
  }
}

TEST_CASE("random-walk Metropolis adapts towards one quarter acceptance") {
  MHConfig cfg;
  cfg.n_samples = 20000;
  cfg.warmup = 5000;
  cfg.seed = 4;
  double adapted = 0.0;
  const SampleSet s = mh_sample([](const Vector& x) { return -0.5 * x.squaredNorm(); }, Vector::Zero(3), cfg, &adapted);
  CHECK(s.accept_rate == doctest::Approx(0.25).epsilon(0.2));
  CHECK(adapted > 0.0);
  for (Index k = 0; k < 3; ++k) CHECK(std::abs(s.draws.col(k).mean()) < 0.1);
}

TEST_CASE("leapfrog on a flat target is free motion") {
  const LogDensityFn flat = [](const Vector& x, Vector* grad) {
    if (grad != nullptr) *grad = Vector::Zero(x.size());
    return 0.0;
  };
  Vector q(2), p(2);
  q << 0.5, -1.0;
  p << 0.3, 2.0;
  const LeapfrogResult r = leapfrog(q, p, 0.1, 7, flat);
  CHECK((r.position - (q + 7 * 0.1 * p)).norm() < 1e-14);
  CHECK((r.momentum - p).norm() == 0.0);
}

TEST_CASE("leapfrog is reversible") {
  const LogDensityFn target = [](const Vector& x, Vector* grad) {
    if (grad != nullptr) {
      grad->resize(2);
      (*grad)(0) = -x(0) - 0.5 * x(1) * x(1) * x(0);
      (*grad)(1) = -2.0 * x(1) - 0.5 * x(0) * x(0) * x(1);
    }
    return -0.5 * x(0) * x(0) - x(1) * x(1) - 0.25 * x(0) * x(0) * x(1) * x(1);
  };
  Vector q(2), p(2);
  q << 0.7, -0.2;
  p << -0.4, 1.1;
  const LeapfrogResult fwd = leapfrog(q, p, 0.05, 40, target);
  const LeapfrogResult back = leapfrog(fwd.position, -fwd.momentum, 0.05, 40, target);
  CHECK((back.position - q).norm() < 1e-10);
  CHECK((-back.momentum - p).norm() < 1e-10);
}

TEST_CASE("leapfrog preserves phase-space volume") {
  const LogDensityFn target = [](const Vector& x, Vector* grad) {
    if (grad != nullptr) {
      grad->resize(1);
      (*grad)(0) = -x(0) - x(0) * x(0) * x(0);
    }
    return -0.5 * x(0) * x(0) - 0.25 * std::pow(x(0), 4);
  };
  auto step = [&](const Vector& z) {
    const LeapfrogResult r = leapfrog(z.head(1), z.tail(1), 0.1, 1, target);
    Vector out(2);
    out << r.position(0), r.momentum(0);
    return out;
  };
  Vector z(2);
  z << 0.8, -0.3;
  const double h = 1e-6;
  Matrix jac(2, 2);
  for (int c = 0; c < 2; ++c) {
    Vector up = z, dn = z;
    up(c) += h;
    dn(c) -= h;
    jac.col(c) = (step(up) - step(dn)) / (2.0 * h);
  }
  CHECK(std::abs(jac.determinant() - 1.0) < 1e-6);
}

TEST_CASE("leapfrog energy error is second order in the step") {
  const LogDensityFn target = std_normal();
  Vector q(1), p(1);
  q << 1.0;
  p << 0.5;
  auto energy_error = [&](double eps) {
    const int n = static_cast<int>(std::lround(1.0 / eps));
    const LeapfrogResult r = leapfrog(q, p, eps, n, target);
    const double h0 = 0.5 * q.squaredNorm() + 0.5 * p.squaredNorm();
    const double h1 = 0.5 * r.position.squaredNorm() + 0.5 * r.momentum.squaredNorm();
    return std::abs(h1 - h0);
  };
  const double ratio = energy_error(0.1) / energy_error(0.05);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("NUTS recovers a five-dimensional standard Gaussian") {
  ChainConfig cfg;
  cfg.n_samples = 10000;
  cfg.warmup = 1000;
  cfg.seed = 11;
  const SampleSet s = hmc_sample(std_normal(), Vector::Constant(5, 2.0), cfg);
  REQUIRE(s.size() == 10000);
  for (Index k = 0; k < 5; ++k) {
    CHECK(std::abs(s.draws.col(k).mean()) < 0.05);
    const double v = sample_variance(s.draws.col(k));
    CHECK(v > 0.9);
    CHECK(v < 1.1);
  }
  CHECK(s.accept_rate > 0.6);
  CHECK(s.accept_rate <= 1.0);
  CHECK(s.divergences == 0);
}

TEST_CASE("NUTS recovers a strongly correlated Gaussian") {
  const double rho = 0.9;
  Matrix prec(2, 2);
  prec << 1.0, -rho, -rho, 1.0;
  prec /= 1.0 - rho * rho;
  const LogDensityFn target = [prec](const Vector& x, Vector* grad) {
    if (grad != nullptr) *grad = -prec * x;
    return -0.5 * x.dot(prec * x);
  };
  ChainConfig cfg;
  cfg.n_samples = 5000;
  cfg.seed = 12;
  const SampleSet s = hmc_sample(target, Vector::Zero(2), cfg);
  const Vector a = s.draws.col(0).array() - s.draws.col(0).mean();
  const Vector b = s.draws.col(1).array() - s.draws.col(1).mean();
  const double corr = a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
  CHECK(std::abs(corr - rho) < 0.05);
}

TEST_CASE("fixed-length HMC also samples the target") {
  ChainConfig cfg;
  cfg.kind = SamplerKind::HMC;
  cfg.n_leapfrog = 10;
  cfg.n_samples = 5000;
  cfg.seed = 13;
  const SampleSet s = hmc_sample(std_normal(), Vector::Zero(3), cfg);
  for (Index k = 0; k < 3; ++k) {
    CHECK(std::abs(s.draws.col(k).mean()) < 0.1);
    CHECK(std::abs(sample_variance(s.draws.col(k)) - 1.0) < 0.15);
  }
}

TEST_CASE("chains are reproducible from the seed") {
  ChainConfig cfg;
  cfg.n_samples = 200;
  cfg.warmup = 100;
  cfg.seed = 5;
  const SampleSet a = hmc_sample(std_normal(), Vector::Ones(4), cfg);
  const SampleSet b = hmc_sample(std_normal(), Vector::Ones(4), cfg);
  CHECK(a.draws == b.draws);
  cfg.seed = 6;
  CHECK(hmc_sample(std_normal(), Vector::Ones(4), cfg).draws != a.draws);
}

TEST_CASE("trajectories leaving the support are flagged as divergent") {
  // Density proportional to 1 - x^2 on (-1, 1); outside it the log density is -inf.
  const LogDensityFn bounded = [](const Vector& x, Vector* grad) {
    const double r = 1.0 - x.squaredNorm();
    if (grad != nullptr) *grad = r > 0.0 ? Vector(-2.0 * x / r) : Vector::Constant(x.size(), std::nan(""));
    return r > 0.0 ? std::log(r) : -std::numeric_limits<double>::infinity();
  };
  ChainConfig cfg;
  cfg.n_samples = 2000;
  cfg.warmup = 200;
  cfg.seed = 1;
  const SampleSet s = hmc_sample(bounded, Vector::Zero(1), cfg);
  CHECK(s.divergences > 0);
  CHECK((s.draws.array().abs() < 1.0).all());
}

TEST_CASE("effective sample size of independent and autocorrelated draws") {
  Pcg32 rng(8);
  const Index n = 200000;
  Matrix draws(n, 2);
  const double phi = 0.8;
  double ar = 0.0;
  for (Index i = 0; i < n; ++i) {
    draws(i, 0) = rng.normal();
    ar = phi * ar + std::sqrt(1.0 - phi * phi) * rng.normal();
    draws(i, 1) = ar;
  }
  const Vector ess = effective_sample_size(draws);
  CHECK(ess(0) == doctest::Approx(double(n)).epsilon(0.05));
  // AR(1): n (1 - phi) / (1 + phi)
  CHECK(ess(1) == doctest::Approx(n * (1.0 - phi) / (1.0 + phi)).epsilon(0.1));
}

TEST_CASE("chain configuration invariants") {
  ChainConfig cfg;
  cfg.n_samples = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.n_samples = 1;
  cfg.target_accept = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.target_accept = 0.8;
  cfg.max_tree_depth = 16;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}
