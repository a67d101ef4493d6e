#include "gpbnn/bench.hpp"
#include "gpbnn/gp.hpp"
#include "gpbnn/random.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

using namespace gpbnn;

namespace {

KernelConfig make_kernel(Vector lengthscales, double variance, double nugget) {
  KernelConfig k;
  k.lengthscales = std::move(lengthscales);
  k.variance = variance;
  k.nugget = nugget;
  return k;
}

Matrix random_points(Index n, Index d, Pcg32& rng) {
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < d; ++k) x(i, k) = rng.uniform();
  return x;
}

double rel_err(double a, double b, double floor) { return std::abs(a - b) / std::max(std::abs(b), floor); }

}  // namespace

TEST_CASE("Matern 5/2 at one lengthscale by direct arithmetic") {
  const double s5 = std::sqrt(5.0);
  const double expected = (1.0 + s5 + 5.0 / 3.0) * std::exp(-s5);
  CHECK(expected == doctest::Approx(0.5240).epsilon(1e-3));
  const KernelConfig k = make_kernel(Vector::Constant(1, 0.3), 1.0, 0.0);
  Vector a(1), b(1);
  a << 0.1;
  b << 0.4;
  CHECK(matern52(a, b, k) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(matern52(b, a, k) == matern52(a, b, k));
  CHECK(matern52(a, a, make_kernel(Vector::Constant(1, 0.3), 2.5, 0.0)) == 2.5);
}

TEST_CASE("product kernel is the product of the one-dimensional profiles") {
  Vector l(2);
  l << 0.2, 0.7;
  const KernelConfig k = make_kernel(l, 1.7, 0.0);
  Vector a(2), b(2);
  a << 0.1, 0.9;
  b << 0.35, 0.2;
  const double expected = 1.7 * matern52_profile(0.25 / 0.2) * matern52_profile(0.7 / 0.7);
  CHECK(matern52(a, b, k) == doctest::Approx(expected).epsilon(1e-14));
  Matrix ab(2, 2);
  ab.row(0) = a.transpose();
  ab.row(1) = b.transpose();
  CHECK(kernel_matrix(ab, ab, k)(0, 1) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("Cholesky prediction matches the dense inverse formula") {
  Pcg32 rng(42);
  for (int inst = 0; inst < 20; ++inst) {
    const Index n = 1 + static_cast<Index>(rng.below(5));
    const Index d = 1 + static_cast<Index>(rng.below(3));
    const Matrix x = random_points(n, d, rng);
    Vector y(n);
    for (Index i = 0; i < n; ++i) y(i) = rng.normal();
    const Vector l = (0.2 + 0.8 * Vector::NullaryExpr(d, [&](Index) { return rng.uniform(); }).array()).matrix();
    const double variance = 0.5 + rng.uniform();
    const double nugget = 1e-6;
    const double shift = rng.normal();
    const GPPosterior gp(make_kernel(l, variance, nugget), x, y, shift);

    Matrix c(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        c(i, j) = matern52(x.row(i).transpose(), x.row(j).transpose(), gp.kernel()) + (i == j ? nugget : 0.0);
    const Matrix c_inv = c.inverse();
    const Vector centered = y.array() - shift;

    const Matrix xs = random_points(4, d, rng);
    Vector mean, var;
    gp.predict(xs, mean, var);
    for (Index m = 0; m < xs.rows(); ++m) {
      Vector r(n);
      for (Index i = 0; i < n; ++i) r(i) = matern52(x.row(i).transpose(), xs.row(m).transpose(), gp.kernel());
      const double mu = shift + r.dot(c_inv * centered);
      const double v = variance - r.dot(c_inv * r);
      CHECK(rel_err(mean(m), mu, 1e-12) < 1e-8);
      CHECK(std::abs(var(m) - v) <= 1e-8 * variance);
      const GPPrediction p = gp.predict(xs.row(m).transpose());
      CHECK(p.mean == doctest::Approx(mean(m)).epsilon(1e-10).scale(1.0));
      CHECK(p.variance == doctest::Approx(var(m)).epsilon(1e-9).scale(variance));
    }
  }
}

TEST_CASE("log marginal likelihood matches the direct formula and its gradient") {
  Pcg32 rng(7);
  for (int inst = 0; inst < 10; ++inst) {
    const Index n = 2 + static_cast<Index>(rng.below(4));
    const Index d = 1 + static_cast<Index>(rng.below(2));
    const Matrix x = random_points(n, d, rng);
    Vector y(n);
    for (Index i = 0; i < n; ++i) y(i) = rng.normal();
    KernelConfig k = make_kernel(Vector::Constant(d, 0.3 + rng.uniform()), 0.5 + rng.uniform(), 1e-3);
    k.nugget_mode = NuggetMode::Estimated;

    Matrix c = kernel_matrix(x, x, k);
    c.diagonal().array() += k.nugget;
    const double direct = -0.5 * y.dot(c.inverse() * y) - 0.5 * std::log(c.determinant()) -
                          0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    Vector grad;
    const double lml = log_marginal_likelihood(x, y, k, &grad);
    CHECK(std::abs(lml - direct) < 1e-8);
    CHECK(GPPosterior(k, x, y, 0.0).log_marginal_likelihood() == doctest::Approx(direct).epsilon(1e-10));

    // Central differences in (log l, log variance, log nugget).
    REQUIRE(grad.size() == d + 2);
    const double h = 1e-6;
    for (Index p = 0; p < d + 2; ++p) {
      auto perturbed = [&](double delta) {
        KernelConfig kp = k;
        if (p < d) kp.lengthscales(p) *= std::exp(delta);
        else if (p == d) kp.variance *= std::exp(delta);
        else kp.nugget *= std::exp(delta);
        return log_marginal_likelihood(x, y, kp);
      };
      const double fd = (perturbed(h) - perturbed(-h)) / (2.0 * h);
      CHECK(std::abs(grad(p) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("noise-free interpolation at training points") {
  Pcg32 rng(3);
  const Matrix x = random_points(8, 2, rng);
  Vector y(8);
  for (Index i = 0; i < 8; ++i) y(i) = std::sin(3.0 * x(i, 0)) + x(i, 1);
  const GPPosterior gp(make_kernel(Vector::Constant(2, 0.5), 1.0, 0.0), x, y, y.mean());
  for (Index i = 0; i < 8; ++i) {
    const GPPrediction p = gp.predict(x.row(i).transpose());
    CHECK(std::abs(p.mean - y(i)) < 1e-6);
    CHECK(p.variance < 1e-6);
  }
  Vector x1(1);
  x1 << 0.3;
  const GPPosterior single(make_kernel(Vector::Constant(1, 0.2), 1.0, 0.0), Matrix::Constant(1, 1, 0.3),
                           Vector::Constant(1, 2.0), 0.0);
  CHECK(single.predict(x1).mean == doctest::Approx(2.0));
  CHECK(single.predict(x1).variance == doctest::Approx(0.0));
}

TEST_CASE("far from the data the prediction reverts to the prior") {
  Pcg32 rng(5);
  const Matrix x = random_points(6, 1, rng);
  const Vector y = x.col(0).array().square();
  const GPPosterior gp(make_kernel(Vector::Constant(1, 0.1), 1.3, 1e-8), x, y, 0.25);
  Vector far(1);
  far << 100.0;
  const GPPrediction p = gp.predict(far);
  CHECK(p.mean == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p.variance == doctest::Approx(1.3).epsilon(1e-12));
}

TEST_CASE("factor reproduces the Gram matrix, which is PSD, and variance stays below the prior") {
  Pcg32 rng(9);
  const Matrix x = random_points(30, 2, rng);
  const Vector y = x.rowwise().sum();
  const KernelConfig k = make_kernel(Vector::Constant(2, 0.4), 2.0, 1e-8 * 2.0);
  const GPPosterior gp(k, x, y, 0.0);
  Matrix c = kernel_matrix(x, x, k);
  c.diagonal().array() += gp.kernel().nugget;
  const Matrix llt = gp.chol() * gp.chol().transpose();
  CHECK((llt - c).norm() <= 1e-8 * c.norm());
  const Eigen::SelfAdjointEigenSolver<Matrix> es(c);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  Vector mean, var;
  gp.predict(random_points(200, 2, rng), mean, var);
  CHECK((var.array() <= 2.0 + 1e-10).all());
  CHECK((var.array() >= 0.0).all());
}

TEST_CASE("nugget escalates on a singular Gram matrix") {
  Matrix x(3, 1);
  x << 0.5, 0.5, 0.5;
  Vector y(3);
  y << 1.0, 1.0, 1.0;
  const GPPosterior gp(make_kernel(Vector::Constant(1, 0.3), 1.0, 0.0), x, y, 0.0);
  CHECK(gp.kernel().nugget > 0.0);
}

TEST_CASE("quantiles of the predictive distribution") {
  const GPPosterior gp(make_kernel(Vector::Constant(1, 0.2), 1.0, 0.0), Matrix::Constant(1, 1, 0.0),
                       Vector::Constant(1, 0.0), 0.0);
  Vector far(1);
  far << 1e3;
  CHECK(gp_quantile(gp, far, 0.5) == doctest::Approx(0.0));
  CHECK(gp_quantile(gp, far, 0.9) == doctest::Approx(1.2815515655446004).epsilon(1e-12));
  CHECK(gp_quantile(gp, far, 0.05) == doctest::Approx(-gp_quantile(gp, far, 0.95)));
}

TEST_CASE("fit on constant outputs predicts the constant") {
  Pcg32 rng(1);
  const Matrix x = random_points(10, 1, rng);
  const Dataset data(x, Vector::Constant(10, 3.5), Box::unit(1));
  const GPPosterior gp = fit_gp(data, NuggetMode::Fixed, 1);
  for (Index i = 0; i < 10; ++i) {
    const GPPrediction p = gp.predict(x.row(i).transpose());
    CHECK(p.mean == doctest::Approx(3.5));
    CHECK(p.variance < 1e-6);
  }
}

TEST_CASE("multi-start fit never ends below its best start") {
  const CodePair pair = pair_1d();
  const Matrix x = stratified_1d(30, {0.0, 1.0}, {}, 2);
  const Dataset data(x, evaluate_low(pair, x), pair.box);
  GPFitTrace trace;
  const GPPosterior gp = fit_gp(data, NuggetMode::Fixed, 4, {}, &trace);
  REQUIRE(trace.start_lml.size() == 10);
  for (const double s : trace.start_lml) CHECK(trace.final_lml >= s - 1e-9);
  CHECK(gp.kernel().nugget == doctest::Approx(1e-8 * gp.kernel().variance));
}

TEST_CASE("fitted low-fidelity GP on the sine data interpolates it") {
  const CodePair pair = pair_1d();
  const Matrix x = stratified_1d(100, {0.0, 1.0}, {}, 1);
  const Dataset data(x, evaluate_low(pair, x), pair.box);
  const GPPosterior gp = fit_gp(data, NuggetMode::Fixed, 1);
  const double l = gp.kernel().lengthscales(0);
  MESSAGE("fitted lengthscale " << l);
  CHECK(l > 0.05);
  CHECK(l < 0.5);
  const Matrix xt = uniform_random(500, pair.box, 2);
  Vector mean, var;
  gp.predict(xt, mean, var);
  const Vector truth = evaluate_low(pair, xt);
  CHECK((mean - truth).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("estimated nugget recovers the CURRIN low-fidelity noise variance") {
  const double noise_var = 0.08;
  const CodePair pair = pair_currin(0.1, std::sqrt(noise_var), 17);
  const Matrix x = maximin_lhs(100, 2, pair.box, 3, 20);
  const Dataset data(x, evaluate_low(pair, x), pair.box);
  const GPPosterior gp = fit_gp(data, NuggetMode::Estimated, 5);
  MESSAGE("estimated nugget " << gp.kernel().nugget);
  CHECK(gp.kernel().nugget > 0.5 * noise_var);
  CHECK(gp.kernel().nugget < 1.5 * noise_var);
}
