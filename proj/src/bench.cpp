#include "gpbnn/bench.hpp"

#include "gpbnn/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace gpbnn {

CodePair pair_1d() {
  CodePair pair;
  pair.name = "oned";
  pair.d = 1;
  pair.box = Box::unit(1);
  pair.f_low = [](const Vector& x, std::uint64_t) { return std::sin(8.0 * std::numbers::pi * x(0)); };
  pair.f_high = [](const Vector& x) {
    const double fl = std::sin(8.0 * std::numbers::pi * x(0));
    return (x(0) - std::numbers::sqrt2) * fl * fl;
  };
  return pair;
}

double currin_high(double x1, double x2) {
  const double damp = x2 > 0.0 ? 1.0 - std::exp(-1.0 / (2.0 * x2)) : 1.0;
  const double num = ((2300.0 * x1 + 1900.0) * x1 + 2092.0) * x1 + 60.0;
  const double den = ((100.0 * x1 + 500.0) * x1 + 4.0) * x1 + 20.0;
  return damp * num / den;
}

double currin_filter(double x1, double x2, double delta) {
  const double lo2 = std::max(0.0, x2 - delta);
  return 0.25 * (currin_high(x1 + delta, x2 + delta) + currin_high(x1 + delta, lo2)) +
         0.25 * (currin_high(x1 - delta, x2 + delta) + currin_high(x1 - delta, lo2));
}

CodePair pair_currin(double delta, double noise_std, std::uint64_t seed) {
  if (!(delta >= 0.0 && delta < 0.5)) throw InvalidArgument("CURRIN filter width must lie in [0, 0.5)");
  if (!(noise_std >= 0.0)) throw InvalidArgument("CURRIN noise std must be non-negative");
  CodePair pair;
  pair.name = "currin";
  pair.d = 2;
  pair.box = Box::unit(2);
  pair.noise_std_low = noise_std;
  const std::uint64_t noise_seed = derive_seed(seed, "currin/noise");
  pair.f_low = [delta, noise_std, noise_seed](const Vector& x, std::uint64_t index) {
    const double clean = currin_filter(x(0), x(1), delta);
    return noise_std > 0.0 ? clean + noise_std * counter_normal(noise_seed, index) : clean;
  };
  pair.f_high = [](const Vector& x) { return currin_high(x(0), x(1)); };
  return pair;
}

PendulumParams PendulumParams::from_inputs(const Eigen::Ref<const Vector>& x) {
  if (x.size() != 5) throw InvalidArgument("pendulum inputs are (k, M, theta0, theta_dot0, y0)");
  PendulumParams p;
  p.k = x(0);
  p.M = x(1);
  p.theta0 = x(2);
  p.theta_dot0 = x(3);
  p.y0 = x(4);
  return p;
}

PendulumState pendulum_rhs(const PendulumParams& p, const PendulumState& s, Fidelity fidelity) {
  const bool exact = fidelity == Fidelity::High;
  const double sn = exact ? std::sin(s.theta) : s.theta;
  const double cs = exact ? std::cos(s.theta) : 1.0;
  const double centripetal = exact ? s.theta_dot * s.theta_dot : 0.0;
  // [M+m   m l sn] [y'' ]   [-k y - m l cs theta'^2]
  // [sn    l     ] [th''] = [-g sn                 ]
  const double a11 = p.M + p.m;
  const double a12 = p.m * p.l * sn;
  const double a21 = sn;
  const double a22 = p.l;
  const double r1 = -p.k * s.y - p.m * p.l * cs * centripetal;
  const double r2 = -p.g * sn;
  const double det = a11 * a22 - a12 * a21;
  return {s.y_dot, s.theta_dot, (r1 * a22 - a12 * r2) / det, (a11 * r2 - a21 * r1) / det};
}

double pendulum_energy(const PendulumParams& p, const PendulumState& s) {
  const double kinetic = 0.5 * (p.M + p.m) * s.y_dot * s.y_dot +
                         p.m * p.l * std::sin(s.theta) * s.y_dot * s.theta_dot +
                         0.5 * p.m * p.l * p.l * s.theta_dot * s.theta_dot;
  return kinetic + 0.5 * p.k * s.y * s.y - p.m * p.g * p.l * std::cos(s.theta);
}

namespace {

PendulumState axpy(const PendulumState& s, double h, const PendulumState& d) {
  return {s.y + h * d.y, s.theta + h * d.theta, s.y_dot + h * d.y_dot, s.theta_dot + h * d.theta_dot};
}

double height(const PendulumParams& p, const PendulumState& s) { return s.y - p.l * std::cos(s.theta) + p.l; }
double height_rate(const PendulumParams& p, const PendulumState& s) {
  return s.y_dot + p.l * std::sin(s.theta) * s.theta_dot;
}

// Maximum of the cubic Hermite interpolant on one step.
double hermite_max(double p0, double p1, double m0, double m1, double h) {
  double best = std::max(p0, p1);
  const double a = 6.0 * p0 + 3.0 * h * m0 - 6.0 * p1 + 3.0 * h * m1;
  const double b = -6.0 * p0 - 4.0 * h * m0 + 6.0 * p1 - 2.0 * h * m1;
  const double c = h * m0;
  std::array<double, 2> roots{-1.0, -1.0};
  if (std::abs(a) < 1e-300) {
    if (std::abs(b) > 0.0) roots[0] = -c / b;
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
      if (q != 0.0) roots[0] = c / q;
      roots[1] = q / a;
    }
  }
  for (const double s : roots) {
    if (!(s > 0.0 && s < 1.0)) continue;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double v = (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * h * m0 + (-2 * s3 + 3 * s2) * p1 +
                     (s3 - s2) * h * m1;
    best = std::max(best, v);
  }
  return best;
}

}  // namespace

PendulumRun simulate_pendulum(const PendulumParams& p, double dt, Fidelity fidelity) {
  if (!(dt > 0.0 && dt <= 0.05)) throw InvalidArgument("pendulum step must lie in (0, 0.05]");
  const auto steps = static_cast<long>(std::llround(p.horizon / dt));
  const double h = p.horizon / static_cast<double>(steps);

  PendulumState s{p.y0, p.theta0, p.y_dot0, p.theta_dot0};
  PendulumRun run;
  run.initial_energy = pendulum_energy(p, s);
  double z = height(p, s);
  double zdot = height_rate(p, s);
  run.max_height = z;
  for (long i = 0; i < steps; ++i) {
    const PendulumState k1 = pendulum_rhs(p, s, fidelity);
    const PendulumState k2 = pendulum_rhs(p, axpy(s, 0.5 * h, k1), fidelity);
    const PendulumState k3 = pendulum_rhs(p, axpy(s, 0.5 * h, k2), fidelity);
    const PendulumState k4 = pendulum_rhs(p, axpy(s, h, k3), fidelity);
    s.y += h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
    s.theta += h / 6.0 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta);
    s.y_dot += h / 6.0 * (k1.y_dot + 2.0 * k2.y_dot + 2.0 * k3.y_dot + k4.y_dot);
    s.theta_dot += h / 6.0 * (k1.theta_dot + 2.0 * k2.theta_dot + 2.0 * k3.theta_dot + k4.theta_dot);
    if (!std::isfinite(s.y) || !std::isfinite(s.theta) || !std::isfinite(s.y_dot) || !std::isfinite(s.theta_dot))
      throw IntegrationFailure("pendulum state became non-finite");

    const double z1 = height(p, s);
    const double zdot1 = height_rate(p, s);
    if (zdot > 0.0 && zdot1 <= 0.0) run.max_height = std::max(run.max_height, hermite_max(z, z1, zdot, zdot1, h));
    run.max_height = std::max(run.max_height, z1);
    z = z1;
    zdot = zdot1;
    if (fidelity == Fidelity::High)
      run.max_energy_drift = std::max(run.max_energy_drift, std::abs(pendulum_energy(p, s) - run.initial_energy));
  }
  return run;
}

double pendulum_high(const PendulumParams& p, double dt) { return simulate_pendulum(p, dt, Fidelity::High).max_height; }
double pendulum_low(const PendulumParams& p, double dt) { return simulate_pendulum(p, dt, Fidelity::Low).max_height; }

Box pendulum_box() {
  Box b;
  b.lo.resize(5);
  b.hi.resize(5);
  b.lo << 1.0, 10.0, std::numbers::pi / 4.0, 0.0, 0.0;
  b.hi << 1.4, 12.0, std::numbers::pi / 3.0, 0.1, 0.2;
  return b;
}

CodePair pair_pendulum(double dt) {
  CodePair pair;
  pair.name = "pendulum";
  pair.d = 5;
  pair.box = pendulum_box();
  pair.f_low = [dt](const Vector& x, std::uint64_t) { return pendulum_low(PendulumParams::from_inputs(x), dt); };
  pair.f_high = [dt](const Vector& x) { return pendulum_high(PendulumParams::from_inputs(x), dt); };
  return pair;
}

Vector evaluate_low(const CodePair& pair, const Matrix& x, std::uint64_t first_index) {
  Vector y(x.rows());
  for (Index i = 0; i < x.rows(); ++i) y(i) = pair.f_low(x.row(i).transpose(), first_index + static_cast<std::uint64_t>(i));
  return y;
}

Vector evaluate_high(const CodePair& pair, const Matrix& x) {
  Vector y(x.rows());
  for (Index i = 0; i < x.rows(); ++i) y(i) = pair.f_high(x.row(i).transpose());
  return y;
}

}  // namespace gpbnn
