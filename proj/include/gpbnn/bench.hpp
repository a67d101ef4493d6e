#pragma once

#include "gpbnn/design.hpp"
#include "gpbnn/types.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace gpbnn {

/// A pair of codes on a common input box. f_low may be stochastic; its
/// randomness is a pure function of the evaluation index passed in.
struct CodePair {
  std::string name;
  Index d = 1;
  Box box;
  std::function<double(const Vector& x, std::uint64_t eval_index)> f_low;
  std::function<double(const Vector& x)> f_high;
  double noise_std_low = 0.0;
};

/// f_L(x) = sin(8 pi x), f_H(x) = (x - sqrt 2) f_L(x)^2 on [0, 1].
CodePair pair_1d();

double currin_high(double x1, double x2);
/// Four-point filter of currin_high with half-width delta.
double currin_filter(double x1, double x2, double delta);
/// CURRIN pair on [0,1]^2; the low code adds N(0, noise_std^2) noise drawn
/// from a counter-based stream keyed by (seed, eval_index).
CodePair pair_currin(double delta, double noise_std, std::uint64_t seed);

/// Mass M on a vertical spring (stiffness k) carrying a pendulum of length l
/// and bob mass m. y is the displacement of M from static equilibrium and
/// theta the pendulum angle from the downward vertical.
struct PendulumParams {
  double k = 1.2;
  double M = 11.0;
  double theta0 = 0.9;
  double theta_dot0 = 0.05;
  double y0 = 0.1;
  double y_dot0 = 0.0;
  double g = 9.81;
  double l = 2.0;
  double m = 0.5;
  double horizon = 10.0;

  /// From the input vector (k, M, theta0, theta_dot0, y0).
  static PendulumParams from_inputs(const Eigen::Ref<const Vector>& x);
};

enum class Fidelity { Low, High };

struct PendulumState {
  double y = 0.0;
  double theta = 0.0;
  double y_dot = 0.0;
  double theta_dot = 0.0;
};

struct PendulumRun {
  double max_height = 0.0;       // the code output
  double initial_energy = 0.0;
  double max_energy_drift = 0.0; // max_t |E(t) - E(0)|
};

/// Time derivative of the state. The low-fidelity model replaces sin(theta)
/// by theta, cos(theta) by 1 and drops the theta_dot^2 term.
PendulumState pendulum_rhs(const PendulumParams& p, const PendulumState& s, Fidelity fidelity);

/// T + k y^2 / 2 - m g l cos(theta) of the exact model.
double pendulum_energy(const PendulumParams& p, const PendulumState& s);

/// Fixed-step RK4 over [0, horizon]. The output is the maximum over time of
/// the bob height y - l cos(theta), offset by +l so that it is of order one;
/// the discrete maximum is refined by cubic Hermite interpolation.
PendulumRun simulate_pendulum(const PendulumParams& p, double dt, Fidelity fidelity);

double pendulum_high(const PendulumParams& p, double dt = 0.005);
double pendulum_low(const PendulumParams& p, double dt = 0.005);

/// Box (k, M, theta0, theta_dot0, y0) = [1,1.4] x [10,12] x [pi/4,pi/3] x [0,0.1] x [0,0.2].
Box pendulum_box();
CodePair pair_pendulum(double dt = 0.005);

/// Evaluates the low code on every row; evaluation i uses index first_index + i.
Vector evaluate_low(const CodePair& pair, const Matrix& x, std::uint64_t first_index = 0);
Vector evaluate_high(const CodePair& pair, const Matrix& x);

}  // namespace gpbnn
