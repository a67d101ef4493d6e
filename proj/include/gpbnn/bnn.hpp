#pragma once

#include "gpbnn/types.hpp"

#include <cmath>
#include <vector>

namespace gpbnn {

enum class Activation { ReLU, Tanh };

struct BNNConfig {
  Index input_dim = 1;
  Index hidden = 30;
  Activation activation = Activation::ReLU;
  double prior_std_w1 = 1.0;
  double prior_std_b1 = 1.0;
  double prior_std_w2 = 1.0;
  double prior_std_b2 = 1.0;
  double noise_prior = 1.0;  // half-normal scale of sigma

  Index parameter_count() const { return hidden * input_dim + 2 * hidden + 2; }
  void validate() const;
};

/// One point of the posterior state space. The flat layout used by the
/// samplers is [w1 (column-major), b1, w2, b2, log_sigma].
struct BNNParams {
  Matrix w1;  // hidden x input_dim
  Vector b1;
  Vector w2;
  double b2 = 0.0;
  double log_sigma = 0.0;

  static BNNParams zeros(const BNNConfig& cfg);
  static BNNParams unflatten(const Eigen::Ref<const Vector>& flat, const BNNConfig& cfg);
  Vector flatten() const;
  double sigma() const { return std::exp(log_sigma); }
};

/// Regression targets whose likelihood mean is a weighted sum of network
/// outputs over a block of input rows: mean_g = sum_{r in g} weight_r BNN(row_r).
/// Plain regression is the special case of one row of weight 1 per target.
struct BNNTrainingSet {
  Matrix inputs;                  // R x input_dim
  Vector row_weights;             // R
  std::vector<Index> group_start; // G + 1 offsets into the rows
  Vector targets;                 // G

  static BNNTrainingSet plain(Matrix x, Vector y);
  Index groups() const { return targets.size(); }
  Index rows() const { return inputs.rows(); }
  void validate() const;
};

double activate(double v, Activation act);

/// w2^T phi(w1 x + b1) + b2
double bnn_forward(const BNNParams& params, const Eigen::Ref<const Vector>& x,
                   Activation act = Activation::ReLU);

/// Network output for each row of x.
Vector bnn_forward_batch(const BNNParams& params, const Matrix& x, Activation act = Activation::ReLU);

/// Gaussian log prior of the weights and biases (sigma excluded).
double log_prior_weights(const BNNParams& params, const BNNConfig& cfg);

/// Gaussian log likelihood of the targets; sum_g -log(sqrt(2 pi) sigma) - r_g^2 / (2 sigma^2).
double log_likelihood(const BNNParams& params, const BNNTrainingSet& data, const BNNConfig& cfg);

/// Likelihood + weight prior + half-normal prior on sigma + log-Jacobian of
/// the sigma = exp(log_sigma) reparameterization.
double log_posterior(const BNNParams& params, const BNNTrainingSet& data, const BNNConfig& cfg);

/// Gradient of log_posterior in the flat layout. ReLU uses subgradient 0 at the kink.
Vector grad_log_posterior(const BNNParams& params, const BNNTrainingSet& data, const BNNConfig& cfg);

/// Flat-vector evaluation of the log posterior and (optionally) its gradient,
/// reusing internal buffers. Not thread-safe; use one instance per chain.
class BNNPosterior {
 public:
  BNNPosterior(const BNNTrainingSet& data, const BNNConfig& cfg);

  Index dim() const { return cfg_.parameter_count(); }
  double operator()(const Eigen::Ref<const Vector>& flat, Vector* grad = nullptr);

 private:
  const BNNTrainingSet& data_;
  BNNConfig cfg_;
  Matrix pre_;   // hidden x R
  Matrix act_;   // hidden x R
  Vector out_;   // R
  Vector dout_;  // R
};

}  // namespace gpbnn
