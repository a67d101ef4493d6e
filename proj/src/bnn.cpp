#include "gpbnn/bnn.hpp"

#include <cmath>
#include <numbers>

namespace gpbnn {

namespace {

const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double gaussian_log_prior(const Eigen::Ref<const Vector>& v, double sd) {
  return -static_cast<double>(v.size()) * (kLogSqrt2Pi + std::log(sd)) - 0.5 * v.squaredNorm() / (sd * sd);
}

}  // namespace

void BNNConfig::validate() const {
  if (input_dim < 1 || hidden < 1) throw InvalidArgument("BNN needs input_dim >= 1 and hidden >= 1");
  if (!(prior_std_w1 > 0 && prior_std_b1 > 0 && prior_std_w2 > 0 && prior_std_b2 > 0 && noise_prior > 0))
    throw InvalidArgument("BNN prior scales must be positive");
}

BNNParams BNNParams::zeros(const BNNConfig& cfg) {
  BNNParams p;
  p.w1 = Matrix::Zero(cfg.hidden, cfg.input_dim);
  p.b1 = Vector::Zero(cfg.hidden);
  p.w2 = Vector::Zero(cfg.hidden);
  return p;
}

BNNParams BNNParams::unflatten(const Eigen::Ref<const Vector>& flat, const BNNConfig& cfg) {
  if (flat.size() != cfg.parameter_count()) throw InvalidArgument("BNN parameter vector has wrong length");
  const Index h = cfg.hidden;
  const Index d = cfg.input_dim;
  BNNParams p;
  p.w1 = Eigen::Map<const Matrix>(flat.data(), h, d);
  p.b1 = flat.segment(h * d, h);
  p.w2 = flat.segment(h * d + h, h);
  p.b2 = flat(h * d + 2 * h);
  p.log_sigma = flat(h * d + 2 * h + 1);
  return p;
}

Vector BNNParams::flatten() const {
  const Index h = w1.rows();
  const Index d = w1.cols();
  Vector flat(h * d + 2 * h + 2);
  Eigen::Map<Matrix>(flat.data(), h, d) = w1;
  flat.segment(h * d, h) = b1;
  flat.segment(h * d + h, h) = w2;
  flat(h * d + 2 * h) = b2;
  flat(h * d + 2 * h + 1) = log_sigma;
  return flat;
}

BNNTrainingSet BNNTrainingSet::plain(Matrix x, Vector y) {
  BNNTrainingSet t;
  const Index n = x.rows();
  t.inputs = std::move(x);
  t.targets = std::move(y);
  t.row_weights = Vector::Ones(n);
  t.group_start.resize(static_cast<std::size_t>(n) + 1);
  for (Index i = 0; i <= n; ++i) t.group_start[static_cast<std::size_t>(i)] = i;
  t.validate();
  return t;
}

void BNNTrainingSet::validate() const {
  if (targets.size() < 1) throw InvalidArgument("BNN training set is empty");
  if (group_start.size() != static_cast<std::size_t>(targets.size()) + 1 || group_start.front() != 0 ||
      group_start.back() != inputs.rows() || row_weights.size() != inputs.rows())
    throw InvalidArgument("BNN training set group layout is inconsistent");
  for (std::size_t g = 0; g + 1 < group_start.size(); ++g)
    if (group_start[g + 1] <= group_start[g]) throw InvalidArgument("BNN training group is empty");
}

double activate(double v, Activation act) {
  return act == Activation::ReLU ? (v > 0.0 ? v : 0.0) : std::tanh(v);
}

double bnn_forward(const BNNParams& params, const Eigen::Ref<const Vector>& x, Activation act) {
  if (x.size() != params.w1.cols()) throw InvalidArgument("BNN input has wrong dimension");
  const Vector pre = params.w1 * x + params.b1;
  double out = params.b2;
  for (Index j = 0; j < pre.size(); ++j) out += params.w2(j) * activate(pre(j), act);
  return out;
}

Vector bnn_forward_batch(const BNNParams& params, const Matrix& x, Activation act) {
  if (x.cols() != params.w1.cols()) throw InvalidArgument("BNN input has wrong dimension");
  Matrix pre = (params.w1 * x.transpose()).colwise() + params.b1;
  if (act == Activation::ReLU) pre = pre.cwiseMax(0.0);
  else pre = pre.array().tanh().matrix();
  return (pre.transpose() * params.w2).array() + params.b2;
}

double log_prior_weights(const BNNParams& params, const BNNConfig& cfg) {
  const Eigen::Map<const Vector> w1(params.w1.data(), params.w1.size());
  return gaussian_log_prior(w1, cfg.prior_std_w1) + gaussian_log_prior(params.b1, cfg.prior_std_b1) +
         gaussian_log_prior(params.w2, cfg.prior_std_w2) +
         gaussian_log_prior(Vector::Constant(1, params.b2), cfg.prior_std_b2);
}

namespace {

Vector group_means(const Vector& out, const BNNTrainingSet& data) {
  Vector m(data.groups());
  for (Index g = 0; g < data.groups(); ++g) {
    const Index lo = data.group_start[static_cast<std::size_t>(g)];
    const Index hi = data.group_start[static_cast<std::size_t>(g) + 1];
    double acc = 0.0;
    for (Index r = lo; r < hi; ++r) acc += data.row_weights(r) * out(r);
    m(g) = acc;
  }
  return m;
}

}  // namespace

double log_likelihood(const BNNParams& params, const BNNTrainingSet& data, const BNNConfig& cfg) {
  const Vector out = bnn_forward_batch(params, data.inputs, cfg.activation);
  const Vector resid = data.targets - group_means(out, data);
  const double sigma = params.sigma();
  return -static_cast<double>(data.groups()) * (kLogSqrt2Pi + params.log_sigma) -
         0.5 * resid.squaredNorm() / (sigma * sigma);
}

double log_posterior(const BNNParams& params, const BNNTrainingSet& data, const BNNConfig& cfg) {
  BNNPosterior post(data, cfg);
  return post(params.flatten());
}

Vector grad_log_posterior(const BNNParams& params, const BNNTrainingSet& data, const BNNConfig& cfg) {
  BNNPosterior post(data, cfg);
  Vector grad;
  post(params.flatten(), &grad);
  return grad;
}

BNNPosterior::BNNPosterior(const BNNTrainingSet& data, const BNNConfig& cfg) : data_(data), cfg_(cfg) {
  cfg_.validate();
  data_.validate();
  if (data_.inputs.cols() != cfg_.input_dim) throw InvalidArgument("BNN training inputs do not match input_dim");
}

double BNNPosterior::operator()(const Eigen::Ref<const Vector>& flat, Vector* grad) {
  const Index h = cfg_.hidden;
  const Index d = cfg_.input_dim;
  if (flat.size() != dim()) throw InvalidArgument("BNN parameter vector has wrong length");
  const Eigen::Map<const Matrix> w1(flat.data(), h, d);
  const auto b1 = flat.segment(h * d, h);
  const auto w2 = flat.segment(h * d + h, h);
  const double b2 = flat(h * d + 2 * h);
  const double log_sigma = flat(h * d + 2 * h + 1);
  const double sigma = std::exp(log_sigma);
  const double inv_var = 1.0 / (sigma * sigma);
  const double s0 = cfg_.noise_prior;

  pre_.noalias() = w1 * data_.inputs.transpose();
  pre_.colwise() += b1;
  if (cfg_.activation == Activation::ReLU) act_ = pre_.cwiseMax(0.0);
  else act_ = pre_.array().tanh().matrix();
  out_.noalias() = act_.transpose() * w2;
  out_.array() += b2;

  const Index groups = data_.groups();
  double sse = 0.0;
  dout_.resize(data_.rows());
  for (Index g = 0; g < groups; ++g) {
    const Index lo = data_.group_start[static_cast<std::size_t>(g)];
    const Index hi = data_.group_start[static_cast<std::size_t>(g) + 1];
    double m = 0.0;
    for (Index r = lo; r < hi; ++r) m += data_.row_weights(r) * out_(r);
    const double resid = data_.targets(g) - m;
    sse += resid * resid;
    for (Index r = lo; r < hi; ++r) dout_(r) = data_.row_weights(r) * resid * inv_var;
  }

  const double loglik = -static_cast<double>(groups) * (kLogSqrt2Pi + log_sigma) - 0.5 * sse * inv_var;
  const double logprior = gaussian_log_prior(flat.head(h * d), cfg_.prior_std_w1) +
                          gaussian_log_prior(b1, cfg_.prior_std_b1) + gaussian_log_prior(w2, cfg_.prior_std_w2) +
                          gaussian_log_prior(flat.segment(h * d + 2 * h, 1), cfg_.prior_std_b2);
  // Half-normal(s0) on sigma plus log |d sigma / d log_sigma| = log_sigma.
  const double log_sigma_prior = std::log(2.0) - kLogSqrt2Pi - std::log(s0) - 0.5 * sigma * sigma / (s0 * s0) + log_sigma;
  const double value = loglik + logprior + log_sigma_prior;

  if (grad != nullptr) {
    grad->resize(dim());
    Eigen::Map<Matrix> gw1(grad->data(), h, d);
    auto gb1 = grad->segment(h * d, h);
    auto gw2 = grad->segment(h * d + h, h);

    gw2.noalias() = act_ * dout_;
    (*grad)(h * d + 2 * h) = dout_.sum();
    // Back through the activation: dL/dpre = (w2 dout^T) .* phi'(pre)
    Matrix dpre = w2 * dout_.transpose();
    if (cfg_.activation == Activation::ReLU) dpre.array() *= (pre_.array() > 0.0).cast<double>();
    else dpre.array() *= 1.0 - act_.array().square();
    gw1.noalias() = dpre * data_.inputs;
    gb1 = dpre.rowwise().sum();

    gw1 -= w1 / (cfg_.prior_std_w1 * cfg_.prior_std_w1);
    gb1 -= b1 / (cfg_.prior_std_b1 * cfg_.prior_std_b1);
    gw2 -= w2 / (cfg_.prior_std_w2 * cfg_.prior_std_w2);
    (*grad)(h * d + 2 * h) -= b2 / (cfg_.prior_std_b2 * cfg_.prior_std_b2);
    (*grad)(h * d + 2 * h + 1) = -static_cast<double>(groups) + sse * inv_var - sigma * sigma / (s0 * s0) + 1.0;
  }
  return value;
}

}  // namespace gpbnn
