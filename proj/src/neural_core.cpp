#include "dpl/neural_core.hpp"

#include <cmath>
#include <string>

#include "dpl/errors.hpp"
#include "dpl/rng.hpp"

namespace dpl {

DenseNetwork::DenseNetwork(std::vector<int> layer_dims, double leaky_slope)
    : dims_(std::move(layer_dims)), slope_(leaky_slope) {
  if (dims_.size() < 2) throw ShapeError("DenseNetwork needs at least input and output dims");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    if (dims_[l] <= 0 || dims_[l + 1] <= 0) throw ShapeError("layer dims must be positive");
    weight_offsets_.push_back(total);
    total += static_cast<std::size_t>(dims_[l]) * dims_[l + 1] + dims_[l + 1];
  }
  params_ = Vector::Zero(static_cast<Eigen::Index>(total));
}

Eigen::Map<const Matrix> DenseNetwork::weight(std::size_t layer) const {
  return {params_.data() + weight_offset(layer), dims_[layer + 1], dims_[layer]};
}

Eigen::Map<Matrix> DenseNetwork::weight(std::size_t layer) {
  return {params_.data() + weight_offset(layer), dims_[layer + 1], dims_[layer]};
}

Eigen::Map<const Vector> DenseNetwork::bias(std::size_t layer) const {
  return {params_.data() + bias_offset(layer), dims_[layer + 1]};
}

Eigen::Map<Vector> DenseNetwork::bias(std::size_t layer) {
  return {params_.data() + bias_offset(layer), dims_[layer + 1]};
}

Matrix forward(const DenseNetwork& net, const Eigen::Ref<const Matrix>& inputs,
               ForwardCache* cache) {
  if (net.num_layers() == 0) throw ShapeError("forward: empty network");
  if (inputs.rows() != net.input_dim()) {
    throw ShapeError("forward: expected input dim " + std::to_string(net.input_dim()) + ", got " +
                     std::to_string(inputs.rows()));
  }
  const double slope = net.leaky_slope();
  if (cache != nullptr) {
    cache->layer_dims = net.layer_dims();
    cache->layer_inputs.resize(net.num_layers());
    cache->pre_activations.resize(net.num_layers() - 1);
  }

  Matrix activation = inputs;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    Matrix z = net.weight(l) * activation;
    z.colwise() += net.bias(l);
    if (cache != nullptr) cache->layer_inputs[l] = std::move(activation);
    if (l + 1 == net.num_layers()) return z;
    activation = z.unaryExpr([slope](double x) { return leaky_relu(x, slope); });
    if (cache != nullptr) cache->pre_activations[l] = std::move(z);
  }
  return activation;  // unreachable
}

Vector forward(const DenseNetwork& net, std::span<const double> input) {
  const Eigen::Map<const Matrix> column(input.data(), static_cast<Eigen::Index>(input.size()), 1);
  return forward(net, column).col(0);
}

GradientBundle backward(const DenseNetwork& net, const ForwardCache& cache,
                        const Eigen::Ref<const Matrix>& output_gradient) {
  if (cache.layer_dims != net.layer_dims() || cache.layer_inputs.size() != net.num_layers()) {
    throw ShapeError("backward: cache does not match network shape");
  }
  const Eigen::Index batch = cache.layer_inputs.front().cols();
  if (output_gradient.rows() != net.output_dim() || output_gradient.cols() != batch) {
    throw ShapeError("backward: output gradient shape does not match the cached batch");
  }
  const double slope = net.leaky_slope();

  GradientBundle grads{Vector::Zero(static_cast<Eigen::Index>(net.parameter_count()))};
  Matrix delta = output_gradient;
  for (std::size_t l = net.num_layers(); l-- > 0;) {
    const int rows = net.layer_dims()[l + 1];
    const int cols = net.layer_dims()[l];
    Eigen::Map<Matrix> dW(grads.values.data() + net.weight_offset(l), rows, cols);
    Eigen::Map<Vector> db(grads.values.data() + net.bias_offset(l), rows);
    dW.noalias() = delta * cache.layer_inputs[l].transpose();
    db = delta.rowwise().sum();
    if (l == 0) break;
    Matrix upstream = net.weight(l).transpose() * delta;
    const Matrix& z = cache.pre_activations[l - 1];
    delta = upstream.cwiseProduct(z.unaryExpr([slope](double x) { return x > 0.0 ? 1.0 : slope; }));
  }
  return grads;
}

L1Loss l1_loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) throw ShapeError("l1_loss: length mismatch");
  if (predictions.empty()) throw ShapeError("l1_loss: empty input");
  const double n = static_cast<double>(predictions.size());
  L1Loss out;
  out.gradient.resize(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double r = predictions[i] - targets[i];
    out.loss += std::abs(r);
    out.gradient[i] = (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) / n;
  }
  out.loss /= n;
  return out;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  const auto n = static_cast<Eigen::Index>(params.size());
  if (static_cast<std::size_t>(grads.size()) != params.size() || state.first_moment.size() != n ||
      state.second_moment.size() != n) {
    throw ShapeError("adam_step: parameter, gradient and moment sizes differ");
  }
  Eigen::Map<Vector> p(params.data(), n);
  const Eigen::Map<const Vector> g(grads.data(), n);
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * g;
  state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * g.cwiseAbs2();
  const double lr = state.lr;
  const double eps = state.epsilon;
  p.array() -= lr * (state.first_moment.array() / c1) /
               ((state.second_moment.array() / c2).sqrt() + eps);
}

void adam_step(DenseNetwork& net, const GradientBundle& grads, AdamState& state) {
  adam_step(std::span<double>(net.parameters().data(), net.parameter_count()),
            std::span<const double>(grads.values.data(), grads.size()), state);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double glu_gate(double a, double g) { return a * sigmoid(g); }

DenseNetwork init_weights(DenseNetwork net, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const double limit = std::sqrt(1.0 / net.layer_dims()[l]);
    auto w = net.weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = uniform(rng, -limit, limit);
    }
    net.bias(l).setZero();
  }
  return net;
}

}  // namespace dpl
