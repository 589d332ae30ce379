#pragma once

// A small dense network with hand-written forward/backward passes.
//
// Parameters live in one flat vector: for each layer the weight matrix
// (out x in, column-major) followed by its bias. Gradients and Adam moments
// use the same layout, so optimizers and checkpoints see a single array.
// Batches are column-major: one sample per column.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace dpl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultLeakySlope = 0.01;

class DenseNetwork {
 public:
  DenseNetwork() = default;
  /// layer_dims = {input, hidden..., output}; needs at least two entries, all
  /// positive. Parameters start at zero; see init_weights().
  explicit DenseNetwork(std::vector<int> layer_dims, double leaky_slope = kDefaultLeakySlope);

  const std::vector<int>& layer_dims() const { return dims_; }
  std::size_t num_layers() const { return dims_.empty() ? 0 : dims_.size() - 1; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  double leaky_slope() const { return slope_; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }

  Eigen::Map<const Matrix> weight(std::size_t layer) const;
  Eigen::Map<Matrix> weight(std::size_t layer);
  Eigen::Map<const Vector> bias(std::size_t layer) const;
  Eigen::Map<Vector> bias(std::size_t layer);

  const Vector& parameters() const { return params_; }
  Vector& parameters() { return params_; }

  std::size_t weight_offset(std::size_t layer) const { return weight_offsets_.at(layer); }
  std::size_t bias_offset(std::size_t layer) const { return weight_offsets_.at(layer) + dims_[layer] * dims_[layer + 1]; }

 private:
  std::vector<int> dims_;
  double slope_ = kDefaultLeakySlope;
  Vector params_;
  std::vector<std::size_t> weight_offsets_;
};

/// Everything backward() needs from a forward pass.
struct ForwardCache {
  std::vector<int> layer_dims;
  std::vector<Matrix> layer_inputs;      // a_l fed into layer l
  std::vector<Matrix> pre_activations;   // z_l of the hidden layers
};

/// dLoss/dtheta in DenseNetwork::parameters() layout.
struct GradientBundle {
  Vector values;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// Batched forward pass; `inputs` is input_dim x batch. Hidden layers use
/// Leaky ReLU, the output layer is linear. Throws ShapeError.
Matrix forward(const DenseNetwork& net, const Eigen::Ref<const Matrix>& inputs,
               ForwardCache* cache = nullptr);

Vector forward(const DenseNetwork& net, std::span<const double> input);

/// Back-propagates `output_gradient` (output_dim x batch, dLoss/doutput).
/// Throws ShapeError when the cache does not come from a forward pass of a
/// network with the same shape over a batch of the same width.
GradientBundle backward(const DenseNetwork& net, const ForwardCache& cache,
                        const Eigen::Ref<const Matrix>& output_gradient);

struct L1Loss {
  double loss = 0.0;
  std::vector<double> gradient;  // sign(p - t) / n, sign(0) = 0
};

L1Loss l1_loss(std::span<const double> predictions, std::span<const double> targets);

struct AdamState {
  Vector first_moment;
  Vector second_moment;
  std::int64_t step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t parameter_count, double learning_rate = 1e-3)
      : first_moment(Vector::Zero(static_cast<Eigen::Index>(parameter_count))),
        second_moment(Vector::Zero(static_cast<Eigen::Index>(parameter_count))),
        lr(learning_rate) {}
};

/// One bias-corrected Adam update, in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);
void adam_step(DenseNetwork& net, const GradientBundle& grads, AdamState& state);

double sigmoid(double x);

/// a * sigmoid(g)
double glu_gate(double a, double g);

inline double leaky_relu(double x, double slope = kDefaultLeakySlope) {
  return x > 0.0 ? x : slope * x;
}

/// Weights uniform in +-sqrt(1/fan_in), biases zero; deterministic in seed.
DenseNetwork init_weights(DenseNetwork net, std::uint64_t seed);

}  // namespace dpl
