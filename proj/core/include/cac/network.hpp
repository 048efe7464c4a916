#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cac/matrix.hpp"

namespace cac {

enum class Activation { relu, identity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Weight (in x out) and bias (out) of one dense layer.
struct LayerTensors {
  Matrix weight;
  std::vector<double> bias;

  friend bool operator==(const LayerTensors&, const LayerTensors&) = default;
};

/// One entry per dense layer of a model, extractor layers first and the
/// classifier last. Used for gradients and for optimizer velocity.
struct GradientSet {
  std::vector<LayerTensors> layers;

  std::size_t num_parameters() const;
  friend bool operator==(const GradientSet&, const GradientSet&) = default;
};

struct DenseLayer {
  LayerTensors params;
  Activation activation = Activation::identity;

  std::size_t in_width() const { return params.weight.rows(); }
  std::size_t out_width() const { return params.weight.cols(); }
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Feature extractor f (a stack of dense layers) followed by a linear
/// classifier C, plus SGD momentum state. The model output is C(f(x)).
struct ModelParams {
  std::vector<DenseLayer> extractor;
  DenseLayer classifier;
  GradientSet velocity;

  std::size_t input_width() const;
  std::size_t feature_width() const;
  std::size_t num_classes() const { return classifier.out_width(); }
  std::size_t num_layers() const { return extractor.size() + 1; }
  std::size_t num_parameters() const;

  const DenseLayer& layer(std::size_t l) const;
  DenseLayer& layer(std::size_t l);

  /// Throws DimensionError unless the layer shapes compose and velocity mirrors them.
  void validate() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct NetworkShape {
  std::size_t input_width = 2;
  std::size_t hidden_width = 32;
  std::size_t feature_width = 16;
  std::size_t num_classes = 3;
};

/// relu hidden layer -> identity feature layer -> linear classifier, with
/// weights uniform in [-a, a], a = sqrt(6 / (fan_in + fan_out)), and zero biases.
ModelParams init_model(const NetworkShape& shape, std::uint64_t seed);

/// Zeroed tensors shaped like the model's parameters.
GradientSet zeros_like(const ModelParams& params);

/// Every tensor of a model or gradient set flattened into spans, in layer
/// order (weight then bias).
std::vector<std::span<double>> parameter_blocks(ModelParams& params);
std::vector<std::span<double>> parameter_blocks(GradientSet& grads);
std::vector<std::span<const double>> parameter_blocks(const GradientSet& grads);

/// Forward activations kept for backpropagation.
struct ForwardPass {
  Matrix features;
  Matrix logits;
  Matrix probs;
  std::vector<Matrix> layer_inputs;     // input to each layer (extractor..., classifier)
  std::vector<Matrix> pre_activations;  // affine output of each layer
};

ForwardPass model_forward(const ModelParams& params, const Matrix& x);

/// Backpropagates dL/dlogits through the classifier and extractor.
GradientSet model_backward(const ModelParams& params, const ForwardPass& pass,
                           const Matrix& grad_logits);

struct CrossEntropy {
  double loss = 0.0;
  Matrix grad_logits;
};

/// Mean of -log p[i, y_i]; gradient (probs - onehot) / batch w.r.t. logits.
CrossEntropy cross_entropy(const Matrix& probs, std::span<const int> labels);

/// argmax per row, ties toward the lower class index.
std::vector<int> predict_classes(const Matrix& probs);

}  // namespace cac
