#include "cac/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cac/rng.hpp"

namespace cac {

std::string_view to_string(Activation a) {
  return a == Activation::relu ? "relu" : "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  throw DimensionError("unknown activation tag: " + std::string(name));
}

std::size_t GradientSet::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

std::size_t ModelParams::input_width() const {
  return extractor.empty() ? classifier.in_width() : extractor.front().in_width();
}

std::size_t ModelParams::feature_width() const {
  return extractor.empty() ? input_width() : extractor.back().out_width();
}

std::size_t ModelParams::num_parameters() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    n += layer(l).params.weight.size() + layer(l).params.bias.size();
  }
  return n;
}

const DenseLayer& ModelParams::layer(std::size_t l) const {
  return l < extractor.size() ? extractor[l] : classifier;
}

DenseLayer& ModelParams::layer(std::size_t l) {
  return l < extractor.size() ? extractor[l] : classifier;
}

void ModelParams::validate() const {
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const auto& cur = layer(l);
    if (cur.params.bias.size() != cur.out_width()) {
      throw DimensionError("layer " + std::to_string(l) + ": bias width mismatch");
    }
    if (l + 1 < num_layers() && cur.out_width() != layer(l + 1).in_width()) {
      throw DimensionError("layer " + std::to_string(l) + " output width does not match layer " +
                           std::to_string(l + 1) + " input width");
    }
  }
  if (classifier.activation != Activation::identity) {
    throw DimensionError("classifier must be linear");
  }
  if (velocity.layers.size() != num_layers()) {
    throw DimensionError("velocity layer count mismatch");
  }
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const auto& v = velocity.layers[l];
    const auto& p = layer(l).params;
    if (v.weight.rows() != p.weight.rows() || v.weight.cols() != p.weight.cols() ||
        v.bias.size() != p.bias.size()) {
      throw DimensionError("velocity shape mismatch at layer " + std::to_string(l));
    }
  }
}

namespace {

DenseLayer glorot_layer(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  DenseLayer layer;
  layer.activation = act;
  layer.params.weight = Matrix(in, out);
  for (double& w : layer.params.weight.data()) w = rng.uniform(-a, a);
  layer.params.bias.assign(out, 0.0);
  return layer;
}

}  // namespace

ModelParams init_model(const NetworkShape& shape, std::uint64_t seed) {
  if (shape.input_width == 0 || shape.hidden_width == 0 || shape.feature_width == 0 ||
      shape.num_classes < 2) {
    throw DimensionError("init_model: degenerate network shape");
  }
  Rng rng(seed);
  ModelParams m;
  m.extractor.push_back(glorot_layer(shape.input_width, shape.hidden_width, Activation::relu, rng));
  m.extractor.push_back(
      glorot_layer(shape.hidden_width, shape.feature_width, Activation::identity, rng));
  m.classifier =
      glorot_layer(shape.feature_width, shape.num_classes, Activation::identity, rng);
  m.velocity = zeros_like(m);
  return m;
}

GradientSet zeros_like(const ModelParams& params) {
  GradientSet g;
  g.layers.reserve(params.num_layers());
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    const auto& p = params.layer(l).params;
    g.layers.push_back({Matrix(p.weight.rows(), p.weight.cols()),
                        std::vector<double>(p.bias.size(), 0.0)});
  }
  return g;
}

std::vector<std::span<double>> parameter_blocks(ModelParams& params) {
  std::vector<std::span<double>> out;
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    auto& p = params.layer(l).params;
    out.push_back(p.weight.data());
    out.push_back(p.bias);
  }
  return out;
}

std::vector<std::span<double>> parameter_blocks(GradientSet& grads) {
  std::vector<std::span<double>> out;
  for (auto& l : grads.layers) {
    out.push_back(l.weight.data());
    out.push_back(l.bias);
  }
  return out;
}

std::vector<std::span<const double>> parameter_blocks(const GradientSet& grads) {
  std::vector<std::span<const double>> out;
  for (const auto& l : grads.layers) {
    out.push_back(l.weight.data());
    out.push_back(l.bias);
  }
  return out;
}

ForwardPass model_forward(const ModelParams& params, const Matrix& x) {
  if (x.cols() != params.input_width()) {
    throw DimensionError("model_forward: input has " + std::to_string(x.cols()) +
                         " columns, model expects " + std::to_string(params.input_width()));
  }
  ForwardPass pass;
  Matrix h = x;
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    const auto& layer = params.layer(l);
    Matrix z = matmul(h, layer.params.weight);
    add_row_vector(z, layer.params.bias);
    pass.layer_inputs.push_back(std::move(h));
    h = z;
    if (layer.activation == Activation::relu) {
      for (double& v : h.data()) v = std::max(v, 0.0);
    }
    pass.pre_activations.push_back(std::move(z));
    if (l + 1 == params.extractor.size()) pass.features = h;
  }
  if (params.extractor.empty()) pass.features = x;
  pass.logits = std::move(h);
  require_finite(pass.logits, "model_forward logits");
  pass.probs = softmax(pass.logits);
  return pass;
}

GradientSet model_backward(const ModelParams& params, const ForwardPass& pass,
                           const Matrix& grad_logits) {
  if (grad_logits.rows() != pass.logits.rows() || grad_logits.cols() != pass.logits.cols()) {
    throw DimensionError("model_backward: gradient shape does not match logits");
  }
  GradientSet grads = zeros_like(params);
  Matrix delta = grad_logits;  // dL/d(output of current layer)
  for (std::size_t l = params.num_layers(); l-- > 0;) {
    const auto& layer = params.layer(l);
    if (layer.activation == Activation::relu) {
      const auto& z = pass.pre_activations[l];
      auto d = delta.data();
      auto zv = z.data();
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (zv[i] <= 0.0) d[i] = 0.0;
      }
    }
    grads.layers[l].weight = matmul_tn(pass.layer_inputs[l], delta);
    grads.layers[l].bias = column_sums(delta);
    if (l > 0) delta = matmul_nt(delta, layer.params.weight);
  }
  return grads;
}

CrossEntropy cross_entropy(const Matrix& probs, std::span<const int> labels) {
  if (labels.size() != probs.rows()) throw DimensionError("cross_entropy: label count mismatch");
  const std::size_t n = probs.rows();
  const double inv = 1.0 / static_cast<double>(n);
  CrossEntropy out;
  out.grad_logits = probs;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= probs.cols()) {
      throw DimensionError("cross_entropy: label " + std::to_string(y) + " at row " +
                           std::to_string(i) + " outside [0, " + std::to_string(probs.cols()) +
                           ")");
    }
    out.loss -= std::log(probs(i, static_cast<std::size_t>(y)));
    out.grad_logits(i, static_cast<std::size_t>(y)) -= 1.0;
  }
  out.loss *= inv;
  for (double& g : out.grad_logits.data()) g *= inv;
  if (!std::isfinite(out.loss)) throw NumericError("cross_entropy: non-finite loss");
  return out;
}

std::vector<int> predict_classes(const Matrix& probs) {
  std::vector<int> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    auto r = probs.row(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

}  // namespace cac
