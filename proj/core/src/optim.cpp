#include "cac/optim.hpp"

#include <string>
#include <vector>

namespace cac {

namespace {

void check_shapes(const ModelParams& params, const GradientSet& grads) {
  if (grads.layers.size() != params.num_layers()) {
    throw DimensionError("sgd_momentum_step: gradient layer count mismatch");
  }
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    const auto& p = params.layer(l).params;
    const auto& g = grads.layers[l];
    if (g.weight.rows() != p.weight.rows() || g.weight.cols() != p.weight.cols() ||
        g.bias.size() != p.bias.size()) {
      throw DimensionError("sgd_momentum_step: gradient shape mismatch at layer " +
                           std::to_string(l));
    }
  }
}

void update(std::span<double> p, std::span<double> v, std::span<const double> g, double lr,
            double momentum) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    v[i] = momentum * v[i] + g[i];
    p[i] -= lr * v[i];
  }
}

}  // namespace

ModelParams sgd_momentum_step(const ModelParams& params, const GradientSet& grads, double lr,
                              double momentum) {
  const std::vector<double> rates(params.num_layers(), lr);
  return sgd_momentum_step(params, grads, rates, momentum);
}

ModelParams sgd_momentum_step(const ModelParams& params, const GradientSet& grads,
                              std::span<const double> layer_lr, double momentum) {
  params.validate();
  check_shapes(params, grads);
  if (layer_lr.size() != params.num_layers()) {
    throw DimensionError("sgd_momentum_step: need one learning rate per layer");
  }
  for (double lr : layer_lr) {
    if (!(lr > 0.0)) throw DimensionError("sgd_momentum_step: learning rate must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw DimensionError("sgd_momentum_step: momentum must lie in [0, 1)");
  }
  ModelParams next = params;
  for (std::size_t l = 0; l < next.num_layers(); ++l) {
    auto& p = next.layer(l).params;
    auto& v = next.velocity.layers[l];
    const auto& g = grads.layers[l];
    update(p.weight.data(), v.weight.data(), g.weight.data(), layer_lr[l], momentum);
    update(p.bias, v.bias, g.bias, layer_lr[l], momentum);
  }
  return next;
}

}  // namespace cac
