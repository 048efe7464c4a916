#pragma once

#include <span>

#include "cac/network.hpp"

namespace cac {

/// One SGD-with-momentum step: v <- momentum * v + g, p <- p - lr * v.
/// Returns the updated parameters with the new velocity stored in them.
ModelParams sgd_momentum_step(const ModelParams& params, const GradientSet& grads, double lr,
                              double momentum);

/// Same update with a separate learning rate per layer (extractor layers first,
/// classifier last).
ModelParams sgd_momentum_step(const ModelParams& params, const GradientSet& grads,
                              std::span<const double> layer_lr, double momentum);

}  // namespace cac
