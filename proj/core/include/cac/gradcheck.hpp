#pragma once

#include <functional>

#include "cac/network.hpp"

namespace cac {

using LossFunction = std::function<double(const ModelParams&)>;

/// Central differences (L(p + eps) - L(p - eps)) / (2 eps), one scalar parameter
/// at a time. Throws NumericError if any loss evaluation is non-finite.
GradientSet finite_difference_grad(const LossFunction& loss_fn, const ModelParams& params,
                                   double eps);

/// Largest |a - b| / max(|a|, |b|, floor) over all entries.
double max_relative_error(const GradientSet& a, const GradientSet& b, double floor);

/// Largest |a - b| over all entries.
double max_absolute_error(const GradientSet& a, const GradientSet& b);

}  // namespace cac
