#include "cac/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace cac {

GradientSet finite_difference_grad(const LossFunction& loss_fn, const ModelParams& params,
                                   double eps) {
  if (!(eps > 0.0)) throw DimensionError("finite_difference_grad: eps must be positive");
  ModelParams probe = params;
  GradientSet grads = zeros_like(params);
  auto probe_blocks = parameter_blocks(probe);
  auto grad_blocks = parameter_blocks(grads);
  for (std::size_t b = 0; b < probe_blocks.size(); ++b) {
    for (std::size_t i = 0; i < probe_blocks[b].size(); ++i) {
      double& w = probe_blocks[b][i];
      const double original = w;
      w = original + eps;
      const double up = loss_fn(probe);
      w = original - eps;
      const double down = loss_fn(probe);
      w = original;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("finite_difference_grad: non-finite loss evaluation");
      }
      grad_blocks[b][i] = (up - down) / (2.0 * eps);
    }
  }
  return grads;
}

namespace {

template <typename F>
double max_over_entries(const GradientSet& a, const GradientSet& b, F&& f) {
  if (a.num_parameters() != b.num_parameters()) {
    throw DimensionError("gradient sets differ in size");
  }
  const auto ab = parameter_blocks(a);
  const auto bb = parameter_blocks(b);
  double worst = 0.0;
  for (std::size_t k = 0; k < ab.size(); ++k) {
    if (ab[k].size() != bb[k].size()) throw DimensionError("gradient sets differ in shape");
    for (std::size_t i = 0; i < ab[k].size(); ++i) worst = std::max(worst, f(ab[k][i], bb[k][i]));
  }
  return worst;
}

}  // namespace

double max_relative_error(const GradientSet& a, const GradientSet& b, double floor) {
  return max_over_entries(a, b, [floor](double x, double y) {
    return std::abs(x - y) / std::max({std::abs(x), std::abs(y), floor});
  });
}

double max_absolute_error(const GradientSet& a, const GradientSet& b) {
  return max_over_entries(a, b, [](double x, double y) { return std::abs(x - y); });
}

}  // namespace cac
