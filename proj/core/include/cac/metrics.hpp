#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cac/data.hpp"
#include "cac/network.hpp"

namespace cac {

struct EpochPoint {
  std::size_t epoch = 0;
  double avg = 0.0;

  friend bool operator==(const EpochPoint&, const EpochPoint&) = default;
};

/// Accuracies in percent. `avg` is the unweighted mean over the classes that
/// have at least one sample; absent classes are reported as std::nullopt.
struct MetricsReport {
  std::vector<std::optional<double>> per_class_accuracy;
  double avg = 0.0;
  double overall = 0.0;
  bool missing_classes = false;
  std::vector<EpochPoint> epoch_curve;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Unweighted mean of the present per-class accuracies.
double macro_average(std::span<const std::optional<double>> per_class_accuracy);

MetricsReport report_from_predictions(std::span<const int> labels,
                                      std::span<const int> predictions, std::size_t num_classes);

MetricsReport evaluate(const ModelParams& model, const LabeledDataset& dataset);

}  // namespace cac
