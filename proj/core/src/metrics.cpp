#include "cac/metrics.hpp"

#include <string>

namespace cac {

double macro_average(std::span<const std::optional<double>> per_class_accuracy) {
  double sum = 0.0;
  std::size_t present = 0;
  for (const auto& acc : per_class_accuracy) {
    if (!acc) continue;
    sum += *acc;
    ++present;
  }
  return present == 0 ? 0.0 : sum / static_cast<double>(present);
}

MetricsReport report_from_predictions(std::span<const int> labels,
                                      std::span<const int> predictions, std::size_t num_classes) {
  if (labels.size() != predictions.size()) {
    throw DimensionError("report_from_predictions: label and prediction counts differ");
  }
  std::vector<std::size_t> correct(num_classes, 0);
  std::vector<std::size_t> total(num_classes, 0);
  std::size_t all_correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw DimensionError("report_from_predictions: label " + std::to_string(labels[i]) +
                           " out of range");
    }
    const auto c = static_cast<std::size_t>(labels[i]);
    ++total[c];
    if (predictions[i] == labels[i]) {
      ++correct[c];
      ++all_correct;
    }
  }
  MetricsReport report;
  report.per_class_accuracy.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (total[c] == 0) {
      report.missing_classes = true;
      continue;
    }
    report.per_class_accuracy[c] =
        100.0 * static_cast<double>(correct[c]) / static_cast<double>(total[c]);
  }
  report.avg = macro_average(report.per_class_accuracy);
  report.overall = labels.empty() ? 0.0
                                  : 100.0 * static_cast<double>(all_correct) /
                                        static_cast<double>(labels.size());
  return report;
}

MetricsReport evaluate(const ModelParams& model, const LabeledDataset& dataset) {
  if (dataset.num_classes != model.num_classes()) {
    throw DimensionError("evaluate: dataset class count differs from the model");
  }
  const ForwardPass pass = model_forward(model, dataset.x);
  const auto predictions = predict_classes(pass.probs);
  return report_from_predictions(dataset.y, predictions, dataset.num_classes);
}

}  // namespace cac
