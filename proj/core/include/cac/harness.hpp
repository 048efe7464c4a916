#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cac/banks.hpp"
#include "cac/config.hpp"
#include "cac/data.hpp"
#include "cac/metrics.hpp"
#include "cac/network.hpp"

namespace cac {

/// Cross-entropy + SGD momentum on the labeled source set, all layers at `lr`.
/// Throws NumericError if the loss diverges.
ModelParams pretrain_source(const TrainConfig& config, const LabeledDataset& source);

/// One optimizer step of the adaptation loop.
struct StepRecord {
  std::size_t step = 0;
  double total = 0.0;
  double pos = 0.0;
  double neg = 0.0;
  double alpha = 1.0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct AdaptResult {
  ModelParams model;
  MetricsReport metrics;
  std::vector<StepRecord> steps;
  Banks banks;
};

/// Scores a model on held-out target labels. The adaptation loop only sees
/// this callback, never the labels.
using Evaluator = std::function<MetricsReport(const ModelParams&)>;

/// Optimizer steps per epoch: ceil(n / batch_size).
std::size_t steps_per_epoch(std::size_t n, std::size_t batch_size);

/// Length of the decay schedule: the override when set, otherwise
/// steps_per_epoch * adapt_epochs.
std::size_t schedule_length(const TrainConfig& config, std::size_t n);

/// Neighborhood contrastive adaptation on unlabeled target inputs:
/// initialize the banks from the source model, then per mini-batch run the
/// forward pass, refresh F/P and the batch rows of N, build the negative mask,
/// evaluate the loss with the decayed negative weight, backpropagate and take
/// a staged-rate SGD step. `evaluator`, when set, is called after every epoch
/// and for the final report.
AdaptResult adapt_target(const ModelParams& model, const Matrix& target_x,
                         const TrainConfig& config, const Evaluator& evaluator);

/// Convenience overload; target labels are only reachable through the evaluator.
AdaptResult adapt_target(const ModelParams& model, const LabeledDataset& target,
                         const TrainConfig& config);

/// Outcome of one replicate of the full pipeline.
struct ReplicateResult {
  std::uint64_t seed = 0;
  MetricsReport source_only;
  MetricsReport adapted;
  double purity = 0.0;  // neighborhood purity of the source model's target banks
};

/// generate -> pretrain -> adapt for replicate r of `config`.
ReplicateResult run_replicate(const TrainConfig& config, std::size_t replicate);

/// All config.num_seeds replicates. Replicates run concurrently; results are
/// identical to sequential execution.
std::vector<ReplicateResult> run_replicates(const TrainConfig& config);

/// One row of an ablation or sweep table.
struct TableRow {
  std::string label;
  double mean_avg = 0.0;
  double std_avg = 0.0;
  std::vector<double> per_seed_avg;
  std::vector<double> mean_curve;  // mean avg accuracy after each adaptation epoch

  friend bool operator==(const TableRow&, const TableRow&) = default;
};

/// Component ablation: neg, pos, pos+neg, pos+neg+wsim, each over
/// config.num_seeds replicates that share their pretrained source model.
std::vector<TableRow> run_ablation(const TrainConfig& config);

enum class SweepParam { k, beta };

SweepParam parse_sweep_param(std::string_view name);

/// One row per grid value. Every value is checked before any run starts.
std::vector<TableRow> sweep_param(const TrainConfig& config, SweepParam param,
                                  std::span<const double> grid);

/// CSV columns: label,mean_avg,std_avg,seed_avgs,epoch_curve. The last two
/// are ';'-separated lists.
void write_table_csv(std::span<const TableRow> rows, std::ostream& out);
void write_table_csv(std::span<const TableRow> rows, const std::filesystem::path& path);

/// CSV "f0,...,f{d-1},label,pred": pre-normalization features, true label
/// and predicted class for every sample.
void dump_embeddings(const ModelParams& model, const LabeledDataset& dataset,
                     const std::filesystem::path& path);

std::string metrics_report_to_json(const MetricsReport& report);

/// {"step", "total", "pos", "neg", "alpha"}
std::string step_record_to_json(const StepRecord& record);

/// Metrics document written by `cac adapt`: final report, per-step losses and
/// run metadata (config hash, seed, wall clock seconds).
std::string adapt_metrics_to_json(const AdaptResult& result, const TrainConfig& config,
                                  double wall_clock_seconds);

}  // namespace cac
