#include "cac/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <numeric>
#include <ostream>
#include <type_traits>

#include <json.hpp>

#include "cac/losses.hpp"
#include "cac/optim.hpp"
#include "cac/rng.hpp"

namespace cac {

using nlohmann::json;

namespace {

// Stream ids for derive_seed; each consumer of randomness gets its own.
constexpr std::uint64_t kInitStream = 10;
constexpr std::uint64_t kAdaptShuffleStream = 11;
constexpr std::uint64_t kBankSubsetStream = 12;
constexpr std::uint64_t kPretrainShuffleStream = 13;

std::vector<std::size_t> shuffled_order(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  return order;
}

template <typename F>
auto map_replicates(std::size_t count, F&& fn) {
  using Result = std::invoke_result_t<F&, std::size_t>;
  std::vector<std::future<Result>> futures;
  futures.reserve(count);
  for (std::size_t r = 0; r < count; ++r) {
    futures.push_back(std::async(std::launch::async, [&fn, r] { return fn(r); }));
  }
  std::vector<Result> out;
  out.reserve(count);
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

}  // namespace

ModelParams pretrain_source(const TrainConfig& config, const LabeledDataset& source) {
  config.validate();
  source.validate();
  if (source.num_classes != config.num_classes) {
    throw ConfigError("source class count differs from config C");
  }
  NetworkShape shape{source.input_width(), config.hidden_width, config.feature_dim,
                     config.num_classes};
  ModelParams model = init_model(shape, derive_seed(config.seed, kInitStream));
  Rng rng(derive_seed(config.seed, kPretrainShuffleStream));
  const std::size_t n = source.size();
  for (std::size_t epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
    const auto order = shuffled_order(n, rng);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::span<const std::size_t> idx(order.data() + start,
                                             std::min(config.batch_size, n - start));
      const Matrix xb = gather_rows(source.x, idx);
      std::vector<int> yb;
      yb.reserve(idx.size());
      for (std::size_t i : idx) yb.push_back(source.y[i]);
      const ForwardPass pass = model_forward(model, xb);
      const CrossEntropy ce = cross_entropy(pass.probs, yb);
      if (!std::isfinite(ce.loss)) throw NumericError("pretraining diverged");
      const GradientSet grads = model_backward(model, pass, ce.grad_logits);
      model = sgd_momentum_step(model, grads, config.lr, config.momentum);
    }
  }
  return model;
}

std::size_t steps_per_epoch(std::size_t n, std::size_t batch_size) {
  return (n + batch_size - 1) / batch_size;
}

std::size_t schedule_length(const TrainConfig& config, std::size_t n) {
  if (config.max_iter_override) return *config.max_iter_override;
  return std::max<std::size_t>(1, steps_per_epoch(n, config.batch_size) * config.adapt_epochs);
}

AdaptResult adapt_target(const ModelParams& model, const Matrix& target_x,
                         const TrainConfig& config, const Evaluator& evaluator) {
  config.validate();
  model.validate();
  if (model.num_classes() != config.num_classes) {
    throw ConfigError("model class count differs from config C");
  }
  if (model.input_width() != target_x.cols()) {
    throw ConfigError("model input width differs from the target data");
  }
  const std::size_t n = target_x.rows();

  AdaptResult result;
  result.model = model;
  result.banks = init_banks(model, target_x, config.k, config.bank_fraction,
                            derive_seed(config.seed, kBankSubsetStream));

  const DecaySchedule schedule{config.beta, schedule_length(config, n)};
  std::vector<double> rates(model.num_layers(), config.lr * config.lr_feature_scale);
  rates.back() = config.lr;

  Rng rng(derive_seed(config.seed, kAdaptShuffleStream));
  std::size_t step = 0;
  result.steps.reserve(steps_per_epoch(n, config.batch_size) * config.adapt_epochs);
  for (std::size_t epoch = 1; epoch <= config.adapt_epochs; ++epoch) {
    const auto order = shuffled_order(n, rng);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::span<const std::size_t> idx(order.data() + start,
                                             std::min(config.batch_size, n - start));
      const ForwardPass pass = model_forward(result.model, gather_rows(target_x, idx));
      update_banks(result.banks, idx, l2_normalize_rows(pass.features), pass.probs);

      const MaskMatrix mask = config.use_wsim ? build_similarity_mask(idx, result.banks)
                                              : permissive_mask(idx.size());
      const double alpha = decay_factor(step, schedule);
      const LossBreakdown loss =
          cac_loss(pass.probs, idx, result.banks, mask, alpha, config.loss_mode);
      if (!std::isfinite(loss.total)) throw NumericError("adaptation loss is not finite");

      const Matrix grad_logits = softmax_backward(pass.probs, loss.grad_wrt_batch_probs);
      const GradientSet grads = model_backward(result.model, pass, grad_logits);
      result.model = sgd_momentum_step(result.model, grads, rates, config.momentum);
      result.steps.push_back({step, loss.total, loss.positive_term, loss.negative_term, alpha});
      ++step;
    }
    if (evaluator) result.metrics.epoch_curve.push_back({epoch, evaluator(result.model).avg});
  }
  if (evaluator) {
    auto curve = std::move(result.metrics.epoch_curve);
    result.metrics = evaluator(result.model);
    result.metrics.epoch_curve = std::move(curve);
  }
  return result;
}

AdaptResult adapt_target(const ModelParams& model, const LabeledDataset& target,
                         const TrainConfig& config) {
  target.validate();
  // Labels stay inside the evaluator; the loop receives inputs only.
  const Evaluator evaluator = [&target](const ModelParams& m) { return evaluate(m, target); };
  return adapt_target(model, target.x, config, evaluator);
}

namespace {

struct PreparedReplicate {
  TrainConfig config;
  LabeledDataset target;
  ModelParams source_model;
};

PreparedReplicate prepare(const TrainConfig& config, std::size_t replicate) {
  PreparedReplicate p;
  p.config = replicate_config(config, replicate);
  auto [source, target] = generate_two_domain_blobs(p.config.shift);
  p.source_model = pretrain_source(p.config, source);
  p.target = std::move(target);
  return p;
}

TableRow summarize(std::string label, const std::vector<MetricsReport>& runs) {
  TableRow row;
  row.label = std::move(label);
  for (const auto& m : runs) row.per_seed_avg.push_back(m.avg);
  const double n = static_cast<double>(runs.size());
  row.mean_avg = std::accumulate(row.per_seed_avg.begin(), row.per_seed_avg.end(), 0.0) / n;
  if (runs.size() > 1) {
    double ss = 0.0;
    for (double v : row.per_seed_avg) ss += (v - row.mean_avg) * (v - row.mean_avg);
    row.std_avg = std::sqrt(ss / (n - 1.0));
  }
  const std::size_t epochs = runs.front().epoch_curve.size();
  row.mean_curve.assign(epochs, 0.0);
  for (const auto& m : runs) {
    for (std::size_t e = 0; e < epochs; ++e) row.mean_curve[e] += m.epoch_curve[e].avg / n;
  }
  return row;
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

ReplicateResult run_replicate(const TrainConfig& config, std::size_t replicate) {
  PreparedReplicate p = prepare(config, replicate);
  ReplicateResult r;
  r.seed = p.config.seed;
  r.source_only = evaluate(p.source_model, p.target);
  const Banks initial = init_banks(p.source_model, p.target.x, p.config.k, p.config.bank_fraction,
                                   derive_seed(p.config.seed, kBankSubsetStream));
  r.purity = neighborhood_purity(initial, p.target.y);
  r.adapted = adapt_target(p.source_model, p.target, p.config).metrics;
  return r;
}

std::vector<ReplicateResult> run_replicates(const TrainConfig& config) {
  config.validate();
  return map_replicates(config.num_seeds,
                        [&config](std::size_t r) { return run_replicate(config, r); });
}

std::vector<TableRow> run_ablation(const TrainConfig& config) {
  config.validate();
  struct Variant {
    const char* label;
    LossMode mode;
    bool wsim;
  };
  static constexpr Variant kVariants[] = {{"neg", LossMode::neg_only, false},
                                          {"pos", LossMode::pos_only, false},
                                          {"pos+neg", LossMode::full, false},
                                          {"pos+neg+wsim", LossMode::full, true}};
  // per_replicate[r][v]
  const auto per_replicate = map_replicates(config.num_seeds, [&config](std::size_t r) {
    PreparedReplicate p = prepare(config, r);
    std::vector<MetricsReport> out;
    for (const auto& v : kVariants) {
      TrainConfig c = p.config;
      c.loss_mode = v.mode;
      c.use_wsim = v.wsim;
      out.push_back(adapt_target(p.source_model, p.target, c).metrics);
    }
    return out;
  });
  std::vector<TableRow> rows;
  for (std::size_t v = 0; v < std::size(kVariants); ++v) {
    std::vector<MetricsReport> runs;
    for (const auto& rep : per_replicate) runs.push_back(rep[v]);
    rows.push_back(summarize(kVariants[v].label, runs));
  }
  return rows;
}

SweepParam parse_sweep_param(std::string_view name) {
  if (name == "K" || name == "k") return SweepParam::k;
  if (name == "beta") return SweepParam::beta;
  throw ConfigError("unknown sweep parameter '" + std::string(name) + "' (expected K or beta)");
}

std::vector<TableRow> sweep_param(const TrainConfig& config, SweepParam param,
                                  std::span<const double> grid) {
  config.validate();
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  std::vector<TrainConfig> cells;
  for (double v : grid) {
    TrainConfig c = config;
    if (param == SweepParam::k) {
      if (!(v >= 1.0) || v != std::floor(v)) {
        throw ConfigError("K grid value " + format_value(v) + " is not a positive integer");
      }
      c.k = static_cast<std::size_t>(v);
    } else {
      c.beta = v;
    }
    c.validate();
    cells.push_back(std::move(c));
  }
  const auto per_replicate = map_replicates(config.num_seeds, [&](std::size_t r) {
    PreparedReplicate p = prepare(config, r);
    std::vector<MetricsReport> out;
    for (const auto& cell : cells) {
      TrainConfig c = replicate_config(cell, r);
      out.push_back(adapt_target(p.source_model, p.target, c).metrics);
    }
    return out;
  });
  std::vector<TableRow> rows;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<MetricsReport> runs;
    for (const auto& rep : per_replicate) runs.push_back(rep[g]);
    const std::string name = param == SweepParam::k ? "K=" : "beta=";
    rows.push_back(summarize(name + format_value(grid[g]), runs));
  }
  return rows;
}

void write_table_csv(std::span<const TableRow> rows, std::ostream& out) {
  const auto join = [](const std::vector<double>& values) {
    std::string s;
    char buf[32];
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.6f", values[i]);
      if (i > 0) s += ';';
      s += buf;
    }
    return s;
  };
  out << "label,mean_avg,std_avg,seed_avgs,epoch_curve\n";
  char buf[64];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", row.mean_avg, row.std_avg);
    out << row.label << ',' << buf << ',' << join(row.per_seed_avg) << ','
        << join(row.mean_curve) << '\n';
  }
}

void write_table_csv(std::span<const TableRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_table_csv(rows, out);
}

void dump_embeddings(const ModelParams& model, const LabeledDataset& dataset,
                     const std::filesystem::path& path) {
  const ForwardPass pass = model_forward(model, dataset.x);
  const auto predictions = predict_classes(pass.probs);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (std::size_t d = 0; d < pass.features.cols(); ++d) out << 'f' << d << ',';
  out << "label,pred\n";
  char buf[40];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : pass.features.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << dataset.y[i] << ',' << predictions[i] << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

namespace {

json report_json(const MetricsReport& report) {
  json per_class = json::array();
  for (const auto& acc : report.per_class_accuracy) {
    per_class.push_back(acc ? json(*acc) : json(nullptr));
  }
  json curve = json::array();
  for (const auto& p : report.epoch_curve) curve.push_back({{"epoch", p.epoch}, {"avg", p.avg}});
  return {{"per_class_accuracy", per_class},
          {"avg", report.avg},
          {"overall", report.overall},
          {"missing_classes", report.missing_classes},
          {"epoch_curve", curve}};
}

json step_json(const StepRecord& r) {
  return {{"step", r.step}, {"total", r.total}, {"pos", r.pos}, {"neg", r.neg}, {"alpha", r.alpha}};
}

}  // namespace

std::string metrics_report_to_json(const MetricsReport& report) {
  return report_json(report).dump(2);
}

std::string step_record_to_json(const StepRecord& record) { return step_json(record).dump(); }

std::string adapt_metrics_to_json(const AdaptResult& result, const TrainConfig& config,
                                  double wall_clock_seconds) {
  json steps = json::array();
  for (const auto& s : result.steps) steps.push_back(step_json(s));
  json doc{{"final", report_json(result.metrics)},
           {"steps", steps},
           {"metadata",
            {{"config_hash", config_hash(config)},
             {"seed", config.seed},
             {"skipped_bank_updates", result.banks.skipped_updates()},
             {"wall_clock_seconds", wall_clock_seconds}}}};
  return doc.dump(1);
}

}  // namespace cac
