// Command-line front end for the cac library.
//
//   cac gen-data --config c.json --out-source s.csv --out-target t.csv
//   cac pretrain --config c.json --out source.json
//   cac adapt    --config c.json --model source.json --out adapted.json --metrics m.json
//   cac eval     --model adapted.json --data t.csv
//   cac dump     --model adapted.json --data t.csv --out emb.csv
//   cac ablate   --config c.json --out ablation.csv
//   cac sweep    --config c.json --param beta --grid 0,1,5 --out sweep.csv
//
// Exit codes: 0 success, 2 config error, 3 numeric failure, 1 anything else.

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <cac/config.hpp>
#include <cac/data.hpp>
#include <cac/error.hpp>
#include <cac/harness.hpp>
#include <cac/metrics.hpp>
#include <cac/model_io.hpp>

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

cac::LabeledDataset load_target(const cac::TrainConfig& config,
                                const std::optional<std::string>& csv) {
  if (csv) return cac::read_dataset_csv(*csv, config.num_classes, cac::Domain::target);
  return cac::generate_two_domain_blobs(config.shift).second;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_source,
                 const std::string& out_target) {
  const auto config = cac::load_config(config_path);
  const auto [source, target] = cac::generate_two_domain_blobs(config.shift);
  cac::write_dataset_csv(source, fs::path(out_source));
  cac::write_dataset_csv(target, fs::path(out_target));
  return 0;
}

int cmd_pretrain(const std::string& config_path, const std::string& out) {
  const auto config = cac::load_config(config_path);
  const auto [source, target] = cac::generate_two_domain_blobs(config.shift);
  const auto model = cac::pretrain_source(config, source);
  cac::save_model(model, out);
  const auto src = cac::evaluate(model, source);
  const auto tgt = cac::evaluate(model, target);
  std::printf("source avg %.2f  target avg %.2f\n", src.avg, tgt.avg);
  return 0;
}

int cmd_adapt(const std::string& config_path, const std::string& model_path,
              const std::string& out, const std::string& metrics_path,
              const std::optional<std::string>& target_csv) {
  const auto config = cac::load_config(config_path);
  const auto model = cac::load_model(model_path);
  const auto target = load_target(config, target_csv);

  const auto start = std::chrono::steady_clock::now();
  const auto result = cac::adapt_target(model, target, config);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

  cac::save_model(result.model, out);
  write_text(metrics_path, cac::adapt_metrics_to_json(result, config, elapsed.count()));
  std::printf("target avg %.2f  overall %.2f  (%zu steps)\n", result.metrics.avg,
              result.metrics.overall, result.steps.size());
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data) {
  const auto model = cac::load_model(model_path);
  const auto dataset = cac::read_dataset_csv(data, model.num_classes());
  const auto report = cac::evaluate(model, dataset);
  std::cout << cac::metrics_report_to_json(report) << '\n';
  if (report.missing_classes) std::cerr << "warning: some classes have no samples\n";
  return 0;
}

int cmd_dump(const std::string& model_path, const std::string& data, const std::string& out) {
  const auto model = cac::load_model(model_path);
  const auto dataset = cac::read_dataset_csv(data, model.num_classes());
  cac::dump_embeddings(model, dataset, out);
  return 0;
}

void print_rows(const std::vector<cac::TableRow>& rows) {
  for (const auto& row : rows) {
    std::printf("%-14s %6.2f +- %.2f\n", row.label.c_str(), row.mean_avg, row.std_avg);
  }
}

int cmd_ablate(const std::string& config_path, const std::string& out) {
  const auto rows = cac::run_ablation(cac::load_config(config_path));
  cac::write_table_csv(rows, fs::path(out));
  print_rows(rows);
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::vector<double>& grid, const std::string& out) {
  const auto config = cac::load_config(config_path);
  const auto rows = cac::sweep_param(config, cac::parse_sweep_param(param), grid);
  cac::write_table_csv(rows, fs::path(out));
  print_rows(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrast-and-clustering source-free domain adaptation"};
  app.require_subcommand(1);

  std::string config, model, out, metrics, data, out_source, out_target, param;
  std::optional<std::string> target_csv;
  std::vector<double> grid;

  auto* gen = app.add_subcommand("gen-data", "Write the source and target CSVs of a config");
  gen->add_option("--config", config)->required();
  gen->add_option("--out-source", out_source)->required();
  gen->add_option("--out-target", out_target)->required();

  auto* pre = app.add_subcommand("pretrain", "Train the source model");
  pre->add_option("--config", config)->required();
  pre->add_option("--out", out)->required();

  auto* adapt = app.add_subcommand("adapt", "Adapt a source model to the unlabeled target");
  adapt->add_option("--config", config)->required();
  adapt->add_option("--model", model)->required()->check(CLI::ExistingFile);
  adapt->add_option("--out", out)->required();
  adapt->add_option("--metrics", metrics)->required();
  adapt->add_option("--target", target_csv, "Target CSV (default: generated from the config)")
      ->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "Per-class and average accuracy as JSON");
  eval->add_option("--model", model)->required()->check(CLI::ExistingFile);
  eval->add_option("--data", data)->required()->check(CLI::ExistingFile);

  auto* dump = app.add_subcommand("dump", "Write features, labels and predictions");
  dump->add_option("--model", model)->required()->check(CLI::ExistingFile);
  dump->add_option("--data", data)->required()->check(CLI::ExistingFile);
  dump->add_option("--out", out)->required();

  auto* ablate = app.add_subcommand("ablate", "Loss component ablation table");
  ablate->add_option("--config", config)->required();
  ablate->add_option("--out", out)->required();

  auto* sweep = app.add_subcommand("sweep", "Sweep K or beta");
  sweep->add_option("--config", config)->required();
  sweep->add_option("--param", param)->required();
  sweep->add_option("--grid", grid)->required()->delimiter(',');
  sweep->add_option("--out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; argument errors exit 1.
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_gen_data(config, out_source, out_target);
    if (*pre) return cmd_pretrain(config, out);
    if (*adapt) return cmd_adapt(config, model, out, metrics, target_csv);
    if (*eval) return cmd_eval(model, data);
    if (*dump) return cmd_dump(model, data, out);
    if (*ablate) return cmd_ablate(config, out);
    if (*sweep) return cmd_sweep(config, param, grid, out);
  } catch (const cac::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const cac::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
