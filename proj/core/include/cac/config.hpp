#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "cac/data.hpp"
#include "cac/losses.hpp"

namespace cac {

/// Every knob of a pretrain + adapt run, including the synthetic benchmark.
struct TrainConfig {
  std::size_t hidden_width = 32;
  std::size_t feature_dim = 16;
  std::size_t num_classes = 3;
  std::size_t k = 3;
  double beta = 0.0;
  double lr = 5e-3;                // classifier layer
  double lr_feature_scale = 0.1;   // extractor layers train at lr * scale
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::size_t pretrain_epochs = 50;
  std::size_t adapt_epochs = 30;
  std::uint64_t seed = 0;
  LossMode loss_mode = LossMode::full;
  bool use_wsim = true;
  double bank_fraction = 1.0;
  std::optional<std::size_t> max_iter_override;
  std::size_t num_seeds = 5;  // replicates for ablations and sweeps
  DomainShiftSpec shift = default_shift_spec();

  /// Throws ConfigError naming the first inconsistent field.
  void validate() const;

  /// Target samples held by the banks for this config.
  std::size_t stored_target_count() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Parses a JSON config. Missing keys keep their defaults; unknown keys are
/// rejected. Throws ConfigError.
TrainConfig parse_config(std::string_view json_text);
TrainConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const TrainConfig& config);

/// FNV-1a 64 over the canonical JSON form, as 16 hex digits.
std::string config_hash(const TrainConfig& config);

/// Config for replicate r: seed + r and shift.seed + r.
TrainConfig replicate_config(const TrainConfig& config, std::size_t replicate);

}  // namespace cac
