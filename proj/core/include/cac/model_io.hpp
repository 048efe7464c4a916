#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cac/network.hpp"

namespace cac {

inline constexpr std::string_view kModelFormatVersion = "cac-model-v1";

/// JSON document:
///   {"version": "cac-model-v1",
///    "layers": [{"role": "extractor"|"classifier", "rows": in, "cols": out,
///                "activation": "relu"|"identity",
///                "weight": [row-major in*out], "bias": [out]}, ...]}
/// Optimizer velocity is not stored; a loaded model starts with zero velocity.
std::string model_to_json(const ModelParams& params);
ModelParams model_from_json(std::string_view text);

void save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace cac
