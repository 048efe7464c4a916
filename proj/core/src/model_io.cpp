#include "cac/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cac {

using nlohmann::json;

namespace {

json layer_to_json(const DenseLayer& layer, std::string_view role) {
  return json{{"role", role},
              {"rows", layer.in_width()},
              {"cols", layer.out_width()},
              {"activation", to_string(layer.activation)},
              {"weight", layer.params.weight.values()},
              {"bias", layer.params.bias}};
}

DenseLayer layer_from_json(const json& j) {
  DenseLayer layer;
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  layer.activation = parse_activation(j.at("activation").get<std::string>());
  layer.params.weight = Matrix(rows, cols, j.at("weight").get<std::vector<double>>());
  layer.params.bias = j.at("bias").get<std::vector<double>>();
  if (layer.params.bias.size() != cols) throw ParseError("model layer bias length mismatch");
  return layer;
}

}  // namespace

std::string model_to_json(const ModelParams& params) {
  json layers = json::array();
  for (const auto& l : params.extractor) layers.push_back(layer_to_json(l, "extractor"));
  layers.push_back(layer_to_json(params.classifier, "classifier"));
  json doc{{"version", kModelFormatVersion}, {"layers", layers}};
  return doc.dump(1);
}

ModelParams model_from_json(std::string_view text) {
  ModelParams m;
  try {
    const json doc = json::parse(text);
    if (doc.at("version").get<std::string>() != kModelFormatVersion) {
      throw ParseError("unsupported model format version");
    }
    const auto& layers = doc.at("layers");
    if (!layers.is_array() || layers.empty()) throw ParseError("model has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto role = layers[i].at("role").get<std::string>();
      const bool last = i + 1 == layers.size();
      if (role == "classifier" && last) {
        m.classifier = layer_from_json(layers[i]);
      } else if (role == "extractor" && !last) {
        m.extractor.push_back(layer_from_json(layers[i]));
      } else {
        throw ParseError("model layers must be extractor layers followed by one classifier");
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model document: ") + e.what());
  } catch (const DimensionError& e) {
    throw ParseError(std::string("malformed model document: ") + e.what());
  }
  m.velocity = zeros_like(m);
  m.validate();
  return m;
}

void save_model(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << model_to_json(params) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace cac
