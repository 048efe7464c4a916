#include "cac/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cac {

using nlohmann::json;

void TrainConfig::validate() const {
  if (hidden_width == 0 || feature_dim == 0) throw ConfigError("layer widths must be positive");
  if (num_classes < 2) throw ConfigError("C must be at least 2");
  if (shift.num_classes != num_classes) {
    throw ConfigError("C does not match the number of shift centers");
  }
  shift.validate();
  if (k == 0) throw ConfigError("K must be positive");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be a finite value >= 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (!(lr_feature_scale > 0.0) || !std::isfinite(lr_feature_scale)) {
    throw ConfigError("lr_feature_scale must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (loss_mode != LossMode::pos_only && batch_size < 2) {
    throw ConfigError("batch_size must be at least 2 when the loss uses negatives");
  }
  if (!(bank_fraction > 0.0 && bank_fraction <= 1.0)) {
    throw ConfigError("bank_fraction must lie in (0, 1]");
  }
  if (max_iter_override && *max_iter_override == 0) {
    throw ConfigError("max_iter_override must be positive");
  }
  if (num_seeds == 0) throw ConfigError("num_seeds must be positive");
  if (k >= stored_target_count()) {
    throw ConfigError("K=" + std::to_string(k) + " must be below the stored target count " +
                      std::to_string(stored_target_count()));
  }
}

std::size_t TrainConfig::stored_target_count() const {
  std::size_t n = shift.n_target;
  if (shift.target_proportions) {
    const auto counts = rounded_class_counts(n, *shift.target_proportions);
    n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  }
  if (bank_fraction >= 1.0) return n;
  return static_cast<std::size_t>(std::llround(bank_fraction * static_cast<double>(n)));
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError(std::string("unknown key '") + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

template <typename T>
void read_unsigned(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(std::string("config key '") + key + "' must be a nonnegative integer");
  }
  out = v.get<T>();
}

DomainShiftSpec parse_shift(const json& j, std::size_t num_classes) {
  reject_unknown(j, {"n_source", "n_target", "centers", "cluster_std", "rotation_degrees",
                     "translation", "target_proportions", "seed"},
                 "shift");
  DomainShiftSpec s = default_shift_spec();
  read_unsigned(j, "n_source", s.n_source);
  read_unsigned(j, "n_target", s.n_target);
  read(j, "cluster_std", s.cluster_std);
  read(j, "rotation_degrees", s.rotation_degrees);
  read(j, "translation", s.translation);
  read_unsigned(j, "seed", s.seed);
  if (j.contains("centers")) {
    std::vector<std::vector<double>> rows;
    read(j, "centers", rows);
    if (rows.empty()) throw ConfigError("shift.centers must be nonempty");
    Matrix centers(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != centers.cols()) throw ConfigError("shift.centers rows are ragged");
      for (std::size_t c = 0; c < centers.cols(); ++c) centers(r, c) = rows[r][c];
    }
    s.centers = std::move(centers);
  }
  if (j.contains("target_proportions") && !j.at("target_proportions").is_null()) {
    std::vector<double> p;
    read(j, "target_proportions", p);
    s.target_proportions = std::move(p);
  }
  s.num_classes = s.centers.rows();
  if (s.num_classes != num_classes) {
    throw ConfigError("shift.centers has " + std::to_string(s.num_classes) +
                      " rows but C is " + std::to_string(num_classes));
  }
  return s;
}

json shift_to_json(const DomainShiftSpec& s) {
  std::vector<std::vector<double>> centers;
  for (std::size_t r = 0; r < s.centers.rows(); ++r) {
    auto row = s.centers.row(r);
    centers.emplace_back(row.begin(), row.end());
  }
  json j{{"n_source", s.n_source},
         {"n_target", s.n_target},
         {"centers", centers},
         {"cluster_std", s.cluster_std},
         {"rotation_degrees", s.rotation_degrees},
         {"translation", s.translation},
         {"seed", s.seed}};
  j["target_proportions"] =
      s.target_proportions ? json(*s.target_proportions) : json(nullptr);
  return j;
}

}  // namespace

TrainConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"hidden_width", "feature_dim", "C", "K", "beta", "lr", "lr_feature_scale",
                  "momentum", "batch_size", "pretrain_epochs", "adapt_epochs", "seed",
                  "loss_mode", "use_wsim", "bank_fraction", "max_iter_override", "num_seeds",
                  "shift"},
                 "config");
  TrainConfig c;
  read_unsigned(j, "hidden_width", c.hidden_width);
  read_unsigned(j, "feature_dim", c.feature_dim);
  read_unsigned(j, "C", c.num_classes);
  read_unsigned(j, "K", c.k);
  read(j, "beta", c.beta);
  read(j, "lr", c.lr);
  read(j, "lr_feature_scale", c.lr_feature_scale);
  read(j, "momentum", c.momentum);
  read_unsigned(j, "batch_size", c.batch_size);
  read_unsigned(j, "pretrain_epochs", c.pretrain_epochs);
  read_unsigned(j, "adapt_epochs", c.adapt_epochs);
  read_unsigned(j, "seed", c.seed);
  read(j, "use_wsim", c.use_wsim);
  read(j, "bank_fraction", c.bank_fraction);
  read_unsigned(j, "num_seeds", c.num_seeds);
  if (j.contains("loss_mode")) {
    std::string mode;
    read(j, "loss_mode", mode);
    try {
      c.loss_mode = parse_loss_mode(mode);
    } catch (const DimensionError& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("max_iter_override") && !j.at("max_iter_override").is_null()) {
    std::size_t m = 0;
    read_unsigned(j, "max_iter_override", m);
    c.max_iter_override = m;
  }
  if (j.contains("shift")) {
    c.shift = parse_shift(j.at("shift"), c.num_classes);
  } else if (c.num_classes != c.shift.num_classes) {
    throw ConfigError("C differs from the default benchmark; provide shift.centers");
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const TrainConfig& c) {
  json j{{"hidden_width", c.hidden_width},
         {"feature_dim", c.feature_dim},
         {"C", c.num_classes},
         {"K", c.k},
         {"beta", c.beta},
         {"lr", c.lr},
         {"lr_feature_scale", c.lr_feature_scale},
         {"momentum", c.momentum},
         {"batch_size", c.batch_size},
         {"pretrain_epochs", c.pretrain_epochs},
         {"adapt_epochs", c.adapt_epochs},
         {"seed", c.seed},
         {"loss_mode", to_string(c.loss_mode)},
         {"use_wsim", c.use_wsim},
         {"bank_fraction", c.bank_fraction},
         {"num_seeds", c.num_seeds},
         {"shift", shift_to_json(c.shift)}};
  j["max_iter_override"] = c.max_iter_override ? json(*c.max_iter_override) : json(nullptr);
  return j.dump(2);
}

std::string config_hash(const TrainConfig& config) {
  const std::string canonical = json::parse(config_to_json(config)).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TrainConfig replicate_config(const TrainConfig& config, std::size_t replicate) {
  TrainConfig c = config;
  c.seed += replicate;
  c.shift.seed += replicate;
  return c;
}

}  // namespace cac
