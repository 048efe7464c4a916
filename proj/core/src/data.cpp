#include "cac/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

#include "cac/rng.hpp"

namespace cac {

std::string_view to_string(Domain d) { return d == Domain::source ? "source" : "target"; }

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (int label : y) ++counts.at(static_cast<std::size_t>(label));
  return counts;
}

void LabeledDataset::validate() const {
  if (x.rows() != y.size()) throw DimensionError("dataset: sample and label counts differ");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= num_classes) {
      throw DimensionError("dataset: label " + std::to_string(y[i]) + " at row " +
                           std::to_string(i) + " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
  if (!all_finite(x.data())) throw DimensionError("dataset: non-finite sample value");
}

void DomainShiftSpec::validate() const {
  if (num_classes < 2) throw ConfigError("shift spec: need at least 2 classes");
  if (centers.rows() != num_classes) throw ConfigError("shift spec: need one center per class");
  if (centers.cols() < 2) throw ConfigError("shift spec: centers need at least 2 dimensions");
  if (n_source < num_classes || n_target < num_classes) {
    throw ConfigError("shift spec: sample counts must be at least the class count");
  }
  if (!(cluster_std > 0.0)) throw ConfigError("shift spec: cluster_std must be positive");
  if (translation.size() != centers.cols()) {
    throw ConfigError("shift spec: translation length must equal the input width");
  }
  if (!all_finite(centers.data()) || !all_finite(translation) || !std::isfinite(rotation_degrees)) {
    throw ConfigError("shift spec: non-finite geometry");
  }
  if (target_proportions) {
    const auto& p = *target_proportions;
    if (p.size() != num_classes) throw ConfigError("shift spec: one proportion per class required");
    if (std::any_of(p.begin(), p.end(), [](double v) { return !(v >= 0.0); })) {
      throw ConfigError("shift spec: proportions must be nonnegative");
    }
    if (std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) > 1e-9) {
      throw ConfigError("shift spec: proportions must sum to 1");
    }
  }
}

DomainShiftSpec default_shift_spec() {
  DomainShiftSpec spec;
  spec.num_classes = 3;
  spec.n_source = 300;
  spec.n_target = 300;
  // Two close classes and a distant third: the rotation about the center of
  // mass sweeps part of class 0 across the 0/1 boundary.
  spec.centers = Matrix(3, 2, {-2.0, 0.0, 2.0, 0.0, 0.0, 8.0});
  spec.cluster_std = 0.8;
  spec.rotation_degrees = 30.0;
  spec.translation = {0.5, 0.0};
  spec.seed = 0;
  return spec;
}

namespace {

std::vector<std::size_t> balanced_counts(std::size_t n, std::size_t classes) {
  std::vector<std::size_t> counts(classes, n / classes);
  for (std::size_t c = 0; c < n % classes; ++c) ++counts[c];
  return counts;
}

LabeledDataset draw_blobs(const DomainShiftSpec& spec, std::span<const std::size_t> counts,
                          Domain domain, Rng& rng) {
  std::vector<int> labels;
  for (std::size_t c = 0; c < counts.size(); ++c) labels.insert(labels.end(), counts[c], static_cast<int>(c));
  rng.shuffle(labels);

  LabeledDataset ds;
  ds.num_classes = spec.num_classes;
  ds.domain = domain;
  ds.x = Matrix(labels.size(), spec.input_width());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto center = spec.centers.row(static_cast<std::size_t>(labels[i]));
    auto row = ds.x.row(i);
    for (std::size_t d = 0; d < row.size(); ++d) row[d] = center[d] + spec.cluster_std * rng.normal();
  }
  ds.y = std::move(labels);
  return ds;
}

}  // namespace

std::pair<LabeledDataset, LabeledDataset> generate_two_domain_blobs(const DomainShiftSpec& spec) {
  spec.validate();
  Rng source_rng(derive_seed(spec.seed, 1));
  Rng target_rng(derive_seed(spec.seed, 2));

  const auto source_counts = balanced_counts(spec.n_source, spec.num_classes);
  const auto target_counts = spec.target_proportions
                                 ? rounded_class_counts(spec.n_target, *spec.target_proportions)
                                 : balanced_counts(spec.n_target, spec.num_classes);

  LabeledDataset source = draw_blobs(spec, source_counts, Domain::source, source_rng);
  LabeledDataset target = draw_blobs(spec, target_counts, Domain::target, target_rng);

  std::vector<double> pivot = column_sums(spec.centers);
  for (double& v : pivot) v /= static_cast<double>(spec.num_classes);
  const double theta = spec.rotation_degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto row = target.x.row(i);
    const double u = row[0] - pivot[0];
    const double v = row[1] - pivot[1];
    row[0] = pivot[0] + cs * u - sn * v;
    row[1] = pivot[1] + sn * u + cs * v;
    for (std::size_t d = 0; d < row.size(); ++d) row[d] += spec.translation[d];
  }
  return {std::move(source), std::move(target)};
}

std::vector<std::size_t> rounded_class_counts(std::size_t n, std::span<const double> proportions) {
  std::vector<std::size_t> counts;
  counts.reserve(proportions.size());
  for (double p : proportions) {
    counts.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(n) * p)));
  }
  return counts;
}

LabeledDataset apply_imbalance(const LabeledDataset& dataset, std::span<const double> proportions,
                               std::uint64_t seed) {
  if (proportions.size() != dataset.num_classes) {
    throw DimensionError("apply_imbalance: one proportion per class required");
  }
  if (std::any_of(proportions.begin(), proportions.end(), [](double v) { return !(v >= 0.0); })) {
    throw DimensionError("apply_imbalance: proportions must be nonnegative");
  }
  const double total = std::accumulate(proportions.begin(), proportions.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) {
    throw DimensionError("apply_imbalance: proportions sum to " + std::to_string(total) +
                         ", expected 1");
  }
  std::vector<std::vector<std::size_t>> by_class(dataset.num_classes);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    by_class[static_cast<std::size_t>(dataset.y[i])].push_back(i);
  }
  const auto counts = rounded_class_counts(dataset.size(), proportions);
  Rng rng(seed);
  std::vector<std::size_t> picked;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const auto& pool = by_class[c];
    if (counts[c] > 0 && pool.empty()) {
      throw DimensionError("apply_imbalance: class " + std::to_string(c) + " has no samples");
    }
    const std::size_t unique = std::min(counts[c], pool.size());
    for (std::size_t k : rng.sample_without_replacement(pool.size(), unique)) picked.push_back(pool[k]);
    for (std::size_t extra = unique; extra < counts[c]; ++extra) picked.push_back(pool[rng.below(pool.size())]);
  }
  rng.shuffle(picked);

  LabeledDataset out;
  out.num_classes = dataset.num_classes;
  out.domain = dataset.domain;
  out.x = gather_rows(dataset.x, picked);
  out.y.reserve(picked.size());
  for (std::size_t i : picked) out.y.push_back(dataset.y[i]);
  return out;
}

void write_dataset_csv(const LabeledDataset& dataset, std::ostream& out) {
  for (std::size_t d = 0; d < dataset.input_width(); ++d) out << 'x' << d << ',';
  out << "label\n";
  char buf[40];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : dataset.x.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << dataset.y[i] << '\n';
  }
}

void write_dataset_csv(const LabeledDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_dataset_csv(dataset, out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

LabeledDataset read_dataset_csv(std::istream& in, std::optional<std::size_t> num_classes,
                                Domain domain) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) fail(line_no, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  if (header.size() < 2 || header.back() != "label") fail(line_no, "header must end with 'label'");
  const std::size_t width = header.size() - 1;
  for (std::size_t d = 0; d < width; ++d) {
    if (header[d] != "x" + std::to_string(d)) {
      fail(line_no, "expected column 'x" + std::to_string(d) + "', found '" +
                        std::string(header[d]) + "'");
    }
  }

  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != width + 1) {
      fail(line_no, "expected " + std::to_string(width + 1) + " fields, found " +
                        std::to_string(fields.size()));
    }
    for (std::size_t d = 0; d < width; ++d) {
      double v = 0.0;
      const auto f = fields[d];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc{} || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
        fail(line_no, "invalid number '" + std::string(f) + "'");
      }
      values.push_back(v);
    }
    int label = 0;
    const auto f = fields.back();
    const auto res = std::from_chars(f.data(), f.data() + f.size(), label);
    if (res.ec != std::errc{} || res.ptr != f.data() + f.size() || label < 0) {
      fail(line_no, "label '" + std::string(f) + "' is not a nonnegative integer");
    }
    if (num_classes && static_cast<std::size_t>(label) >= *num_classes) {
      fail(line_no, "label " + std::to_string(label) + " outside [0, " +
                        std::to_string(*num_classes) + ")");
    }
    labels.push_back(label);
  }

  LabeledDataset ds;
  ds.domain = domain;
  const std::size_t n = labels.size();
  ds.x = Matrix(n, width, std::move(values));
  ds.num_classes = num_classes.value_or(
      labels.empty() ? 0 : static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1);
  ds.y = std::move(labels);
  return ds;
}

LabeledDataset read_dataset_csv(const std::filesystem::path& path,
                                std::optional<std::size_t> num_classes, Domain domain) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_dataset_csv(in, num_classes, domain);
}

}  // namespace cac
