#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "cac/matrix.hpp"

namespace cac {

enum class Domain { source, target };

std::string_view to_string(Domain d);

struct LabeledDataset {
  Matrix x;            // n x d_in
  std::vector<int> y;  // n labels in [0, num_classes)
  std::size_t num_classes = 0;
  Domain domain = Domain::source;

  std::size_t size() const noexcept { return y.size(); }
  std::size_t input_width() const noexcept { return x.cols(); }
  std::vector<std::size_t> class_counts() const;

  /// Throws DimensionError on label/shape inconsistencies or non-finite inputs.
  void validate() const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

/// Parameters of a synthetic two-domain Gaussian-blob benchmark.
struct DomainShiftSpec {
  std::size_t num_classes = 3;
  std::size_t n_source = 300;
  std::size_t n_target = 300;
  Matrix centers;  // num_classes x d_in
  double cluster_std = 1.0;
  double rotation_degrees = 0.0;        // applied in the (x0, x1) plane
  std::vector<double> translation;      // d_in, applied after rotation
  std::optional<std::vector<double>> target_proportions;
  std::uint64_t seed = 0;

  std::size_t input_width() const noexcept { return centers.cols(); }
  /// Throws ConfigError on a degenerate spec.
  void validate() const;

  friend bool operator==(const DomainShiftSpec&, const DomainShiftSpec&) = default;
};

/// Three classes in the plane with a 30 degree rotation and a 0.5 unit shift
/// of the target domain.
DomainShiftSpec default_shift_spec();

/// Source: Gaussian blobs around `centers`, classes balanced.
/// Target: fresh blobs (class sizes from target_proportions when given),
/// rotated about the mean of the centers, then translated.
/// Source and target draw from separate streams derived from spec.seed.
std::pair<LabeledDataset, LabeledDataset> generate_two_domain_blobs(const DomainShiftSpec& spec);

/// round(n * p_c) per class, rounding half away from zero.
std::vector<std::size_t> rounded_class_counts(std::size_t n, std::span<const double> proportions);

/// Resamples so class c holds round(n * proportions[c]) rows: without
/// replacement while the class has enough rows, with replacement beyond that.
LabeledDataset apply_imbalance(const LabeledDataset& dataset, std::span<const double> proportions,
                               std::uint64_t seed);

/// CSV with header "x0,...,x{d-1},label"; reals written with 17 significant digits.
void write_dataset_csv(const LabeledDataset& dataset, std::ostream& out);
void write_dataset_csv(const LabeledDataset& dataset, const std::filesystem::path& path);

/// Parses the CSV written above. num_classes defaults to max label + 1.
/// Throws ParseError naming the offending line.
LabeledDataset read_dataset_csv(std::istream& in, std::optional<std::size_t> num_classes = {},
                                Domain domain = Domain::target);
LabeledDataset read_dataset_csv(const std::filesystem::path& path,
                                std::optional<std::size_t> num_classes = {},
                                Domain domain = Domain::target);

}  // namespace cac
