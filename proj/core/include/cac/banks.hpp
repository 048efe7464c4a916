#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "cac/matrix.hpp"
#include "cac/network.hpp"

namespace cac {

/// Memory banks over a target set of n samples.
///
/// The feature bank F (m x d, unit rows) and prediction bank P (m x C, softmax
/// rows) hold the m stored samples. With a bank fraction below one, m < n and
/// only a fixed subset of dataset indices is stored. The neighbor bank N has a
/// row for every one of the n samples; its entries are dataset indices of
/// stored samples, ordered by descending cosine similarity.
class Banks {
 public:
  static constexpr std::size_t kNotStored = std::numeric_limits<std::size_t>::max();

  Banks() = default;

  /// Builds banks from explicit contents and checks every invariant.
  /// `stored` lists the dataset index of each F/P row, strictly ascending,
  /// all below `neighbors.rows()`.
  static Banks from_parts(Matrix features, Matrix probs, IndexMatrix neighbors,
                          std::vector<std::size_t> stored);
  /// Same, with every dataset index stored.
  static Banks from_parts(Matrix features, Matrix probs, IndexMatrix neighbors);

  std::size_t size() const noexcept { return neighbors_.rows(); }
  std::size_t k() const noexcept { return neighbors_.cols(); }
  std::size_t stored_count() const noexcept { return stored_.size(); }
  std::size_t feature_dim() const noexcept { return features_.cols(); }
  std::size_t num_classes() const noexcept { return probs_.cols(); }

  bool is_stored(std::size_t index) const { return index < size() && slot_[index] != kNotStored; }
  /// Row of F/P holding dataset index `index`; throws if not stored.
  std::size_t slot(std::size_t index) const;

  std::span<const double> feature(std::size_t index) const { return features_.row(slot(index)); }
  std::span<const double> prediction(std::size_t index) const { return probs_.row(slot(index)); }
  std::span<const std::size_t> neighbors(std::size_t index) const;

  const Matrix& features() const noexcept { return features_; }
  const Matrix& probs() const noexcept { return probs_; }
  const IndexMatrix& neighbor_bank() const noexcept { return neighbors_; }
  const std::vector<std::size_t>& stored_indices() const noexcept { return stored_; }

  /// Batch rows passed to update_banks that were not stored (fraction mode).
  std::size_t skipped_updates() const noexcept { return skipped_updates_; }

  /// Throws DimensionError describing the first violated invariant.
  void validate() const;

  friend bool operator==(const Banks&, const Banks&) = default;

 private:
  friend Banks init_banks(const ModelParams&, const Matrix&, std::size_t, double, std::uint64_t);
  friend std::size_t update_banks(Banks&, std::span<const std::size_t>, const Matrix&,
                                  const Matrix&);

  void index_slots();

  Matrix features_;
  Matrix probs_;
  IndexMatrix neighbors_;
  std::vector<std::size_t> stored_;
  std::vector<std::size_t> slot_;
  std::size_t skipped_updates_ = 0;
};

/// Runs the model over all target inputs, stores normalized features and
/// softmax outputs, and fills N. With fraction < 1, round(fraction * n)
/// indices are drawn once from `seed` and only those are stored.
Banks init_banks(const ModelParams& params, const Matrix& target_x, std::size_t k,
                 double fraction, std::uint64_t seed);

/// For each query row, the k stored dataset indices with the largest dot
/// product against F, best first, ties toward the smaller index. `exclude[i]`
/// is the dataset index of query row i and never appears in its result.
IndexMatrix topk_neighbors(const Banks& banks, const Matrix& query_features, std::size_t k,
                           std::span<const std::size_t> exclude);

/// Replaces the F and P rows of the batch and recomputes N for the batch rows
/// against the updated F. Other rows are left untouched. Batch indices that
/// are not stored skip the F/P write; their N rows are still refreshed.
/// Returns the number of skipped rows in this call.
std::size_t update_banks(Banks& banks, std::span<const std::size_t> batch_indices,
                         const Matrix& normalized_features, const Matrix& probs);

/// Sorted, deduplicated union of N[h] over h in N[i]. Reads the bank only.
std::vector<std::size_t> expanded_neighbors(const Banks& banks, std::size_t i);

/// Fraction of (i, j in N[i]) pairs whose labels agree.
double neighborhood_purity(const Banks& banks, std::span<const int> labels);

/// Writes <prefix>_features.csv, <prefix>_probs.csv and <prefix>_neighbors.csv.
void dump_banks_csv(const Banks& banks, const std::filesystem::path& prefix);

}  // namespace cac
