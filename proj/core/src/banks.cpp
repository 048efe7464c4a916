#include "cac/banks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "cac/rng.hpp"

namespace cac {

Banks Banks::from_parts(Matrix features, Matrix probs, IndexMatrix neighbors,
                        std::vector<std::size_t> stored) {
  Banks b;
  b.features_ = std::move(features);
  b.probs_ = std::move(probs);
  b.neighbors_ = std::move(neighbors);
  b.stored_ = std::move(stored);
  b.index_slots();
  b.validate();
  return b;
}

Banks Banks::from_parts(Matrix features, Matrix probs, IndexMatrix neighbors) {
  std::vector<std::size_t> all(neighbors.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return from_parts(std::move(features), std::move(probs), std::move(neighbors), std::move(all));
}

void Banks::index_slots() {
  slot_.assign(neighbors_.rows(), kNotStored);
  for (std::size_t s = 0; s < stored_.size(); ++s) {
    if (stored_[s] >= slot_.size()) throw DimensionError("stored index beyond bank size");
    if (s > 0 && stored_[s] <= stored_[s - 1]) {
      throw DimensionError("stored indices must be strictly ascending");
    }
    slot_[stored_[s]] = s;
  }
}

std::size_t Banks::slot(std::size_t index) const {
  if (index >= size()) {
    throw DimensionError("bank index " + std::to_string(index) + " out of range");
  }
  if (slot_[index] == kNotStored) {
    throw DimensionError("dataset index " + std::to_string(index) + " is not stored in the bank");
  }
  return slot_[index];
}

std::span<const std::size_t> Banks::neighbors(std::size_t index) const {
  if (index >= size()) {
    throw DimensionError("bank index " + std::to_string(index) + " out of range");
  }
  return neighbors_.row(index);
}

void Banks::validate() const {
  const std::size_t m = stored_.size();
  if (features_.rows() != m || probs_.rows() != m) {
    throw DimensionError("F and P must have one row per stored index");
  }
  if (k() == 0) throw DimensionError("neighbor bank needs K >= 1");
  for (std::size_t s = 0; s < m; ++s) {
    auto f = features_.row(s);
    if (std::abs(std::sqrt(dot(f, f)) - 1.0) > 1e-9) {
      throw DimensionError("feature row " + std::to_string(stored_[s]) + " is not unit norm");
    }
    auto p = probs_.row(s);
    if (std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) > 1e-9) {
      throw DimensionError("prediction row " + std::to_string(stored_[s]) + " does not sum to 1");
    }
  }
  for (std::size_t i = 0; i < size(); ++i) {
    auto row = neighbors_.row(i);
    for (std::size_t a = 0; a < row.size(); ++a) {
      if (row[a] == i) throw DimensionError("N row " + std::to_string(i) + " contains itself");
      if (!is_stored(row[a])) {
        throw DimensionError("N row " + std::to_string(i) + " names a non-stored index");
      }
      for (std::size_t b = 0; b < a; ++b) {
        if (row[a] == row[b]) {
          throw DimensionError("N row " + std::to_string(i) + " repeats an index");
        }
      }
    }
  }
}

IndexMatrix topk_neighbors(const Banks& banks, const Matrix& query_features, std::size_t k,
                           std::span<const std::size_t> exclude) {
  if (exclude.size() != query_features.rows()) {
    throw DimensionError("topk_neighbors: one exclude index per query row required");
  }
  if (query_features.cols() != banks.feature_dim()) {
    throw DimensionError("topk_neighbors: query width differs from bank feature width");
  }
  const auto& stored = banks.stored_indices();
  const Matrix& bank_features = banks.features();
  IndexMatrix out(query_features.rows(), k);
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(stored.size());
  const auto better = [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  };
  for (std::size_t q = 0; q < query_features.rows(); ++q) {
    scored.clear();
    auto query = query_features.row(q);
    for (std::size_t s = 0; s < stored.size(); ++s) {
      if (stored[s] == exclude[q]) continue;
      scored.emplace_back(dot(query, bank_features.row(s)), stored[s]);
    }
    if (k > scored.size()) {
      throw DimensionError("topk_neighbors: k=" + std::to_string(k) + " exceeds the " +
                           std::to_string(scored.size()) + " available candidates");
    }
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                      scored.end(), better);
    for (std::size_t j = 0; j < k; ++j) out(q, j) = scored[j].second;
  }
  return out;
}

Banks init_banks(const ModelParams& params, const Matrix& target_x, std::size_t k,
                 double fraction, std::uint64_t seed) {
  const std::size_t n = target_x.rows();
  if (n == 0) throw DimensionError("init_banks: empty dataset");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw DimensionError("init_banks: bank fraction must lie in (0, 1]");
  }
  if (k == 0) throw DimensionError("init_banks: K must be positive");

  std::vector<std::size_t> stored;
  if (fraction == 1.0) {
    stored.resize(n);
    std::iota(stored.begin(), stored.end(), std::size_t{0});
  } else {
    const auto m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    Rng rng(seed);
    stored = rng.sample_without_replacement(n, std::min(m, n));
  }
  if (k >= stored.size()) {
    throw DimensionError("init_banks: K=" + std::to_string(k) + " must be below the stored count " +
                         std::to_string(stored.size()));
  }

  const ForwardPass pass = model_forward(params, target_x);
  const Matrix normalized = l2_normalize_rows(pass.features);

  Banks b;
  b.features_ = gather_rows(normalized, stored);
  b.probs_ = gather_rows(pass.probs, stored);
  b.stored_ = std::move(stored);
  b.neighbors_ = IndexMatrix(n, k);
  b.index_slots();

  std::vector<std::size_t> self(n);
  std::iota(self.begin(), self.end(), std::size_t{0});
  b.neighbors_ = topk_neighbors(b, normalized, k, self);
  return b;
}

std::size_t update_banks(Banks& banks, std::span<const std::size_t> batch_indices,
                         const Matrix& normalized_features, const Matrix& probs) {
  if (normalized_features.rows() != batch_indices.size() || probs.rows() != batch_indices.size()) {
    throw DimensionError("update_banks: rows must align with batch indices");
  }
  if (normalized_features.cols() != banks.feature_dim() || probs.cols() != banks.num_classes()) {
    throw DimensionError("update_banks: row width differs from the bank");
  }
  for (std::size_t idx : batch_indices) {
    if (idx >= banks.size()) {
      throw DimensionError("update_banks: index " + std::to_string(idx) +
                           " outside bank capacity " + std::to_string(banks.size()));
    }
  }
  std::size_t skipped = 0;
  for (std::size_t r = 0; r < batch_indices.size(); ++r) {
    const std::size_t idx = batch_indices[r];
    if (!banks.is_stored(idx)) {
      ++skipped;
      continue;
    }
    const std::size_t s = banks.slot_[idx];
    std::ranges::copy(normalized_features.row(r), banks.features_.row(s).begin());
    std::ranges::copy(probs.row(r), banks.probs_.row(s).begin());
  }
  const IndexMatrix fresh = topk_neighbors(banks, normalized_features, banks.k(), batch_indices);
  for (std::size_t r = 0; r < batch_indices.size(); ++r) {
    std::ranges::copy(fresh.row(r), banks.neighbors_.row(batch_indices[r]).begin());
  }
  banks.skipped_updates_ += skipped;
  return skipped;
}

std::vector<std::size_t> expanded_neighbors(const Banks& banks, std::size_t i) {
  std::vector<std::size_t> out;
  out.reserve(banks.k() * banks.k());
  for (std::size_t h : banks.neighbors(i)) {
    auto second = banks.neighbors(h);
    out.insert(out.end(), second.begin(), second.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double neighborhood_purity(const Banks& banks, std::span<const int> labels) {
  if (labels.size() != banks.size()) {
    throw DimensionError("neighborhood_purity: one label per bank row required");
  }
  std::size_t agree = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < banks.size(); ++i) {
    for (std::size_t j : banks.neighbors(i)) {
      agree += labels[i] == labels[j] ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(total);
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.precision(17);
  return out;
}

void dump_rows(const Matrix& m, const std::vector<std::size_t>& stored, const char* prefix,
               const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "index";
  for (std::size_t j = 0; j < m.cols(); ++j) out << ',' << prefix << j;
  out << '\n';
  for (std::size_t s = 0; s < m.rows(); ++s) {
    out << stored[s];
    for (double v : m.row(s)) out << ',' << v;
    out << '\n';
  }
}

}  // namespace

void dump_banks_csv(const Banks& banks, const std::filesystem::path& prefix) {
  const std::string base = prefix.string();
  dump_rows(banks.features(), banks.stored_indices(), "f", base + "_features.csv");
  dump_rows(banks.probs(), banks.stored_indices(), "p", base + "_probs.csv");
  auto out = open_csv(base + "_neighbors.csv");
  out << "index";
  for (std::size_t j = 0; j < banks.k(); ++j) out << ",n" << j;
  out << '\n';
  for (std::size_t i = 0; i < banks.size(); ++i) {
    out << i;
    for (std::size_t v : banks.neighbors(i)) out << ',' << v;
    out << '\n';
  }
}

}  // namespace cac
