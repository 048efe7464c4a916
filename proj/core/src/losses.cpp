#include "cac/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace cac {

std::string_view to_string(LossMode mode) {
  switch (mode) {
    case LossMode::pos_only:
      return "pos_only";
    case LossMode::neg_only:
      return "neg_only";
    case LossMode::full:
      return "full";
  }
  return "full";
}

LossMode parse_loss_mode(std::string_view name) {
  if (name == "pos_only") return LossMode::pos_only;
  if (name == "neg_only") return LossMode::neg_only;
  if (name == "full") return LossMode::full;
  throw DimensionError("unknown loss mode: " + std::string(name));
}

double decay_factor(std::size_t iter, const DecaySchedule& schedule) {
  if (iter == 0 || schedule.beta == 0.0) return 1.0;
  const double max_iter = static_cast<double>(schedule.max_iter);
  return std::pow(max_iter / (max_iter + static_cast<double>(iter)), schedule.beta);
}

MaskMatrix permissive_mask(std::size_t batch_size) {
  MaskMatrix mask(batch_size, batch_size, 1);
  for (std::size_t i = 0; i < batch_size; ++i) mask(i, i) = 0;
  return mask;
}

MaskMatrix build_similarity_mask(std::span<const std::size_t> batch_indices, const Banks& banks) {
  const std::size_t s = batch_indices.size();
  MaskMatrix mask = permissive_mask(s);
  for (std::size_t i = 0; i < s; ++i) {
    std::vector<std::size_t> similar = expanded_neighbors(banks, batch_indices[i]);
    auto direct = banks.neighbors(batch_indices[i]);
    similar.insert(similar.end(), direct.begin(), direct.end());
    std::sort(similar.begin(), similar.end());
    for (std::size_t j = 0; j < s; ++j) {
      if (j != i && std::binary_search(similar.begin(), similar.end(), batch_indices[j])) {
        mask(i, j) = 0;
      }
    }
  }
  return mask;
}

namespace {

void check_batch(const Matrix& batch_probs, std::span<const std::size_t> batch_indices,
                 const Banks& banks) {
  if (batch_probs.rows() != batch_indices.size()) {
    throw DimensionError("loss: batch probabilities and indices differ in length");
  }
  if (batch_probs.cols() != banks.num_classes()) {
    throw DimensionError("loss: batch class count differs from the prediction bank");
  }
  for (std::size_t i = 0; i < batch_probs.rows(); ++i) {
    auto r = batch_probs.row(i);
    const double sum = std::accumulate(r.begin(), r.end(), 0.0);
    if (!(std::abs(sum - 1.0) <= 1e-6)) {
      throw DimensionError("loss: probability row " + std::to_string(i) + " sums to " +
                           std::to_string(sum));
    }
  }
}

void check_mask(const MaskMatrix& mask, std::size_t s) {
  if (mask.rows() != s || mask.cols() != s) {
    throw DimensionError("loss: mask shape does not match the batch");
  }
}

/// Row b holds the sum of bank predictions over the neighbors of batch member b.
Matrix neighbor_prediction_sums(std::span<const std::size_t> batch_indices, const Banks& banks) {
  Matrix sums(batch_indices.size(), banks.num_classes());
  for (std::size_t b = 0; b < batch_indices.size(); ++b) {
    auto out = sums.row(b);
    for (std::size_t h : banks.neighbors(batch_indices[b])) {
      auto p = banks.prediction(h);
      for (std::size_t c = 0; c < out.size(); ++c) out[c] += p[c];
    }
  }
  return sums;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += std::exp(v - mx);
  return mx + std::log(s);
}

}  // namespace

LossBreakdown cac_loss(const Matrix& batch_probs, std::span<const std::size_t> batch_indices,
                       const Banks& banks, const MaskMatrix& mask, double alpha, LossMode mode) {
  check_batch(batch_probs, batch_indices, banks);
  const std::size_t s = batch_indices.size();
  check_mask(mask, s);

  const Matrix positives = neighbor_prediction_sums(batch_indices, banks);
  // negatives(i) = sum over unmasked b != i of positives(b)
  Matrix negatives(s, banks.num_classes());
  for (std::size_t i = 0; i < s; ++i) {
    auto out = negatives.row(i);
    for (std::size_t b = 0; b < s; ++b) {
      if (b == i || mask(i, b) == 0) continue;
      auto src = positives.row(b);
      for (std::size_t c = 0; c < out.size(); ++c) out[c] += src[c];
    }
  }

  const bool use_pos = mode != LossMode::neg_only;
  const bool use_neg = mode != LossMode::pos_only;
  const double inv = s == 0 ? 0.0 : 1.0 / static_cast<double>(s);

  LossBreakdown out;
  out.alpha = alpha;
  out.grad_wrt_batch_probs = Matrix(s, banks.num_classes());
  for (std::size_t i = 0; i < s; ++i) {
    auto p = batch_probs.row(i);
    auto g = out.grad_wrt_batch_probs.row(i);
    if (use_pos) {
      out.positive_term += dot(p, positives.row(i));
      auto a = positives.row(i);
      for (std::size_t c = 0; c < g.size(); ++c) g[c] -= inv * a[c];
    }
    if (use_neg) {
      out.negative_term += dot(p, negatives.row(i));
      auto o = negatives.row(i);
      for (std::size_t c = 0; c < g.size(); ++c) g[c] += alpha * inv * o[c];
    }
  }
  out.positive_term *= inv;
  out.negative_term *= inv;
  out.total = alpha * out.negative_term - out.positive_term;
  return out;
}

ScalarWithGradient multi_positive_nce(const Matrix& batch_probs,
                                      std::span<const std::size_t> batch_indices,
                                      const Banks& banks) {
  check_batch(batch_probs, batch_indices, banks);
  const std::size_t s = batch_indices.size();
  const std::size_t classes = banks.num_classes();
  const double inv = s == 0 ? 0.0 : 1.0 / static_cast<double>(s);

  ScalarWithGradient out;
  out.grad_wrt_batch_probs = Matrix(s, classes);
  std::vector<double> contrast(s);
  for (std::size_t i = 0; i < s; ++i) {
    auto pi = batch_probs.row(i);
    for (std::size_t b = 0; b < s; ++b) contrast[b] = std::exp(dot(pi, batch_probs.row(b)));
    for (std::size_t j : banks.neighbors(batch_indices[i])) {
      auto pj = banks.prediction(j);
      const double pos_sim = dot(pi, pj);
      const double pos_exp = std::exp(pos_sim);
      double denom = pos_exp;
      for (std::size_t b = 0; b < s; ++b) {
        if (b != i && batch_indices[b] != j) denom += contrast[b];
      }
      out.value += std::log(denom) - pos_sim;

      // d/dp_i: -P_j + (e^{s_ij} P_j + sum_b e^{s_ib} p_b) / denom
      // d/dp_b: e^{s_ib} p_i / denom
      auto gi = out.grad_wrt_batch_probs.row(i);
      const double w_pos = pos_exp / denom;
      for (std::size_t c = 0; c < classes; ++c) gi[c] += inv * (w_pos - 1.0) * pj[c];
      for (std::size_t b = 0; b < s; ++b) {
        if (b == i || batch_indices[b] == j) continue;
        const double w = inv * contrast[b] / denom;
        auto pb = batch_probs.row(b);
        auto gb = out.grad_wrt_batch_probs.row(b);
        for (std::size_t c = 0; c < classes; ++c) {
          gi[c] += w * pb[c];
          gb[c] += w * pi[c];
        }
      }
    }
  }
  out.value *= inv;
  if (!std::isfinite(out.value)) throw NumericError("multi_positive_nce: non-finite value");
  return out;
}

double likelihood_ratio_objective(const Matrix& batch_probs,
                                  std::span<const std::size_t> batch_indices, const Banks& banks,
                                  const MaskMatrix& mask) {
  check_batch(batch_probs, batch_indices, banks);
  const std::size_t s = batch_indices.size();
  check_mask(mask, s);
  const auto& stored = banks.stored_indices();

  double total = 0.0;
  std::vector<double> sims;
  sims.reserve(stored.size());
  for (std::size_t i = 0; i < s; ++i) {
    auto pi = batch_probs.row(i);
    sims.clear();
    for (std::size_t q : stored) {
      if (q != batch_indices[i]) sims.push_back(dot(pi, banks.prediction(q)));
    }
    const double log_z = log_sum_exp(sims);

    double pos = 0.0;
    std::size_t pos_count = 0;
    for (std::size_t j : banks.neighbors(batch_indices[i])) {
      pos += dot(pi, banks.prediction(j));
      ++pos_count;
    }
    double neg = 0.0;
    std::size_t neg_count = 0;
    for (std::size_t b = 0; b < s; ++b) {
      if (b == i || mask(i, b) == 0) continue;
      for (std::size_t h : banks.neighbors(batch_indices[b])) {
        neg += dot(pi, banks.prediction(h));
        ++neg_count;
      }
    }
    // log P_same - log P_dis = (pos - |K| log Z) - (neg - |O^k| log Z)
    const double coeff = static_cast<double>(pos_count) - static_cast<double>(neg_count);
    double log_ratio = pos - neg;
    if (coeff != 0.0) log_ratio -= coeff * log_z;
    total -= log_ratio;
  }
  const double value = s == 0 ? 0.0 : total / static_cast<double>(s);
  if (!std::isfinite(value)) throw NumericError("likelihood_ratio_objective: non-finite value");
  return value;
}

}  // namespace cac
