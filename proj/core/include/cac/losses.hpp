#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "cac/banks.hpp"
#include "cac/matrix.hpp"

namespace cac {

enum class LossMode { pos_only, neg_only, full };

std::string_view to_string(LossMode mode);
LossMode parse_loss_mode(std::string_view name);

/// alpha(iter) = (max_iter / (max_iter + iter))^beta, scaling the negative term.
struct DecaySchedule {
  double beta = 0.0;
  std::size_t max_iter = 1;
};

double decay_factor(std::size_t iter, const DecaySchedule& schedule);

/// S x S 0/1 matrix over a mini-batch. Entry (i, j) == 0 removes batch member
/// j from the negatives of anchor i. The diagonal is always 0 and is never
/// read: an anchor is never its own negative.
using MaskMatrix = BasicMatrix<std::uint8_t>;

/// Zeroes (i, j) when batch_indices[j] is a neighbor or an expanded neighbor
/// of batch_indices[i]; every other off-diagonal entry is 1.
MaskMatrix build_similarity_mask(std::span<const std::size_t> batch_indices, const Banks& banks);

/// All ones except the diagonal. Used when negative refinement is disabled.
MaskMatrix permissive_mask(std::size_t batch_size);

struct LossBreakdown {
  double total = 0.0;
  double positive_term = 0.0;  // (1/S) sum_i sum_{j in N(i)} p_i . P_j
  double negative_term = 0.0;  // (1/S) sum_i sum_{b unmasked} sum_{h in N(b)} p_i . P_h
  double alpha = 1.0;
  Matrix grad_wrt_batch_probs;  // S x C
};

/// Neighborhood contrastive loss over a mini-batch:
///
///   total = alpha * negative_term - positive_term
///
/// Positives of anchor i are the bank predictions of its K neighbors.
/// Negatives are the bank predictions of the K neighbors of every batch
/// member left unmasked for i. Bank rows are constants, so the gradient only
/// flows into `batch_probs`. The term omitted by `mode` is reported as 0.
LossBreakdown cac_loss(const Matrix& batch_probs, std::span<const std::size_t> batch_indices,
                       const Banks& banks, const MaskMatrix& mask, double alpha, LossMode mode);

struct ScalarWithGradient {
  double value = 0.0;
  Matrix grad_wrt_batch_probs;
};

/// InfoNCE extended to the K bank neighbors as positives, with the other
/// batch members as the contrast set:
///
///   -(1/S) sum_i sum_{j in N(i)} log( e^{p_i.P_j} / (sum_{b != i, b != j} e^{p_i.p_b} + e^{p_i.P_j}) )
///
/// Batch members enter through `batch_probs`, so the gradient includes their
/// contribution as contrast samples.
ScalarWithGradient multi_positive_nce(const Matrix& batch_probs,
                                      std::span<const std::size_t> batch_indices,
                                      const Banks& banks);

/// -(1/S) sum_i log(P_same(i) / P_dis(i)) where each likelihood is a product
/// of e^{p_i.P_j} / Z_i over its pair set and Z_i sums e^{p_i.P_q} over every
/// stored q other than i. Evaluated in log space.
double likelihood_ratio_objective(const Matrix& batch_probs,
                                  std::span<const std::size_t> batch_indices, const Banks& banks,
                                  const MaskMatrix& mask);

}  // namespace cac
