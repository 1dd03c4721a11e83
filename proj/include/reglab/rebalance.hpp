#ifndef REGLAB_REBALANCE_HPP
#define REGLAB_REBALANCE_HPP

#include "reglab/loss.hpp"
#include "reglab/types.hpp"

namespace reglab {

// alpha_c = N_total / N_c, in the order given by class_order.
// Throws ZeroCountClass if any class has no annotations.
ClassWeights inverse_frequency_weights(const AnnotationCounts& counts,
                                       const std::vector<std::string>& class_order);

// alpha_c = N_total / (C * N_c); equals 1 everywhere on a balanced dataset.
ClassWeights normalized_inverse_frequency_weights(const AnnotationCounts& counts,
                                                  const std::vector<std::string>& class_order);

// Sum-form weighted cross-entropy: -sum_i alpha_{y_i} log p_{i,y_i}.
// Note this is a sum, not a mean; divide by N to compare with the
// mean-form focal losses. per_sample holds the per-sample summands.
LossValue rebalanced_cross_entropy(const PredictionBatch& batch, const ClassWeights& weights);

// Analytic gradient of the sum-form weighted cross-entropy w.r.t. logits.
LossGradient rebalanced_ce_gradient(const PredictionBatch& batch, const ClassWeights& weights,
                                    double prob_floor = 1e-7);

}  // namespace reglab

#endif
