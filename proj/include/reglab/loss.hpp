#ifndef REGLAB_LOSS_HPP
#define REGLAB_LOSS_HPP

#include "reglab/types.hpp"

namespace reglab {

struct LossValue {
    double value = 0.0;
    Eigen::VectorXd per_sample;  // length N, value == per_sample.mean()
};

struct LossGradient {
    Eigen::MatrixXd d_logits;  // N x C
};

// Sigmoid refinement weights g in (0,1), one per (sample, class).
// FartherIsHeavier uses g = sigmoid(beta * (d - delta)); CloserIsHeavier
// flips the sign so nearer samples carry more weight.
Eigen::MatrixXd refinement_term(const SampleGeometry& geometry, const LossConfig& config);

// Generalized focal loss: -(1/N) sum_i alpha_y (1 - p_{i,y})^gamma log p_{i,y}
// over the one-hot target expansion. config.all_class_sum enables the
// literal sum over every class instead.
LossValue gfl(const PredictionBatch& batch, const ClassWeights& weights, const LossConfig& config);

// GFL with each summand multiplied by the refinement weight g_{i,c}.
LossValue reg_loss(const PredictionBatch& batch, const SampleGeometry& geometry,
                   const ClassWeights& weights, const LossConfig& config);

// Multi-task combination: det + lambda_task * seg.
LossValue joint_loss(const LossValue& det, const LossValue& seg, const LossConfig& config);

// Analytic d(loss)/d(logits) through the softmax. g is a constant weight
// with respect to the logits (it depends only on geometry).
LossGradient gfl_gradient(const PredictionBatch& batch, const ClassWeights& weights,
                          const LossConfig& config);
LossGradient reg_gradient(const PredictionBatch& batch, const SampleGeometry& geometry,
                          const ClassWeights& weights, const LossConfig& config);

namespace detail {

// Focal summand -w (1-p)^gamma log p at clamped p, and its derivative in p.
double focal_term(double p, double w, double gamma, double prob_floor);
double focal_term_dp(double p, double w, double gamma, double prob_floor);

// Shared kernel: GFL with an arbitrary per-entry weight matrix
// w_{i,c} = alpha_c * g_{i,c}.
LossValue weighted_focal(const PredictionBatch& batch, const Eigen::MatrixXd& entry_weights,
                         const LossConfig& config);
LossGradient weighted_focal_gradient(const PredictionBatch& batch,
                                     const Eigen::MatrixXd& entry_weights,
                                     const LossConfig& config);

}  // namespace detail

}  // namespace reglab

#endif
