#include "reglab/loss.hpp"

#include <cmath>

namespace reglab {

namespace detail {

double focal_term(double p, double w, double gamma, double prob_floor) {
    const double pc = clamp_prob(p, prob_floor);
    return -w * std::pow(1.0 - pc, gamma) * std::log(pc);
}

double focal_term_dp(double p, double w, double gamma, double prob_floor) {
    // Clamped regions are flat; the subgradient there is zero.
    if (p <= prob_floor || p >= 1.0 - prob_floor) return 0.0;
    if (gamma == 0.0) return -w / p;
    const double q = 1.0 - p;
    return -w * (-gamma * std::pow(q, gamma - 1.0) * std::log(p) + std::pow(q, gamma) / p);
}

LossValue weighted_focal(const PredictionBatch& batch, const Eigen::MatrixXd& entry_weights,
                         const LossConfig& config) {
    const Eigen::Index n = batch.size();
    const Eigen::Index c = batch.num_classes();
    if (entry_weights.rows() != n || entry_weights.cols() != c) {
        throw DimensionMismatch("entry weights shape does not match batch");
    }
    LossValue out;
    out.per_sample = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (config.all_class_sum) {
            double acc = 0.0;
            for (Eigen::Index j = 0; j < c; ++j) {
                acc += focal_term(batch.probs(i, j), entry_weights(i, j), config.gamma,
                                  config.prob_floor);
            }
            out.per_sample(i) = acc;
        } else {
            const int y = batch.labels(i);
            out.per_sample(i) =
                focal_term(batch.probs(i, y), entry_weights(i, y), config.gamma, config.prob_floor);
        }
    }
    out.value = n > 0 ? out.per_sample.mean() : 0.0;
    return out;
}

LossGradient weighted_focal_gradient(const PredictionBatch& batch,
                                     const Eigen::MatrixXd& entry_weights,
                                     const LossConfig& config) {
    if (!batch.logits) throw MissingLogits("gradient requires logits");
    const Eigen::Index n = batch.size();
    const Eigen::Index c = batch.num_classes();
    if (entry_weights.rows() != n || entry_weights.cols() != c) {
        throw DimensionMismatch("entry weights shape does not match batch");
    }
    LossGradient out;
    out.d_logits = Eigen::MatrixXd::Zero(n, c);
    const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        // t_j = (d term / d p_j) * p_j; the softmax Jacobian then gives
        // d/d z_j = t_j - (sum_k t_k) p_j.
        Eigen::VectorXd t = Eigen::VectorXd::Zero(c);
        if (config.all_class_sum) {
            for (Eigen::Index j = 0; j < c; ++j) {
                t(j) = focal_term_dp(batch.probs(i, j), entry_weights(i, j), config.gamma,
                                     config.prob_floor) *
                       batch.probs(i, j);
            }
        } else {
            const int y = batch.labels(i);
            t(y) = focal_term_dp(batch.probs(i, y), entry_weights(i, y), config.gamma,
                                 config.prob_floor) *
                   batch.probs(i, y);
        }
        const double tsum = t.sum();
        out.d_logits.row(i) = inv_n * (t.transpose() - tsum * batch.probs.row(i));
    }
    return out;
}

}  // namespace detail

Eigen::MatrixXd refinement_term(const SampleGeometry& geometry, const LossConfig& config) {
    const double sign =
        config.refinement_direction == RefinementDirection::FartherIsHeavier ? 1.0 : -1.0;
    return (1.0 +
            (-sign * config.beta * (geometry.distances.array() - config.delta)).exp())
        .inverse()
        .matrix();
}

namespace {

Eigen::MatrixXd alpha_weights(const PredictionBatch& batch, const ClassWeights& weights) {
    if (weights.alpha.size() != batch.num_classes()) {
        throw DimensionMismatch("class weight length does not match batch width");
    }
    return weights.alpha.transpose().replicate(batch.size(), 1);
}

void check_geometry(const PredictionBatch& batch, const SampleGeometry& geometry) {
    if (geometry.distances.rows() != batch.size() ||
        geometry.distances.cols() != batch.num_classes()) {
        throw DimensionMismatch("geometry shape does not match batch");
    }
}

}  // namespace

LossValue gfl(const PredictionBatch& batch, const ClassWeights& weights, const LossConfig& config) {
    return detail::weighted_focal(batch, alpha_weights(batch, weights), config);
}

LossValue reg_loss(const PredictionBatch& batch, const SampleGeometry& geometry,
                   const ClassWeights& weights, const LossConfig& config) {
    check_geometry(batch, geometry);
    const Eigen::MatrixXd w =
        alpha_weights(batch, weights).cwiseProduct(refinement_term(geometry, config));
    return detail::weighted_focal(batch, w, config);
}

LossValue joint_loss(const LossValue& det, const LossValue& seg, const LossConfig& config) {
    if (!std::isfinite(det.value) || !std::isfinite(seg.value)) {
        throw NonFiniteObjective("joint loss inputs must be finite");
    }
    LossValue out;
    out.value = det.value + config.lambda_task * seg.value;
    out.per_sample.resize(1);
    out.per_sample(0) = out.value;
    return out;
}

LossGradient gfl_gradient(const PredictionBatch& batch, const ClassWeights& weights,
                          const LossConfig& config) {
    return detail::weighted_focal_gradient(batch, alpha_weights(batch, weights), config);
}

LossGradient reg_gradient(const PredictionBatch& batch, const SampleGeometry& geometry,
                          const ClassWeights& weights, const LossConfig& config) {
    check_geometry(batch, geometry);
    const Eigen::MatrixXd w =
        alpha_weights(batch, weights).cwiseProduct(refinement_term(geometry, config));
    return detail::weighted_focal_gradient(batch, w, config);
}

}  // namespace reglab
