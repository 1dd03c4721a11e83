#include "reglab/rebalance.hpp"

#include <cmath>

namespace reglab {

namespace {

ClassWeights weights_from_counts(const AnnotationCounts& counts,
                                 const std::vector<std::string>& class_order, double class_divisor,
                                 WeightScheme scheme) {
    ClassWeights out;
    out.scheme = scheme;
    out.alpha.resize(static_cast<Eigen::Index>(class_order.size()));
    for (size_t c = 0; c < class_order.size(); ++c) {
        auto it = counts.per_class.find(class_order[c]);
        if (it == counts.per_class.end()) {
            throw SchemaError("no annotation count for class: " + class_order[c]);
        }
        if (it->second <= 0) {
            throw ZeroCountClass("class has zero annotations: " + class_order[c]);
        }
        out.alpha(static_cast<Eigen::Index>(c)) =
            static_cast<double>(counts.total) / (class_divisor * static_cast<double>(it->second));
    }
    return out;
}

}  // namespace

ClassWeights inverse_frequency_weights(const AnnotationCounts& counts,
                                       const std::vector<std::string>& class_order) {
    return weights_from_counts(counts, class_order, 1.0, WeightScheme::InverseFrequency);
}

ClassWeights normalized_inverse_frequency_weights(const AnnotationCounts& counts,
                                                  const std::vector<std::string>& class_order) {
    return weights_from_counts(counts, class_order, static_cast<double>(class_order.size()),
                               WeightScheme::InverseFrequencyNormalized);
}

LossValue rebalanced_cross_entropy(const PredictionBatch& batch, const ClassWeights& weights) {
    if (weights.alpha.size() != batch.num_classes()) {
        throw DimensionMismatch("class weight length does not match batch width");
    }
    LossValue out;
    out.per_sample = Eigen::VectorXd::Zero(batch.size());
    for (Eigen::Index i = 0; i < batch.size(); ++i) {
        const int y = batch.labels(i);
        const double p = clamp_prob(batch.probs(i, y), 1e-7);
        out.per_sample(i) = -weights.alpha(y) * std::log(p);
    }
    out.value = out.per_sample.sum();
    return out;
}

LossGradient rebalanced_ce_gradient(const PredictionBatch& batch, const ClassWeights& weights,
                                    double prob_floor) {
    if (!batch.logits) throw MissingLogits("gradient requires logits");
    if (weights.alpha.size() != batch.num_classes()) {
        throw DimensionMismatch("class weight length does not match batch width");
    }
    LossGradient out;
    out.d_logits = Eigen::MatrixXd::Zero(batch.size(), batch.num_classes());
    for (Eigen::Index i = 0; i < batch.size(); ++i) {
        const int y = batch.labels(i);
        const double p = batch.probs(i, y);
        if (p <= prob_floor || p >= 1.0 - prob_floor) continue;  // clamped, flat
        // d/dz_j of -a log p_y = a (p_j - 1{j = y}).
        out.d_logits.row(i) = weights.alpha(y) * batch.probs.row(i);
        out.d_logits(i, y) -= weights.alpha(y);
    }
    return out;
}

}  // namespace reglab
