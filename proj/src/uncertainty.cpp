#include "reglab/uncertainty.hpp"

#include <cmath>

#include "reglab/quadrature.hpp"

namespace reglab {

void VariationalState::validate() const {
    if (mu.rows() != sigma_sq.rows() || mu.cols() != sigma_sq.cols()) {
        throw DimensionMismatch("mu and sigma_sq shapes differ");
    }
    if (!mu.allFinite() || !sigma_sq.allFinite()) {
        throw SchemaError("non-finite variational parameter");
    }
    if ((sigma_sq.array() < 0.0).any()) {
        throw NonPositiveVariance("variational variance must be >= 0");
    }
}

double marginal_prob(double mu, double sigma_sq, double prob_floor, int order) {
    return clamped_gaussian_expectation([](double p) { return p; }, mu, sigma_sq, prob_floor,
                                        1.0 - prob_floor, order);
}

double marginal_prob_dmu(double mu, double sigma_sq, double prob_floor) {
    if (sigma_sq == 0.0) {
        return (mu > prob_floor && mu < 1.0 - prob_floor) ? 1.0 : 0.0;
    }
    const double sigma = std::sqrt(sigma_sq);
    return normal_cdf((1.0 - prob_floor - mu) / sigma) - normal_cdf((prob_floor - mu) / sigma);
}

namespace {

Eigen::MatrixXd entry_weights_for(const SampleGeometry& geometry, const ClassWeights& weights,
                                  const LossConfig& config, Eigen::Index n, Eigen::Index c) {
    if (geometry.distances.rows() != n || geometry.distances.cols() != c) {
        throw DimensionMismatch("geometry shape does not match state");
    }
    if (weights.alpha.size() != c) {
        throw DimensionMismatch("class weight length does not match state width");
    }
    return weights.alpha.transpose().replicate(n, 1).cwiseProduct(
        refinement_term(geometry, config));
}

}  // namespace

LossValue reg_u_loss(const VariationalState& state, const Eigen::VectorXi& labels,
                     const SampleGeometry& geometry, const ClassWeights& weights,
                     const LossConfig& config) {
    state.validate();
    const Eigen::Index n = state.mu.rows();
    const Eigen::Index c = state.mu.cols();
    if (labels.size() != n) throw DimensionMismatch("labels length does not match state");
    const Eigen::MatrixXd w = entry_weights_for(geometry, weights, config, n, c);

    LossValue out;
    out.per_sample = Eigen::VectorXd::Zero(n);
    auto term = [&](Eigen::Index i, Eigen::Index j) {
        const double p_hat =
            marginal_prob(state.mu(i, j), state.sigma_sq(i, j), config.prob_floor);
        return detail::focal_term(p_hat, w(i, j), config.gamma, config.prob_floor);
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        if (config.all_class_sum) {
            for (Eigen::Index j = 0; j < c; ++j) out.per_sample(i) += term(i, j);
        } else {
            out.per_sample(i) = term(i, labels(i));
        }
    }
    out.value = n > 0 ? out.per_sample.mean() : 0.0;
    return out;
}

LossGradient reg_u_gradient(const PredictionBatch& batch, const SampleGeometry& geometry,
                            const ClassWeights& weights, const LossConfig& config) {
    if (!batch.logits) throw MissingLogits("gradient requires logits");
    const Eigen::Index n = batch.size();
    const Eigen::Index c = batch.num_classes();
    const Eigen::MatrixXd w = entry_weights_for(geometry, weights, config, n, c);

    LossGradient out;
    out.d_logits = Eigen::MatrixXd::Zero(n, c);
    const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
    auto slope = [&](Eigen::Index i, Eigen::Index j) {
        const double mu = batch.probs(i, j);
        const double p_hat = marginal_prob(mu, config.sigma_sq, config.prob_floor);
        // With sigma_sq > 0, p_hat lies strictly inside the clamp range,
        // so pass it through the unclamped derivative branch directly.
        double d_term;
        if (config.sigma_sq == 0.0) {
            d_term = detail::focal_term_dp(mu, w(i, j), config.gamma, config.prob_floor);
        } else {
            d_term = detail::focal_term_dp(p_hat, w(i, j), config.gamma, config.prob_floor) *
                     marginal_prob_dmu(mu, config.sigma_sq, config.prob_floor);
        }
        return d_term;
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd t = Eigen::VectorXd::Zero(c);
        if (config.all_class_sum) {
            for (Eigen::Index j = 0; j < c; ++j) t(j) = slope(i, j) * batch.probs(i, j);
        } else {
            const int y = batch.labels(i);
            t(y) = slope(i, y) * batch.probs(i, y);
        }
        out.d_logits.row(i) = inv_n * (t.transpose() - t.sum() * batch.probs.row(i));
    }
    return out;
}

double gaussian_kl(double q_mu, double q_var, double p_mu, double p_var) {
    if (q_var <= 0.0 || p_var <= 0.0) {
        throw NonPositiveVariance("KL requires strictly positive variances");
    }
    const double diff = q_mu - p_mu;
    return 0.5 * std::log(p_var / q_var) + (q_var + diff * diff) / (2.0 * p_var) - 0.5;
}

double free_energy(const VariationalState& state, const VariationalState& prior,
                   const Eigen::VectorXi& labels, const SampleGeometry& geometry,
                   const ClassWeights& weights, const LossConfig& config) {
    state.validate();
    prior.validate();
    const Eigen::Index n = state.mu.rows();
    const Eigen::Index c = state.mu.cols();
    if (prior.mu.rows() != n || prior.mu.cols() != c) {
        throw DimensionMismatch("prior shape does not match state");
    }
    if (labels.size() != n) throw DimensionMismatch("labels length does not match state");
    const Eigen::MatrixXd w = entry_weights_for(geometry, weights, config, n, c);

    // Expected loss: per-entry quadrature of the focal integrand over q.
    double expected = 0.0;
    auto expect_term = [&](Eigen::Index i, Eigen::Index j) {
        auto f = [&](double p) {
            return detail::focal_term(p, w(i, j), config.gamma, config.prob_floor);
        };
        return clamped_gaussian_expectation(f, state.mu(i, j), state.sigma_sq(i, j),
                                            config.prob_floor, 1.0 - config.prob_floor, 40);
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        if (config.all_class_sum) {
            for (Eigen::Index j = 0; j < c; ++j) expected += expect_term(i, j);
        } else {
            expected += expect_term(i, labels(i));
        }
    }
    if (n > 0) expected /= static_cast<double>(n);

    double kl = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) {
            kl += gaussian_kl(state.mu(i, j), state.sigma_sq(i, j), prior.mu(i, j),
                              prior.sigma_sq(i, j));
        }
    }
    return expected + kl;
}

}  // namespace reglab
