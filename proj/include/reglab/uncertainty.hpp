#ifndef REGLAB_UNCERTAINTY_HPP
#define REGLAB_UNCERTAINTY_HPP

#include "reglab/loss.hpp"
#include "reglab/types.hpp"

namespace reglab {

/// Per-entry Gaussian variational parameters over the probabilities.
struct VariationalState {
    Eigen::MatrixXd mu;        // N x C
    Eigen::MatrixXd sigma_sq;  // N x C, >= 0

    void validate() const;
};

// E[clamp(p, floor, 1-floor)] for p ~ N(mu, sigma_sq). sigma_sq = 0
// degenerates to clamp(mu).
double marginal_prob(double mu, double sigma_sq, double prob_floor = 1e-7, int order = 20);

// d marginal_prob / d mu = P(floor < p < 1 - floor).
double marginal_prob_dmu(double mu, double sigma_sq, double prob_floor = 1e-7);

// REG evaluated at the marginalized probabilities p_hat.
LossValue reg_u_loss(const VariationalState& state, const Eigen::VectorXi& labels,
                     const SampleGeometry& geometry, const ClassWeights& weights,
                     const LossConfig& config);

// REG-U gradient w.r.t. logits: mu = softmax(logits) per entry, with the
// shared variance config.sigma_sq. Chains d loss/d p_hat, d p_hat/d mu,
// and the softmax Jacobian.
LossGradient reg_u_gradient(const PredictionBatch& batch, const SampleGeometry& geometry,
                            const ClassWeights& weights, const LossConfig& config);

// KL(N(q_mu, q_var) || N(p_mu, p_var)), closed form.
double gaussian_kl(double q_mu, double q_var, double p_mu, double p_var);

// Variational free energy: E_q[L_REG] + sum KL(q || prior). The
// expectation integrates the loss integrand per entry (not the loss of
// the mean).
double free_energy(const VariationalState& state, const VariationalState& prior,
                   const Eigen::VectorXi& labels, const SampleGeometry& geometry,
                   const ClassWeights& weights, const LossConfig& config);

}  // namespace reglab

#endif
