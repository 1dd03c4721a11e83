#ifndef REGLAB_OPTIM_HPP
#define REGLAB_OPTIM_HPP

#include <Eigen/Dense>
#include <functional>

#include "reglab/errors.hpp"

namespace reglab {

enum class Manifold { Euclidean, UnitSphere };

struct ParameterVector {
    Eigen::VectorXd theta;
    Manifold manifold = Manifold::Euclidean;
};

enum class Decay { Constant, InverseT };

struct Schedule {
    double eta0 = 0.1;
    Decay decay = Decay::Constant;
    long t = 0;

    double rate() const {
        return decay == Decay::Constant ? eta0 : eta0 / (1.0 + static_cast<double>(t));
    }
    void advance() { ++t; }
};

// theta <- theta - eta_t * grad. Advances the schedule counter.
ParameterVector sgd_step(const ParameterVector& params, const Eigen::VectorXd& grad,
                         Schedule& schedule);

// Tangent projection (I - theta theta^T) grad, step, then normalization
// retraction back onto the unit sphere.
ParameterVector rsgd_step(const ParameterVector& params, const Eigen::VectorXd& euclidean_grad,
                          Schedule& schedule);

// Elementwise sign(t) * max(|t| - step * reg_strength, 0).
Eigen::VectorXd prox_soft_threshold(const Eigen::VectorXd& theta, double step,
                                    double reg_strength);

// Gradient step followed by the soft-threshold prox.
ParameterVector prox_gradient_step(const ParameterVector& params, const Eigen::VectorXd& grad,
                                   Schedule& schedule, double reg_strength);

/// Primal weights, their multipliers, and convergence bookkeeping for the
/// constrained class-weight problem sum(alpha) = 1, alpha >= 0.
struct DualState {
    Eigen::VectorXd lambda_c;  // length C
    Eigen::VectorXd alpha;     // length C, kept non-negative
    bool converged = false;
    long iterations = 0;
};

struct PrimalDualOptions {
    double penalty = 1.0;        // augmented-Lagrangian penalty / dual step
    int inner_steps = 50;        // projected-gradient steps per dual update
    double fd_step = 1e-6;       // finite-difference step for the objective
    Eigen::VectorXd theta_init;  // optional unconstrained block; may be empty
    // When set, receives |sum(alpha) - 1| after each dual update.
    std::vector<double>* residual_trace = nullptr;
};

using PrimalDualObjective =
    std::function<double(const Eigen::VectorXd& theta, const Eigen::VectorXd& alpha)>;

// Alternating primal descent on (theta, alpha) with non-negativity
// projection on alpha, and dual ascent on the multipliers for the
// summed constraint sum(alpha) - 1. The dual step uses the augmented
// penalty, which keeps the constraint residual monotonically shrinking.
DualState primal_dual_solve(const PrimalDualObjective& objective, DualState init,
                            Schedule schedule, long max_iters, double tol,
                            const PrimalDualOptions& options = {});

}  // namespace reglab

#endif
