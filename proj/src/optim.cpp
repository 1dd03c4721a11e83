#include "reglab/optim.hpp"

#include <cmath>

namespace reglab {

ParameterVector sgd_step(const ParameterVector& params, const Eigen::VectorXd& grad,
                         Schedule& schedule) {
    if (params.manifold != Manifold::Euclidean) {
        throw ManifoldMismatch("sgd_step requires a Euclidean parameter vector");
    }
    ParameterVector next = params;
    next.theta -= schedule.rate() * grad;
    schedule.advance();
    return next;
}

ParameterVector rsgd_step(const ParameterVector& params, const Eigen::VectorXd& euclidean_grad,
                          Schedule& schedule) {
    if (params.manifold != Manifold::UnitSphere) {
        throw ManifoldMismatch("rsgd_step requires a UnitSphere parameter vector");
    }
    const Eigen::VectorXd& theta = params.theta;
    const Eigen::VectorXd riem_grad = euclidean_grad - theta.dot(euclidean_grad) * theta;
    Eigen::VectorXd stepped = theta - schedule.rate() * riem_grad;
    const double norm = stepped.norm();
    if (norm < 1e-300) {
        throw ZeroNormAfterStep("retraction undefined at the origin; reduce the step size");
    }
    schedule.advance();
    ParameterVector next = params;
    next.theta = stepped / norm;
    return next;
}

Eigen::VectorXd prox_soft_threshold(const Eigen::VectorXd& theta, double step,
                                    double reg_strength) {
    const double tau = step * reg_strength;
    return theta.unaryExpr([tau](double v) {
        const double mag = std::abs(v) - tau;
        return mag > 0.0 ? (v > 0.0 ? mag : -mag) : 0.0;
    });
}

ParameterVector prox_gradient_step(const ParameterVector& params, const Eigen::VectorXd& grad,
                                   Schedule& schedule, double reg_strength) {
    if (params.manifold != Manifold::Euclidean) {
        throw ManifoldMismatch("prox_gradient_step requires a Euclidean parameter vector");
    }
    const double eta = schedule.rate();
    ParameterVector next = params;
    next.theta = prox_soft_threshold(params.theta - eta * grad, eta, reg_strength);
    schedule.advance();
    return next;
}

namespace {

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd probe = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        probe(j) = x(j) + h;
        const double hi = f(probe);
        probe(j) = x(j) - h;
        const double lo = f(probe);
        probe(j) = x(j);
        g(j) = (hi - lo) / (2.0 * h);
    }
    return g;
}

}  // namespace

DualState primal_dual_solve(const PrimalDualObjective& objective, DualState init,
                            Schedule schedule, long max_iters, double tol,
                            const PrimalDualOptions& options) {
    const Eigen::Index c = init.alpha.size();
    if (c < 1) throw DimensionMismatch("primal_dual_solve requires C >= 1");
    if (init.lambda_c.size() != c) {
        throw DimensionMismatch("multiplier length does not match alpha");
    }

    DualState state = std::move(init);
    Eigen::VectorXd theta = options.theta_init;
    const double rho = options.penalty;

    if (!std::isfinite(objective(theta, state.alpha))) {
        throw NonFiniteObjective("objective is non-finite at the initial point");
    }

    for (long outer = 0; outer < max_iters; ++outer) {
        state.iterations = outer + 1;
        const double eta = schedule.rate();
        for (int inner = 0; inner < options.inner_steps; ++inner) {
            const double residual = state.alpha.sum() - 1.0;
            // Augmented Lagrangian: obj + lambda . (alpha - 1/C) + rho/2 r^2.
            // The multiplier contribution to d/d alpha_c is lambda_c.
            if (theta.size() > 0) {
                auto f_theta = [&](const Eigen::VectorXd& th) {
                    return objective(th, state.alpha);
                };
                theta -= eta * fd_gradient(f_theta, theta, options.fd_step);
            }
            auto f_alpha = [&](const Eigen::VectorXd& a) { return objective(theta, a); };
            Eigen::VectorXd g = fd_gradient(f_alpha, state.alpha, options.fd_step);
            g.array() += state.lambda_c.array() + rho * residual;
            state.alpha = (state.alpha - eta * g).cwiseMax(0.0);
        }
        const double residual = state.alpha.sum() - 1.0;
        state.lambda_c.array() += rho * residual;
        if (options.residual_trace) options.residual_trace->push_back(std::abs(residual));
        if (!std::isfinite(objective(theta, state.alpha))) {
            throw NonFiniteObjective("objective became non-finite during the solve");
        }
        schedule.advance();
        if (std::abs(residual) <= tol) {
            state.converged = true;
            break;
        }
    }
    return state;
}

}  // namespace reglab
