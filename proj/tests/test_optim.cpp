#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "reglab/loss.hpp"
#include "reglab/optim.hpp"
#include "test_util.hpp"

using namespace reglab;

TEST_CASE("sgd_step: stationary point, arithmetic, quadratic contraction") {
    Schedule schedule{0.5, Decay::Constant};
    ParameterVector p{Eigen::Vector2d(1.0, 1.0), Manifold::Euclidean};

    const auto unchanged = sgd_step(p, Eigen::Vector2d::Zero(), schedule);
    CHECK(unchanged.theta == p.theta);

    const auto stepped = sgd_step(p, Eigen::Vector2d(1.0, 0.0), schedule);
    CHECK(stepped.theta(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(stepped.theta(1) == doctest::Approx(1.0).epsilon(1e-15));

    // f = 0.5 ||theta||^2: each step multiplies theta by (1 - eta).
    std::mt19937_64 rng(2);
    Schedule s{0.1, Decay::Constant};
    ParameterVector q{testutil::random_matrix(rng, 5, 1, -1.0, 1.0).col(0), Manifold::Euclidean};
    double norm = q.theta.norm();
    for (int k = 0; k < 100; ++k) {
        q = sgd_step(q, q.theta, s);
        CHECK(q.theta.norm() == doctest::Approx(0.9 * norm).epsilon(1e-12));
        norm = q.theta.norm();
    }
}

TEST_CASE("sgd_step rejects sphere parameters") {
    Schedule schedule{0.1, Decay::Constant};
    ParameterVector p{Eigen::Vector2d(1.0, 0.0), Manifold::UnitSphere};
    CHECK_THROWS_AS(sgd_step(p, Eigen::Vector2d::Ones(), schedule), ManifoldMismatch);
    CHECK_THROWS_AS(rsgd_step({Eigen::Vector2d::Ones(), Manifold::Euclidean},
                              Eigen::Vector2d::Ones(), schedule),
                    ManifoldMismatch);
}

TEST_CASE("rsgd_step: radial gradients are invisible") {
    Schedule schedule{0.3, Decay::Constant};
    ParameterVector p{Eigen::Vector3d(0.0, 0.6, 0.8), Manifold::UnitSphere};
    const auto next = rsgd_step(p, 2.5 * p.theta, schedule);
    CHECK((next.theta - p.theta).norm() <= 1e-14);
}

TEST_CASE("rsgd_step hand example") {
    Schedule schedule{1.0, Decay::Constant};
    ParameterVector p{Eigen::Vector2d(1.0, 0.0), Manifold::UnitSphere};
    const auto next = rsgd_step(p, Eigen::Vector2d(0.0, 1.0), schedule);
    CHECK(next.theta(0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(next.theta(1) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("sphere invariant and tangency over 10^4 random steps") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> noise(0.0, 1.0);
    Eigen::VectorXd theta(4);
    for (int i = 0; i < 4; ++i) theta(i) = noise(rng);
    theta.normalize();
    ParameterVector p{theta, Manifold::UnitSphere};
    Schedule schedule{0.05, Decay::Constant};
    for (int step = 0; step < 10000; ++step) {
        Eigen::VectorXd grad(4);
        for (int i = 0; i < 4; ++i) grad(i) = noise(rng);
        const Eigen::VectorXd riem = grad - p.theta.dot(grad) * p.theta;
        CHECK(std::abs(riem.dot(p.theta)) <= 1e-12);
        p = rsgd_step(p, grad, schedule);
        CHECK(std::abs(p.theta.norm() - 1.0) <= 1e-12);
    }
}

TEST_CASE("rsgd maximizes a linear functional on the sphere") {
    std::mt19937_64 rng(11);
    Eigen::VectorXd v(5);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int i = 0; i < 5; ++i) v(i) = noise(rng);
    Eigen::VectorXd start(5);
    for (int i = 0; i < 5; ++i) start(i) = noise(rng);
    start.normalize();

    ParameterVector p{start, Manifold::UnitSphere};
    Schedule schedule{0.2, Decay::Constant};
    for (int step = 0; step < 1000; ++step) {
        p = rsgd_step(p, -v, schedule);  // descend on -<theta, v>
    }
    CHECK((p.theta - v.normalized()).norm() <= 1e-6);
}

TEST_CASE("prox_soft_threshold: identity, hand value, full shrinkage") {
    const Eigen::Vector2d theta(0.3, -2.0);
    CHECK((prox_soft_threshold(theta, 1.0, 0.0) - theta).norm() == 0.0);

    const Eigen::VectorXd out = prox_soft_threshold(theta, 1.0, 0.5);
    CHECK(out(0) == 0.0);
    CHECK(out(1) == doctest::Approx(-1.5).epsilon(1e-15));

    CHECK(prox_soft_threshold(theta, 1.0, 5.0).norm() == 0.0);
}

TEST_CASE("soft threshold agrees with 1-D grid search on the prox objective") {
    // argmin_t 0.5 (t - x)^2 / step + reg |t|, scanned to 1e-4.
    for (double x : {0.3, -2.0, 0.04, 1.2}) {
        const double step = 1.0, reg = 0.5;
        double best_t = 0.0, best_val = std::numeric_limits<double>::infinity();
        for (double t = -3.0; t <= 3.0; t += 1e-4) {
            const double val = 0.5 * (t - x) * (t - x) / step + reg * std::abs(t);
            if (val < best_val) {
                best_val = val;
                best_t = t;
            }
        }
        Eigen::VectorXd theta(1);
        theta << x;
        CHECK(std::abs(prox_soft_threshold(theta, step, reg)(0) - best_t) <= 2e-4);
    }
}

TEST_CASE("prox optimality against one million random candidates") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    Eigen::VectorXd theta(3);
    theta << dist(rng), dist(rng), dist(rng);
    const double step = 0.7, reg = 0.4;
    const Eigen::VectorXd prox = prox_soft_threshold(theta, step, reg);
    auto objective = [&](const Eigen::VectorXd& t) {
        return 0.5 * (t - theta).squaredNorm() / step + reg * t.lpNorm<1>();
    };
    const double prox_val = objective(prox);
    Eigen::VectorXd candidate(3);
    for (int k = 0; k < 1000000; ++k) {
        candidate << dist(rng), dist(rng), dist(rng);
        CHECK_GE(objective(candidate), prox_val - 1e-12);
    }
}

TEST_CASE("prox_gradient_step with zero penalty equals sgd_step") {
    std::mt19937_64 rng(17);
    const Eigen::VectorXd theta = testutil::random_matrix(rng, 4, 1, -1.0, 1.0).col(0);
    const Eigen::VectorXd grad = testutil::random_matrix(rng, 4, 1, -1.0, 1.0).col(0);
    Schedule s1{0.2, Decay::Constant}, s2{0.2, Decay::Constant};
    const ParameterVector p{theta, Manifold::Euclidean};
    CHECK((prox_gradient_step(p, grad, s1, 0.0).theta - sgd_step(p, grad, s2).theta).norm() == 0.0);
}

TEST_CASE("pure shrinkage is monotone in the L1 norm") {
    ParameterVector p{Eigen::Vector3d(1.0, -2.0, 0.5), Manifold::Euclidean};
    Schedule schedule{0.1, Decay::Constant};
    double prev = p.theta.lpNorm<1>();
    for (int k = 0; k < 30; ++k) {
        p = prox_gradient_step(p, Eigen::Vector3d::Zero(), schedule, 2.0);
        const double now = p.theta.lpNorm<1>();
        CHECK(now <= prev + 1e-15);
        prev = now;
    }
    CHECK(prev == 0.0);
}

namespace {

// Independent lasso oracle: cyclic coordinate descent on
// 0.5 ||A x - b||^2 + reg ||x||_1.
Eigen::VectorXd lasso_coordinate_descent(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                         double reg, int sweeps) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(A.cols());
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            const Eigen::VectorXd residual = b - A * x + A.col(j) * x(j);
            const double rho = A.col(j).dot(residual);
            const double denom = A.col(j).squaredNorm();
            const double mag = std::abs(rho) - reg;
            x(j) = mag > 0.0 ? (rho > 0 ? mag : -mag) / denom : 0.0;
        }
    }
    return x;
}

}  // namespace

TEST_CASE("proximal gradient solves the D=5 lasso toy to the oracle") {
    std::mt19937_64 rng(19);
    const Eigen::MatrixXd A = testutil::random_matrix(rng, 20, 5, -1.0, 1.0);
    const Eigen::VectorXd x_true = (Eigen::VectorXd(5) << 1.5, 0.0, -2.0, 0.0, 0.7).finished();
    const Eigen::VectorXd b = A * x_true + 0.01 * testutil::random_matrix(rng, 20, 1, -1.0, 1.0);
    const double reg = 0.5;

    const Eigen::VectorXd oracle = lasso_coordinate_descent(A, b, reg, 2000);

    const double lipschitz = (A.transpose() * A).eigenvalues().real().maxCoeff();
    Schedule schedule{1.0 / lipschitz, Decay::Constant};
    ParameterVector p{Eigen::VectorXd::Zero(5), Manifold::Euclidean};
    for (int k = 0; k < 20000; ++k) {
        const Eigen::VectorXd grad = A.transpose() * (A * p.theta - b);
        p = prox_gradient_step(p, grad, schedule, reg);
    }
    CHECK((p.theta - oracle).cwiseAbs().maxCoeff() <= 1e-5);
}

TEST_CASE("primal-dual with C=1 pins alpha to one") {
    DualState init;
    init.alpha = Eigen::VectorXd::Constant(1, 0.2);
    init.lambda_c = Eigen::VectorXd::Zero(1);
    Schedule schedule{0.2, Decay::Constant};
    const DualState out = primal_dual_solve(
        [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return 0.0; }, init, schedule, 200,
        1e-10);
    CHECK(out.converged);
    CHECK(std::abs(out.alpha(0) - 1.0) <= 1e-9);
}

TEST_CASE("constant objective drives alpha to the uniform weights") {
    DualState init;
    init.alpha = Eigen::VectorXd::Zero(4);
    init.lambda_c = Eigen::VectorXd::Zero(4);
    Schedule schedule{0.1, Decay::Constant};
    const DualState out = primal_dual_solve(
        [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return 1.0; }, init, schedule, 300,
        1e-8);
    CHECK(out.converged);
    for (Eigen::Index i = 0; i < 4; ++i) {
        CHECK(out.alpha(i) == doctest::Approx(0.25).epsilon(1e-6));
    }
}

TEST_CASE("toy GFL objective: feasibility and grid-search agreement") {
    std::mt19937_64 rng(23);
    const auto batch = testutil::random_batch(rng, 20, 3);
    LossConfig config;
    config.gamma = 2.0;
    auto objective = [&](const Eigen::VectorXd&, const Eigen::VectorXd& alpha) {
        ClassWeights w;
        w.alpha = alpha;
        return gfl(batch, w, config).value;
    };

    DualState init;
    init.alpha = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
    init.lambda_c = Eigen::VectorXd::Zero(3);
    Schedule schedule{0.05, Decay::Constant};
    PrimalDualOptions options;
    options.inner_steps = 100;
    const DualState out = primal_dual_solve(objective, init, schedule, 400, 1e-8, options);

    CHECK(std::abs(out.alpha.sum() - 1.0) <= 1e-6);
    CHECK((out.alpha.array() >= 0.0).all());

    const double uniform_value = objective({}, Eigen::VectorXd::Constant(3, 1.0 / 3.0));
    // Evaluate on the simplex exactly: the solver leaves a <= 1e-6
    // residual in sum(alpha), which would otherwise leak into the
    // comparison against the grid points.
    const double solved_value = objective({}, out.alpha / out.alpha.sum());
    CHECK(solved_value <= uniform_value + 1e-9);

    // Grid search over the simplex at resolution 0.01.
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd alpha(3);
    for (int a = 0; a <= 100; ++a) {
        for (int b = 0; b + a <= 100; ++b) {
            alpha << a / 100.0, b / 100.0, (100 - a - b) / 100.0;
            best = std::min(best, objective({}, alpha));
        }
    }
    // One grid cell moves 0.01 mass between two classes; bound the
    // objective change by the extreme per-class values.
    Eigen::VectorXd k(3);
    for (int c = 0; c < 3; ++c) {
        Eigen::VectorXd unit = Eigen::VectorXd::Zero(3);
        unit(c) = 1.0;
        k(c) = objective({}, unit);
    }
    const double cell = 0.01 * (k.maxCoeff() - k.minCoeff());
    CHECK(solved_value <= best + cell + 1e-9);
    CHECK(solved_value >= best - 1e-9);
}

TEST_CASE("constraint residual envelope decays to the noise floor") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> k_dist(0.1, 2.0);
    std::uniform_real_distribution<double> a_dist(0.0, 1.0);
    int monotone = 0;
    for (int seed = 0; seed < 20; ++seed) {
        Eigen::VectorXd k(3);
        k << k_dist(rng), k_dist(rng), k_dist(rng);
        DualState init;
        init.alpha = Eigen::VectorXd(3);
        init.alpha << a_dist(rng), a_dist(rng), a_dist(rng);
        init.lambda_c = Eigen::VectorXd::Zero(3);

        std::vector<double> trace;
        PrimalDualOptions options;
        options.residual_trace = &trace;
        Schedule schedule{0.05, Decay::Constant};
        primal_dual_solve(
            [&](const Eigen::VectorXd&, const Eigen::VectorXd& alpha) { return k.dot(alpha); },
            init, schedule, 60, 0.0, options);
        // The residual oscillates inside a geometrically decaying
        // envelope; require the tail-half envelope to sit three orders
        // of magnitude below the head and to end at the noise floor.
        double head_max = 0.0, tail_max = 0.0;
        for (size_t i = 0; i < trace.size(); ++i) {
            (i < trace.size() / 2 ? head_max : tail_max) = std::max(
                i < trace.size() / 2 ? head_max : tail_max, trace[i]);
        }
        if (!trace.empty() && trace.back() <= 1e-9 && tail_max <= 1e-3 * head_max + 1e-12) {
            ++monotone;
        }
    }
    CHECK(monotone >= 18);
}

TEST_CASE("non-finite objective is rejected") {
    DualState init;
    init.alpha = Eigen::VectorXd::Zero(2);
    init.lambda_c = Eigen::VectorXd::Zero(2);
    Schedule schedule{0.1, Decay::Constant};
    CHECK_THROWS_AS(primal_dual_solve([](const Eigen::VectorXd&, const Eigen::VectorXd&) {
                        return std::numeric_limits<double>::quiet_NaN();
                    },
                                      init, schedule, 10, 1e-6),
                    NonFiniteObjective);
}

TEST_CASE("descent on a smooth convex quadratic with small constant step") {
    std::mt19937_64 rng(31);
    const Eigen::MatrixXd A = testutil::random_matrix(rng, 4, 4, -1.0, 1.0);
    const Eigen::MatrixXd H = A.transpose() * A + Eigen::MatrixXd::Identity(4, 4);
    ParameterVector p{testutil::random_matrix(rng, 4, 1, -1.0, 1.0).col(0), Manifold::Euclidean};
    Schedule schedule{0.05, Decay::Constant};
    auto f = [&](const Eigen::VectorXd& x) { return 0.5 * x.dot(H * x); };
    double prev = f(p.theta);
    for (int k = 0; k < 200; ++k) {
        p = sgd_step(p, H * p.theta, schedule);
        const double now = f(p.theta);
        CHECK(now <= prev + 1e-12);
        prev = now;
    }
}

TEST_CASE("inverse-t decay follows eta0 / (1 + t)") {
    Schedule s{1.0, Decay::InverseT};
    CHECK(s.rate() == 1.0);
    s.advance();
    CHECK(s.rate() == doctest::Approx(0.5).epsilon(1e-15));
    s.advance();
    CHECK(s.rate() == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}
