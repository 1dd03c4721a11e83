#include "reglab/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include "reglab/errors.hpp"

namespace reglab {

namespace {
constexpr double kTailZ = 9.0;  // N(0,1) mass beyond 9 sigma < 1.2e-19
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

QuadratureRule gauss_legendre(int order) {
    if (order < 1) throw Error("quadrature order must be >= 1");
    QuadratureRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    // Newton iteration on Legendre polynomials, symmetric roots.
    const int m = (order + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.weights[i] = w;
        rule.nodes[order - 1 - i] = x;
        rule.weights[order - 1 - i] = w;
    }
    return rule;
}

double clamped_gaussian_expectation(const std::function<double(double)>& f, double mu,
                                    double sigma_sq, double lo, double hi, int order) {
    if (sigma_sq < 0) throw NonPositiveVariance("variance must be >= 0");
    if (sigma_sq == 0.0) return f(std::min(std::max(mu, lo), hi));
    const double sigma = std::sqrt(sigma_sq);
    const double z_lo = (lo - mu) / sigma;
    const double z_hi = (hi - mu) / sigma;

    double result = f(lo) * normal_cdf(z_lo) + f(hi) * (1.0 - normal_cdf(z_hi));

    const double a = std::max(z_lo, -kTailZ);
    const double b = std::min(z_hi, kTailZ);
    if (a >= b) return result;

    const QuadratureRule rule = gauss_legendre(order);
    const int panels = static_cast<int>(std::ceil((b - a) / 2.0));
    const double panel_w = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double pa = a + p * panel_w;
        const double half = 0.5 * panel_w;
        const double mid = pa + half;
        for (int k = 0; k < order; ++k) {
            const double z = mid + half * rule.nodes[k];
            result += half * rule.weights[k] * f(mu + sigma * z) * normal_pdf(z);
        }
    }
    return result;
}

}  // namespace reglab
