#ifndef REGLAB_QUADRATURE_HPP
#define REGLAB_QUADRATURE_HPP

#include <functional>
#include <vector>

namespace reglab {

// Standard normal pdf / cdf.
double normal_pdf(double z);
double normal_cdf(double z);

// Gauss-Legendre nodes and weights on [-1, 1].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
QuadratureRule gauss_legendre(int order);

// E[f(clamp(X, lo, hi))] for X ~ N(mu, sigma_sq).
//
// The clamped regions contribute f(lo) * P(X < lo) and f(hi) * P(X > hi)
// exactly through the normal cdf; the interior integral, where the
// integrand is smooth, is evaluated with panel Gauss-Legendre quadrature
// of the given order (panels of width <= 2 in standardized units). Plain
// Gauss-Hermite applied across the clamp kink loses spectral accuracy
// and cannot reach the tolerances required here.
double clamped_gaussian_expectation(const std::function<double(double)>& f, double mu,
                                    double sigma_sq, double lo, double hi, int order = 20);

}  // namespace reglab

#endif
