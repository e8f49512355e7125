#pragma once

#include <functional>

namespace adrf::stats {

double normal_pdf(double z);
double normal_cdf(double z);
/// Upper tail 1 - Φ(z), accurate far into the right tail.
double normal_sf(double z);
/// Φ⁻¹(p): rational approximation polished by one Newton step. p in (0, 1).
double normal_quantile(double p);

/// Modified Bessel function of the second kind, order one. x > 0.
double bessel_k1(double x);
/// exp(x) K₁(x), finite for large x.
double bessel_k1e(double x);

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);

/// Adaptive Gauss-Kronrod (7/15) quadrature of f over [a, b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-13, double rel_tol = 1e-11);

/// Splits [a, b] into panels that start at width `unit` at both ends and
/// double toward the middle, so mass concentrated near either end of a very
/// long interval is not stepped over. For monotone integrands.
double integrate_graded(const std::function<double(double)>& f, double a, double b, double unit,
                        double abs_tol = 1e-15, double rel_tol = 1e-10);

}  // namespace adrf::stats
