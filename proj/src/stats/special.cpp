#include "adrf/stats/special.hpp"

#include "adrf/tensor.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>

namespace adrf::stats {

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ContractViolation("normal_quantile: p must be in (0,1), got " + std::to_string(p));
  }
  // Acklam's rational approximation, relative error ~1e-9.
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                           -2.759285104469687e+02, 1.383577518672690e+02,
                                           -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                           -1.556989798598866e+02, 6.680131188771972e+01,
                                           -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                           -2.400758277161838e+00, -2.549732539343734e+00,
                                           4.374664141464968e+00, 2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                           2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Newton on whichever tail keeps the residual well conditioned; 1 - p is
  // exact for p >= 0.5.
  const double density = normal_pdf(x);
  if (density > 0.0) {
    if (p < 0.5) {
      x -= (normal_cdf(x) - p) / density;
    } else {
      x += (normal_sf(x) - (1.0 - p)) / density;
    }
  }
  return x;
}

double bessel_k1e(double x) {
  if (!(x > 0.0)) throw ContractViolation("bessel_k1: x must be > 0");
  if (x > 25.0) {
    // Hankel expansion, truncated before the terms start to grow.
    constexpr double mu = 4.0;
    double term = 1.0, total = 1.0;
    for (int k = 1; k < 40; ++k) {
      const double next = term * (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (k * 8.0 * x);
      if (std::abs(next) > std::abs(term)) break;
      term = next;
      total += term;
      if (std::abs(term) < 1e-17 * std::abs(total)) break;
    }
    return std::sqrt(std::numbers::pi / (2.0 * x)) * total;
  }
  return boost::math::cyl_bessel_k(1, x) * std::exp(x);
}

double bessel_k1(double x) { return bessel_k1e(x) * std::exp(-x); }

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw ContractViolation("gamma_p: requires a > 0 and x >= 0");
  return boost::math::gamma_p(a, x);
}

namespace {

constexpr std::array<double, 8> kXgk{0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                     0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                     0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                     0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk{0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                     0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                     0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                     0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg{0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double kronrod;
  double error;
};

Panel gauss_kronrod(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b), half = 0.5 * (b - a);
  const double fc = f(center);
  double k = fc * kWgk[7];
  double g = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double s = f(center - dx) + f(center + dx);
    k += kWgk[j] * s;
    if (j % 2 == 1) g += kWg[j / 2] * s;
  }
  return {k * half, std::abs((k - g) * half)};
}

}  // namespace

// Global adaptive scheme: always bisect the panel with the largest error
// estimate. The panel budget bounds the cost when roundoff keeps the estimate
// from reaching the requested tolerance.
double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                 double rel_tol) {
  if (a == b) return 0.0;
  if (a > b) return -integrate(f, b, a, abs_tol, rel_tol);
  struct Piece {
    double lo, hi, value, error;
    bool operator<(const Piece& o) const { return error < o.error; }
  };
  std::priority_queue<Piece> heap;
  const Panel first = gauss_kronrod(f, a, b);
  heap.push({a, b, first.kronrod, first.error});
  double value = first.kronrod, error = first.error;
  for (int panels = 1; panels < 2000; ++panels) {
    if (error <= std::max(abs_tol, rel_tol * std::abs(value))) break;
    const Piece worst = heap.top();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) break;
    heap.pop();
    const Panel left = gauss_kronrod(f, worst.lo, mid);
    const Panel right = gauss_kronrod(f, mid, worst.hi);
    value += left.kronrod + right.kronrod - worst.value;
    error += left.error + right.error - worst.error;
    heap.push({worst.lo, mid, left.kronrod, left.error});
    heap.push({mid, worst.hi, right.kronrod, right.error});
  }
  // Re-sum to shed the drift of the running updates.
  value = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    heap.pop();
  }
  return value;
}

double integrate_graded(const std::function<double(double)>& f, double a, double b, double unit,
                        double abs_tol, double rel_tol) {
  if (a > b) return -integrate_graded(f, b, a, unit, abs_tol, rel_tol);
  if (!(unit > 0.0)) throw ContractViolation("integrate_graded: unit must be > 0");
  double total = 0.0, lo = a, hi = b, w = unit;
  while (hi - lo > 4.0 * w) {
    total += integrate(f, lo, lo + w, abs_tol, rel_tol) + integrate(f, hi - w, hi, abs_tol, rel_tol);
    lo += w;
    hi -= w;
    w *= 2.0;
  }
  return total + integrate(f, lo, hi, abs_tol, rel_tol);
}

}  // namespace adrf::stats
