#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace adrf::stats {

// Parameterizations follow the common (shape..., loc, scale) convention: the
// standardized variable is y = (x - loc) / scale.

/// Fatigue-life family: cdf Φ((√y - 1/√y) / c), y > 0.
struct BirnbaumSaunders {
  double c = 1.0;
  double loc = 0.0;
  double scale = 1.0;
};

/// cdf Φ(a + b·asinh(y)).
struct JohnsonSU {
  double a = 0.0;
  double b = 1.0;
  double loc = 0.0;
  double scale = 1.0;
};

/// Tail parameter a, asymmetry b with |b| < a; pdf
/// a·K₁(a√(1+y²)) / (π√(1+y²)) · exp(√(a²-b²) + b·y).
struct NormalInverseGaussian {
  double a = 1.0;
  double b = 0.0;
  double loc = 0.0;
  double scale = 1.0;
};

struct Normal {
  double mu = 0.0;
  double sigma = 1.0;
};

/// Shape k, y > 0.
struct GammaDist {
  double k = 1.0;
  double loc = 0.0;
  double scale = 1.0;
};

using Distribution = std::variant<BirnbaumSaunders, JohnsonSU, NormalInverseGaussian, Normal, GammaDist>;

/// Order here is the tie-break order used by model selection.
enum class Family { normal, gamma, birnbaum_saunders, johnson_su, normal_inverse_gaussian };

inline constexpr Family kAllFamilies[] = {Family::normal, Family::gamma, Family::birnbaum_saunders,
                                          Family::johnson_su, Family::normal_inverse_gaussian};

Family family_of(const Distribution& d);
std::string_view family_name(Family f);
Family parse_family(std::string_view name);
std::size_t parameter_count(Family f);

std::vector<double> parameters(const Distribution& d);
Distribution make_distribution(Family f, const std::vector<double>& params);
std::string describe(const Distribution& d);

/// Throws ContractViolation if the parameters break the family constraints.
void validate(const Distribution& d);

double pdf(const Distribution& d, double x);
double log_pdf(const Distribution& d, double x);
double cdf(const Distribution& d, double x);
/// p in (0, 1). Closed form for Normal, Birnbaum-Saunders and Johnson SU;
/// bisection on the cdf otherwise.
double quantile(const Distribution& d, double p);

/// Bisection for the p-quantile inside [lo, hi] given the cdf at lo.
/// `mass(a, b)` is the probability of (a, b]; it is only asked for the
/// interval between the current lower bracket and the midpoint, so an
/// integrating cdf pays for each piece once. Stops at relative width `tol`.
double numeric_quantile(const std::function<double(double, double)>& mass, double p, double lo, double hi,
                        double cdf_lo, double tol = 1e-11);

/// Lower support bound (-inf for unbounded families).
double support_min(const Distribution& d);
/// Interval outside which the mass is below `tail` on each side.
std::pair<double, double> effective_range(const Distribution& d, double tail = 1e-12);

/// cdf at each point of an ascending sample; quadrature-based families only
/// integrate the gaps between neighbours.
std::vector<double> cdf_sorted(const Distribution& d, std::span<const double> sorted);

std::vector<double> sample(const Distribution& d, std::size_t n, std::mt19937_64& rng);

}  // namespace adrf::stats
