#include "adrf/stats/distributions.hpp"

#include "adrf/stats/special.hpp"
#include "adrf/tensor.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>

namespace adrf::stats {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// --- Normal inverse Gaussian on the standardized axis -----------------------

double nig_log_pdf_std(double a, double b, double y) {
  const double s = std::sqrt(1.0 + y * y);
  const double gamma = std::sqrt(a * a - b * b);
  return std::log(a) - std::log(std::numbers::pi) - std::log(s) + std::log(bessel_k1e(a * s)) -
         a * s + gamma + b * y;
}

struct NigFrame {
  double a, b;
  double left, right;  // each tail beyond holds less than ~1e-15 of the mass
  double mode;
  double unit;         // width of the first quadrature panels
};

double nig_density(const NigFrame& f, double y) { return std::exp(nig_log_pdf_std(f.a, f.b, y)); }

// Tails decay like exp(-(a±b)|y|), so the mass beyond a point is about
// pdf / (a±b).
NigFrame nig_frame(double a, double b) {
  const double gamma = std::sqrt(a * a - b * b);
  const double mean = b / gamma;
  const double sd = a / std::pow(gamma, 1.5);
  const double floor = std::log(1e-15);
  NigFrame f{a, b, 0.0, 0.0, mean, 0.1 * std::min(1.0, sd)};
  double step = 5.0 * sd;
  while (nig_log_pdf_std(a, b, mean - step) - std::log(a + b) > floor) step *= 2.0;
  f.left = mean - step;
  step = 5.0 * sd;
  while (nig_log_pdf_std(a, b, mean + step) - std::log(a - b) > floor) step *= 2.0;
  f.right = mean + step;
  // A unimodal density has its mode within sqrt(3) sd of the mean.
  double lo = mean - 1.75 * sd, hi = mean + 1.75 * sd;
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  while (hi - lo > 1e-9 * std::max(1.0, sd)) {
    const double m1 = hi - ratio * (hi - lo), m2 = lo + ratio * (hi - lo);
    if (nig_log_pdf_std(a, b, m1) < nig_log_pdf_std(a, b, m2)) lo = m1; else hi = m2;
  }
  f.mode = 0.5 * (lo + hi);
  return f;
}

// Mass on [y0, y1], split at the mode so each piece is monotone.
double nig_mass(const NigFrame& f, double y0, double y1) {
  auto density = [&f](double t) { return nig_density(f, t); };
  if (y0 < f.mode && f.mode < y1) {
    return integrate_graded(density, y0, f.mode, f.unit) + integrate_graded(density, f.mode, y1, f.unit);
  }
  return integrate_graded(density, y0, y1, f.unit);
}

double nig_cdf_std(const NigFrame& f, double y) {
  if (y <= f.left) return 0.0;
  if (y >= f.right) return 1.0;
  if (y <= f.mode) return nig_mass(f, f.left, y);
  return 1.0 - nig_mass(f, y, f.right);
}

double nig_quantile_std(double a, double b, double p) {
  const NigFrame f = nig_frame(a, b);
  const double cdf_mode = nig_cdf_std(f, f.mode);
  auto mass = [&f](double y0, double y1) { return nig_mass(f, y0, y1); };
  if (cdf_mode <= p) return numeric_quantile(mass, p, f.mode, f.right, cdf_mode);
  return numeric_quantile(mass, p, f.left, f.mode, 0.0);
}

double gamma_quantile_std(double k, double p) {
  double lo = 0.0, hi = std::max(1.0, k);
  while (gamma_p(k, hi) < p) hi *= 2.0;
  while (hi - lo > 1e-12 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (gamma_p(k, mid) < p) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ContractViolation(std::string(what) + " must be finite and > 0, got " + std::to_string(v));
  }
}

}  // namespace

Family family_of(const Distribution& d) {
  return std::visit(Overloaded{
                        [](const BirnbaumSaunders&) { return Family::birnbaum_saunders; },
                        [](const JohnsonSU&) { return Family::johnson_su; },
                        [](const NormalInverseGaussian&) { return Family::normal_inverse_gaussian; },
                        [](const Normal&) { return Family::normal; },
                        [](const GammaDist&) { return Family::gamma; },
                    },
                    d);
}

std::string_view family_name(Family f) {
  switch (f) {
    case Family::birnbaum_saunders: return "birnbaum_saunders";
    case Family::johnson_su: return "johnson_su";
    case Family::normal_inverse_gaussian: return "normal_inverse_gaussian";
    case Family::normal: return "normal";
    case Family::gamma: return "gamma";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  for (Family f : kAllFamilies) {
    if (family_name(f) == name) return f;
  }
  if (name == "bs") return Family::birnbaum_saunders;
  if (name == "jsu") return Family::johnson_su;
  if (name == "nig") return Family::normal_inverse_gaussian;
  throw ContractViolation("unknown distribution family '" + std::string(name) + "'");
}

std::size_t parameter_count(Family f) {
  switch (f) {
    case Family::normal: return 2;
    case Family::gamma:
    case Family::birnbaum_saunders: return 3;
    case Family::johnson_su:
    case Family::normal_inverse_gaussian: return 4;
  }
  return 0;
}

std::vector<double> parameters(const Distribution& d) {
  return std::visit(Overloaded{
                        [](const BirnbaumSaunders& v) { return std::vector<double>{v.c, v.loc, v.scale}; },
                        [](const JohnsonSU& v) { return std::vector<double>{v.a, v.b, v.loc, v.scale}; },
                        [](const NormalInverseGaussian& v) {
                          return std::vector<double>{v.a, v.b, v.loc, v.scale};
                        },
                        [](const Normal& v) { return std::vector<double>{v.mu, v.sigma}; },
                        [](const GammaDist& v) { return std::vector<double>{v.k, v.loc, v.scale}; },
                    },
                    d);
}

Distribution make_distribution(Family f, const std::vector<double>& p) {
  if (p.size() != parameter_count(f)) {
    throw ContractViolation(std::string(family_name(f)) + " needs " +
                            std::to_string(parameter_count(f)) + " parameters, got " +
                            std::to_string(p.size()));
  }
  Distribution d;
  switch (f) {
    case Family::birnbaum_saunders: d = BirnbaumSaunders{p[0], p[1], p[2]}; break;
    case Family::johnson_su: d = JohnsonSU{p[0], p[1], p[2], p[3]}; break;
    case Family::normal_inverse_gaussian: d = NormalInverseGaussian{p[0], p[1], p[2], p[3]}; break;
    case Family::normal: d = Normal{p[0], p[1]}; break;
    case Family::gamma: d = GammaDist{p[0], p[1], p[2]}; break;
  }
  validate(d);
  return d;
}

std::string describe(const Distribution& d) {
  static constexpr const char* names[5][4] = {{"mu", "sigma"},
                                              {"k", "loc", "scale"},
                                              {"c", "loc", "scale"},
                                              {"a", "b", "loc", "scale"},
                                              {"a", "b", "loc", "scale"}};
  const Family f = family_of(d);
  const auto p = parameters(d);
  std::ostringstream os;
  os.precision(6);
  os << family_name(f) << '(';
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) os << ", ";
    os << names[static_cast<int>(f)][i] << '=' << p[i];
  }
  os << ')';
  return os.str();
}

void validate(const Distribution& d) {
  std::visit(Overloaded{
                 [](const BirnbaumSaunders& v) {
                   require_positive(v.c, "birnbaum_saunders c");
                   require_positive(v.scale, "birnbaum_saunders scale");
                 },
                 [](const JohnsonSU& v) {
                   require_positive(v.b, "johnson_su b");
                   require_positive(v.scale, "johnson_su scale");
                   if (!std::isfinite(v.a)) throw ContractViolation("johnson_su a must be finite");
                 },
                 [](const NormalInverseGaussian& v) {
                   require_positive(v.a, "normal_inverse_gaussian a");
                   require_positive(v.scale, "normal_inverse_gaussian scale");
                   if (!(std::abs(v.b) < v.a)) {
                     throw ContractViolation("normal_inverse_gaussian requires |b| < a");
                   }
                 },
                 [](const Normal& v) { require_positive(v.sigma, "normal sigma"); },
                 [](const GammaDist& v) {
                   require_positive(v.k, "gamma k");
                   require_positive(v.scale, "gamma scale");
                 },
             },
             d);
}

double log_pdf(const Distribution& d, double x) {
  return std::visit(
      Overloaded{
          [x](const BirnbaumSaunders& v) {
            const double y = (x - v.loc) / v.scale;
            if (y <= 0.0) return -kInf;
            return std::log(y + 1.0) - std::log(2.0 * v.c) - kLogSqrt2Pi - 1.5 * std::log(y) -
                   (y - 1.0) * (y - 1.0) / (2.0 * v.c * v.c * y) - std::log(v.scale);
          },
          [x](const JohnsonSU& v) {
            const double y = (x - v.loc) / v.scale;
            const double z = v.a + v.b * std::asinh(y);
            return std::log(v.b) - 0.5 * std::log1p(y * y) - kLogSqrt2Pi - 0.5 * z * z -
                   std::log(v.scale);
          },
          [x](const NormalInverseGaussian& v) {
            return nig_log_pdf_std(v.a, v.b, (x - v.loc) / v.scale) - std::log(v.scale);
          },
          [x](const Normal& v) {
            const double z = (x - v.mu) / v.sigma;
            return -kLogSqrt2Pi - 0.5 * z * z - std::log(v.sigma);
          },
          [x](const GammaDist& v) {
            const double y = (x - v.loc) / v.scale;
            if (y <= 0.0) return -kInf;
            return (v.k - 1.0) * std::log(y) - y - std::lgamma(v.k) - std::log(v.scale);
          },
      },
      d);
}

double pdf(const Distribution& d, double x) { return std::exp(log_pdf(d, x)); }

double cdf(const Distribution& d, double x) {
  return std::visit(Overloaded{
                        [x](const BirnbaumSaunders& v) {
                          const double y = (x - v.loc) / v.scale;
                          if (y <= 0.0) return 0.0;
                          const double r = std::sqrt(y);
                          return normal_cdf((r - 1.0 / r) / v.c);
                        },
                        [x](const JohnsonSU& v) {
                          return normal_cdf(v.a + v.b * std::asinh((x - v.loc) / v.scale));
                        },
                        [x](const NormalInverseGaussian& v) {
                          return nig_cdf_std(nig_frame(v.a, v.b), (x - v.loc) / v.scale);
                        },
                        [x](const Normal& v) { return normal_cdf((x - v.mu) / v.sigma); },
                        [x](const GammaDist& v) {
                          const double y = (x - v.loc) / v.scale;
                          return y <= 0.0 ? 0.0 : gamma_p(v.k, y);
                        },
                    },
                    d);
}

double numeric_quantile(const std::function<double(double, double)>& mass, double p, double lo, double hi,
                        double cdf_lo, double tol) {
  while (hi - lo > tol * std::max(1.0, std::abs(lo) + std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    const double cdf_mid = cdf_lo + mass(lo, mid);
    if (cdf_mid < p) {
      lo = mid;
      cdf_lo = cdf_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double quantile(const Distribution& d, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ContractViolation("quantile: p must be in (0,1), got " + std::to_string(p));
  }
  return std::visit(Overloaded{
                        [p](const BirnbaumSaunders& v) {
                          const double z = normal_quantile(p);
                          const double cz = v.c * z;
                          const double root = cz + std::sqrt(cz * cz + 4.0);
                          return v.loc + v.scale * 0.25 * root * root;
                        },
                        [p](const JohnsonSU& v) {
                          return v.loc + v.scale * std::sinh((normal_quantile(p) - v.a) / v.b);
                        },
                        [p](const NormalInverseGaussian& v) {
                          return v.loc + v.scale * nig_quantile_std(v.a, v.b, p);
                        },
                        [p](const Normal& v) { return v.mu + v.sigma * normal_quantile(p); },
                        [p](const GammaDist& v) { return v.loc + v.scale * gamma_quantile_std(v.k, p); },
                    },
                    d);
}

double support_min(const Distribution& d) {
  return std::visit(Overloaded{
                        [](const BirnbaumSaunders& v) { return v.loc; },
                        [](const GammaDist& v) { return v.loc; },
                        [](const auto&) { return -kInf; },
                    },
                    d);
}

std::pair<double, double> effective_range(const Distribution& d, double tail) {
  if (const auto* nig = std::get_if<NormalInverseGaussian>(&d)) {
    const NigFrame f = nig_frame(nig->a, nig->b);
    return {nig->loc + nig->scale * f.left, nig->loc + nig->scale * f.right};
  }
  return {quantile(d, tail), quantile(d, 1.0 - tail)};
}

std::vector<double> cdf_sorted(const Distribution& d, std::span<const double> sorted) {
  std::vector<double> out(sorted.size());
  const auto* nig = std::get_if<NormalInverseGaussian>(&d);
  if (!nig) {
    for (std::size_t i = 0; i < sorted.size(); ++i) out[i] = cdf(d, sorted[i]);
    return out;
  }
  // Accumulate the quadrature over the gaps between consecutive points.
  const NigFrame f = nig_frame(nig->a, nig->b);
  double prev = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double y = (sorted[i] - nig->loc) / nig->scale;
    if (i > 0 && y < prev) throw ContractViolation("cdf_sorted: input is not sorted");
    acc = i == 0 ? nig_cdf_std(f, y) : acc + nig_mass(f, std::clamp(prev, f.left, f.right), std::clamp(y, f.left, f.right));
    out[i] = std::clamp(acc, 0.0, 1.0);
    prev = y;
  }
  return out;
}

std::vector<double> sample(const Distribution& d, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> out(n);
  std::visit(Overloaded{
                 [&](const BirnbaumSaunders& v) {
                   for (auto& x : out) {
                     const double h = 0.5 * v.c * gauss(rng);
                     const double r = h + std::sqrt(h * h + 1.0);
                     x = v.loc + v.scale * r * r;
                   }
                 },
                 [&](const JohnsonSU& v) {
                   for (auto& x : out) x = v.loc + v.scale * std::sinh((gauss(rng) - v.a) / v.b);
                 },
                 [&](const NormalInverseGaussian& v) {
                   // Normal variance-mean mixture over an inverse Gaussian
                   // mixing variable with mean 1/γ and shape 1.
                   const double mu = 1.0 / std::sqrt(v.a * v.a - v.b * v.b);
                   for (auto& x : out) {
                     const double nu = gauss(rng);
                     const double w = nu * nu;
                     double ig = mu + 0.5 * mu * mu * w - 0.5 * mu * std::sqrt(4.0 * mu * w + mu * mu * w * w);
                     if (unif(rng) > mu / (mu + ig)) ig = mu * mu / ig;
                     x = v.loc + v.scale * (v.b * ig + std::sqrt(ig) * gauss(rng));
                   }
                 },
                 [&](const Normal& v) {
                   for (auto& x : out) x = v.mu + v.sigma * gauss(rng);
                 },
                 [&](const GammaDist& v) {
                   std::gamma_distribution<double> g(v.k, 1.0);
                   for (auto& x : out) x = v.loc + v.scale * g(rng);
                 },
             },
             d);
  return out;
}

}  // namespace adrf::stats
