#include "adrf/stats/fitting.hpp"

#include "adrf/stats/special.hpp"
#include "adrf/tensor.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <string>

namespace adrf::stats {

namespace {

constexpr double kPenalty = 1e300;
const double kMaxLogA = std::log(1000.0);
constexpr double kMaxAsymmetry = 5.0;
// Transformed coordinates live in [-kBox, kBox]; beyond it the families
// have degenerated into their limiting forms.
constexpr double kBox = 15.0;

struct Moments {
  double mean, sd, skew, median, min, max;
};

Moments moments(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  const double median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  const double sd = std::sqrt(m2);
  return {mean, sd, sd > 0.0 ? m3 / (m2 * sd) : 0.0, median, sorted.front(), sorted.back()};
}

// Samples are standardized to z = (x - center) / spread before fitting; every
// family here is closed under affine maps, so the fit is mapped back exactly.
struct Problem {
  Family family;
  std::vector<double> z;
  double zmin;
  double margin;  // gap kept between loc and the sample minimum
};

Distribution decode(const Problem& p, const double* t) {
  switch (p.family) {
    case Family::normal: return Normal{t[0], std::exp(t[1])};
    case Family::gamma: return GammaDist{std::exp(t[0]), p.zmin - p.margin - std::exp(t[1]), std::exp(t[2])};
    case Family::birnbaum_saunders:
      return BirnbaumSaunders{std::exp(t[0]), p.zmin - p.margin - std::exp(t[1]), std::exp(t[2])};
    case Family::johnson_su: return JohnsonSU{t[0], std::exp(t[1]), t[2], std::exp(t[3])};
    case Family::normal_inverse_gaussian: {
      const double a = std::exp(t[0]);
      return NormalInverseGaussian{a, a * std::tanh(t[1]), t[2], std::exp(t[3])};
    }
  }
  return Normal{};
}

std::vector<double> encode(const Problem& p, const Distribution& d) {
  const auto v = parameters(d);
  auto gap = [&](double loc) { return std::log(std::max(p.zmin - p.margin - loc, 1e-12)); };
  switch (p.family) {
    case Family::normal: return {v[0], std::log(v[1])};
    case Family::gamma:
    case Family::birnbaum_saunders: return {std::log(v[0]), gap(v[1]), std::log(v[2])};
    case Family::johnson_su: return {v[0], std::log(v[1]), v[2], std::log(v[3])};
    case Family::normal_inverse_gaussian:
      return {std::log(v[0]), std::atanh(std::clamp(v[1] / v[0], -0.999999, 0.999999)), v[2], std::log(v[3])};
  }
  return {};
}

double negative_log_likelihood(const Problem& p, const double* t) {
  for (std::size_t i = 0; i < parameter_count(p.family); ++i) {
    if (!std::isfinite(t[i]) || std::abs(t[i]) > kBox) return kPenalty;
  }
  // NIG tends to an inverse Gaussian or a normal as a grows; past this box
  // the density is numerically ill-conditioned and no better a description.
  if (p.family == Family::normal_inverse_gaussian && (t[0] > kMaxLogA || std::abs(t[1]) > kMaxAsymmetry)) {
    return kPenalty;
  }
  const Distribution d = decode(p, t);
  if (const auto* nig = std::get_if<NormalInverseGaussian>(&d)) {
    if (!(std::abs(nig->b) < nig->a)) return kPenalty;
  }
  double total = 0.0;
  for (double v : p.z) total -= log_pdf(d, v);
  return std::isfinite(total) ? total : kPenalty;
}

double gsl_objective(const gsl_vector* v, void* params) {
  return negative_log_likelihood(*static_cast<const Problem*>(params), v->data);
}

struct Minimum {
  std::vector<double> t;
  double value;
  bool converged;
};

Minimum simplex(const Problem& p, std::vector<double> start, double step, double tol, int max_iter) {
  const std::size_t dim = start.size();
  gsl_multimin_function fn{&gsl_objective, dim, const_cast<Problem*>(&p)};
  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x(gsl_vector_alloc(dim), &gsl_vector_free);
  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> steps(gsl_vector_alloc(dim), &gsl_vector_free);
  std::copy(start.begin(), start.end(), x->data);
  gsl_vector_set_all(steps.get(), step);
  std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim), &gsl_multimin_fminimizer_free);
  gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), steps.get());

  bool converged = false;
  for (int iter = 0; iter < max_iter && !converged; ++iter) {
    if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
    converged = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), tol) == GSL_SUCCESS;
  }
  Minimum m{std::vector<double>(s->x->data, s->x->data + dim), s->fval, converged};
  return m;
}

std::vector<Distribution> starting_points(const Problem& p, const Moments& m) {
  std::vector<Distribution> starts;
  switch (p.family) {
    case Family::normal: starts.push_back(Normal{m.mean, m.sd}); break;
    case Family::gamma:
      for (double gap : {0.05, 0.5, 2.0}) {
        const double loc = p.zmin - p.margin - gap;
        const double mean = m.mean - loc;
        const double k = std::clamp(mean * mean / (m.sd * m.sd), 0.05, 1e4);
        starts.push_back(GammaDist{k, loc, mean / k});
      }
      break;
    case Family::birnbaum_saunders:
      for (double gap : {0.01, 0.1, 0.5, 2.0}) {
        const double loc = p.zmin - p.margin - gap;
        double mean = 0.0, inv = 0.0;
        for (double v : p.z) {
          mean += v - loc;
          inv += 1.0 / (v - loc);
        }
        mean /= static_cast<double>(p.z.size());
        const double harmonic = static_cast<double>(p.z.size()) / inv;
        const double c = std::sqrt(std::max(2.0 * (std::sqrt(mean / harmonic) - 1.0), 1e-4));
        starts.push_back(BirnbaumSaunders{c, loc, std::sqrt(mean * harmonic)});
      }
      break;
    case Family::johnson_su: {
      const double lean = m.skew > 0 ? -1.0 : 1.0;
      starts.push_back(JohnsonSU{0.0, 1.0, m.median, m.sd});
      starts.push_back(JohnsonSU{0.5 * lean, 1.0, m.median, m.sd});
      starts.push_back(JohnsonSU{1.5 * lean, 3.0, m.median, m.sd});
      break;
    }
    case Family::normal_inverse_gaussian: {
      const double lean = m.skew > 0 ? 1.0 : -1.0;
      for (double a : {0.7, 4.0}) starts.push_back(NormalInverseGaussian{a, 0.5 * lean * a, m.median, m.sd});
      starts.push_back(NormalInverseGaussian{2.0, 0.0, m.median, m.sd});
      break;
    }
  }
  return starts;
}

Distribution affine_back(const Distribution& d, double center, double spread) {
  return std::visit(
      [&](auto v) -> Distribution {
        using T = decltype(v);
        if constexpr (std::is_same_v<T, Normal>) {
          return Normal{center + spread * v.mu, spread * v.sigma};
        } else {
          v.loc = center + spread * v.loc;
          v.scale *= spread;
          return v;
        }
      },
      d);
}

// Split at interior quantiles so sharply peaked densities are resolved, with
// graded panels toward the far ends of the effective range.
double total_mass(const Distribution& d) {
  const auto [lo, hi] = effective_range(d, 1e-12);
  std::vector<double> cuts{lo};
  for (double q : {0.001, 0.1, 0.5, 0.9, 0.999}) {
    const double c = quantile(d, q);
    if (c > cuts.back() && c < hi) cuts.push_back(c);
  }
  cuts.push_back(hi);
  const double unit = 0.05 * (quantile(d, 0.75) - quantile(d, 0.25));
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    mass += integrate_graded([&d](double x) { return pdf(d, x); }, cuts[i], cuts[i + 1], unit, 1e-13, 1e-9);
  }
  return mass;
}

}  // namespace

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf_fn) {
  if (samples.empty()) throw ContractViolation("ks_statistic: empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf_fn(sorted[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_statistic(std::span<const double> samples, const Distribution& d) {
  if (samples.empty()) throw ContractViolation("ks_statistic: empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto f = cdf_sorted(d, sorted);
  const double n = static_cast<double>(sorted.size());
  double stat = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    stat = std::max({stat, (static_cast<double>(i) + 1.0) / n - f[i], f[i] - static_cast<double>(i) / n});
  }
  return stat;
}

ErrorDistributionModel fit_family(std::span<const double> samples, Family family) {
  if (samples.size() < 8) {
    throw FitError("fit " + std::string(family_name(family)) + ": need at least 8 samples, got " +
                   std::to_string(samples.size()));
  }
  for (double v : samples) {
    if (!std::isfinite(v)) throw FitError("fit: non-finite sample");
  }
  const Moments raw = moments(samples);
  if (!(raw.sd > 1e-12 * std::max(1.0, std::abs(raw.mean)))) {
    throw FitError("fit " + std::string(family_name(family)) + ": degenerate sample (zero variance)");
  }

  const double center = raw.median, spread = raw.sd;
  Problem p{family, {}, 0.0, 0.0};
  p.z.reserve(samples.size());
  for (double v : samples) p.z.push_back((v - center) / spread);
  const Moments m = moments(p.z);
  p.zmin = m.min;
  p.margin = 1e-6;

  ErrorDistributionModel out;
  out.n = samples.size();
  if (family == Family::normal) {
    out.dist = Normal{raw.mean, raw.sd};
  } else {
    gsl_set_error_handler_off();
    Minimum best{{}, std::numeric_limits<double>::infinity(), false};
    for (const Distribution& s : starting_points(p, m)) {
      Minimum found = simplex(p, encode(p, s), 0.3, 1e-2, 400);
      if (found.value < best.value) best = std::move(found);
    }
    if (!(best.value < kPenalty)) {
      throw FitError("fit " + std::string(family_name(family)) + ": no finite likelihood from any start");
    }
    // Coarse passes from every start, then one tight search from the best; a
    // fresh simplex also guards against premature collapse.
    best = simplex(p, best.t, 0.1, 1e-6, 2000);
    if (!best.converged) {
      throw FitError("fit " + std::string(family_name(family)) + ": simplex search did not converge");
    }
    out.dist = affine_back(decode(p, best.t.data()), center, spread);
  }
  validate(out.dist);

  const double mass = total_mass(out.dist);
  if (std::abs(mass - 1.0) > 1e-3) {
    throw FitError("fit " + describe(out.dist) + ": pdf integrates to " + std::to_string(mass));
  }
  out.log_likelihood = 0.0;
  for (double v : samples) out.log_likelihood += log_pdf(out.dist, v);
  out.ks = ks_statistic(samples, out.dist);
  return out;
}

ErrorDistributionModel select_best_fit(std::span<const double> samples, std::span<const Family> candidates,
                                       double parsimony) {
  if (candidates.empty()) throw ContractViolation("select_best_fit: no candidate families");
  std::vector<ErrorDistributionModel> fits;
  std::string failures;
  for (Family f : candidates) {
    try {
      fits.push_back(fit_family(samples, f));
    } catch (const FitError& e) {
      failures += std::string(e.what()) + "; ";
    }
  }
  if (fits.empty()) throw FitError("select_best_fit: every candidate failed: " + failures);
  if (parsimony < 0.0) throw ContractViolation("select_best_fit: parsimony must be >= 0");
  const double margin = parsimony / std::sqrt(static_cast<double>(samples.size()));
  double best_d = 1.0;
  for (const auto& m : fits) best_d = std::min(best_d, m.ks);
  const ErrorDistributionModel* chosen = nullptr;
  for (const auto& m : fits) {
    if (m.ks > best_d + margin) continue;
    if (!chosen) {
      chosen = &m;
      continue;
    }
    const Family a = family_of(m.dist), b = family_of(chosen->dist);
    const auto pa = parameter_count(a), pb = parameter_count(b);
    if (pa < pb || (pa == pb && a < b)) chosen = &m;
  }
  return *chosen;
}

}  // namespace adrf::stats
