#pragma once

#include "adrf/stats/distributions.hpp"

#include <functional>
#include <span>
#include <stdexcept>

namespace adrf::stats {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ErrorDistributionModel {
  Distribution dist;
  double ks = 1.0;
  std::size_t n = 0;
  double log_likelihood = 0.0;
};

inline constexpr double kDefaultParsimony = 0.25;

/// Maximum likelihood fit by simplex search on unconstrained coordinates.
/// Throws FitError on degenerate samples or a fit that does not converge.
ErrorDistributionModel fit_family(std::span<const double> samples, Family family);

/// sup |F_n - F| over the sample.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);
double ks_statistic(std::span<const double> samples, const Distribution& d);

/// Smallest D wins. Fits whose D is within parsimony / sqrt(n) of the best
/// are ties, resolved toward fewer parameters and then Family order. Families
/// that fail to fit are skipped; FitError only if all of them fail.
ErrorDistributionModel select_best_fit(std::span<const double> samples, std::span<const Family> candidates,
                                       double parsimony = kDefaultParsimony);

}  // namespace adrf::stats
