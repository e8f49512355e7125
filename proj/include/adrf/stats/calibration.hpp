#pragma once

#include "adrf/stats/fitting.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace adrf::stats {

/// The five error streams that get a threshold.
enum class Stream { autoencoder_a, autoencoder_l, forecaster_a, forecaster_l, vision };

inline constexpr std::array<Stream, 5> kAllStreams{Stream::autoencoder_a, Stream::autoencoder_l,
                                                   Stream::forecaster_a, Stream::forecaster_l, Stream::vision};

std::string_view stream_name(Stream s);

struct ThresholdSet {
  std::array<double, 5> theta{};  // indexed by Stream
  double p = 0.95;

  double operator[](Stream s) const { return theta[static_cast<std::size_t>(s)]; }
  double& operator[](Stream s) { return theta[static_cast<std::size_t>(s)]; }
};

/// Throws ContractViolation unless every threshold is > 0 and p in (0, 1).
void validate(const ThresholdSet& t);

struct StreamCalibration {
  Stream stream = Stream::autoencoder_a;
  ErrorDistributionModel model;
  double threshold = 0.0;
  /// Share of the calibration errors strictly above the threshold.
  double flagged_fraction = 0.0;
};

StreamCalibration calibrate_stream(Stream stream, std::span<const double> errors, double p,
                                   std::span<const Family> candidates, double parsimony = kDefaultParsimony);

/// Flag rule shared by calibration and inference.
inline bool exceeds(double error, double threshold) { return error > threshold; }

/// Density histogram of `samples` next to the model pdf at bin centres.
void write_histogram_csv(std::ostream& os, std::span<const double> samples, const Distribution& model,
                         std::size_t bins = 50);

}  // namespace adrf::stats
