#include "adrf/stats/calibration.hpp"

#include "adrf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace adrf::stats {

std::string_view stream_name(Stream s) {
  switch (s) {
    case Stream::autoencoder_a: return "autoencoder.e_a";
    case Stream::autoencoder_l: return "autoencoder.e_l";
    case Stream::forecaster_a: return "forecaster.e_a";
    case Stream::forecaster_l: return "forecaster.e_l";
    case Stream::vision: return "vision";
  }
  return "?";
}

void validate(const ThresholdSet& t) {
  if (!(t.p > 0.0 && t.p < 1.0)) throw ContractViolation("threshold confidence p must be in (0,1)");
  for (Stream s : kAllStreams) {
    if (!(t[s] > 0.0) || !std::isfinite(t[s])) {
      throw ContractViolation("threshold " + std::string(stream_name(s)) + " must be finite and > 0");
    }
  }
}

StreamCalibration calibrate_stream(Stream stream, std::span<const double> errors, double p,
                                   std::span<const Family> candidates, double parsimony) {
  if (!(p > 0.0 && p < 1.0)) throw ContractViolation("calibrate: p must be in (0,1)");
  StreamCalibration out;
  out.stream = stream;
  out.model = select_best_fit(errors, candidates, parsimony);
  out.threshold = quantile(out.model.dist, p);
  const auto above = std::count_if(errors.begin(), errors.end(), [&](double e) { return exceeds(e, out.threshold); });
  out.flagged_fraction = static_cast<double>(above) / static_cast<double>(errors.size());
  return out;
}

void write_histogram_csv(std::ostream& os, std::span<const double> samples, const Distribution& model,
                         std::size_t bins) {
  if (samples.empty() || bins == 0) throw ContractViolation("histogram: need samples and bins > 0");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it;
  const double width = std::max(*hi_it - lo, 1e-12) / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  for (double v : samples) {
    counts[std::min(bins - 1, static_cast<std::size_t>((v - lo) / width))]++;
  }
  os << "bin_lo,bin_hi,density,model_pdf\n";
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < bins; ++i) {
    const double a = lo + width * static_cast<double>(i);
    os << a << ',' << a + width << ',' << static_cast<double>(counts[i]) / (n * width) << ','
       << pdf(model, a + 0.5 * width) << '\n';
  }
}

}  // namespace adrf::stats
