#pragma once

#include "adrf/stats/calibration.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace adrf::pipeline {

struct CalibrationFile {
  stats::ThresholdSet thresholds;
  /// The streams that were calibrated, in file order.
  std::vector<stats::StreamCalibration> streams;
};

/// key=value lines: p, then per stream <name>=threshold and
/// <name>.family / .params / .ks / .n / .flagged_fraction.
void write_calibration(std::ostream& os, const CalibrationFile& f);
/// Streams absent from the file keep a zero threshold. Throws FormatError
/// naming the line on malformed input.
CalibrationFile read_calibration(std::istream& is);

void save_calibration(const std::filesystem::path& path, const CalibrationFile& f);
CalibrationFile load_calibration(const std::filesystem::path& path);

}  // namespace adrf::pipeline
