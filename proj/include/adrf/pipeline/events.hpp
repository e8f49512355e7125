#pragma once

#include "adrf/data/frames.hpp"
#include "adrf/data/imu.hpp"
#include "adrf/imu/models.hpp"
#include "adrf/stats/calibration.hpp"
#include "adrf/vision/models.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace adrf::pipeline {

enum class Source { imu_autoencoder, imu_forecaster, vision };

std::string_view source_name(Source s);
Source parse_source(std::string_view name);

struct ChannelFlag {
  std::string name;  // "e_a", "e_l" or "e_v"
  double error = 0.0;
  double threshold = 0.0;
  bool flagged = false;
};

struct FlagEvent {
  std::string stream;
  Source source = Source::imu_autoencoder;
  std::size_t index = 0;
  double t = 0.0;
  /// False during warm-up or where no window exists; such events carry no
  /// channels.
  bool evaluable = false;
  std::vector<ChannelFlag> channels;

  /// Any channel flagged.
  bool flagged() const;
};

class MissingCalibration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every sample of the stream gets one event; samples without a window are
/// not evaluable. The stream must be raw (unscaled); the scaler is applied here.
std::vector<FlagEvent> infer_imu(const data::ImuStream& raw, const imu::LstmAutoencoder& model,
                                 const data::ScalerParams& scaler, const stats::ThresholdSet& thresholds);
std::vector<FlagEvent> infer_imu(const data::ImuStream& raw, const imu::LstmForecaster& model,
                                 const data::ScalerParams& scaler, const stats::ThresholdSet& thresholds);

/// One event per frame of the scenario; the first three are not evaluable.
std::vector<FlagEvent> infer_vision(const data::FrameScenario& s, const vision::CnnLstmForecaster& model,
                                    const stats::ThresholdSet& thresholds);
/// One event per sequence, attributed to its fourth frame.
std::vector<FlagEvent> infer_vision(const std::vector<data::FrameSequence>& seqs,
                                    const vision::CnnLstmForecaster& model, const stats::ThresholdSet& thresholds);

void write_event_jsonl(std::ostream& os, const FlagEvent& e);
/// Throws FormatError naming the line on a malformed record.
std::vector<FlagEvent> read_events_jsonl(std::istream& is);

}  // namespace adrf::pipeline
