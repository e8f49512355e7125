#pragma once

#include "adrf/pipeline/events.hpp"

#include <cstdint>
#include <map>
#include <optional>

namespace adrf::pipeline {

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  Confusion& operator+=(const Confusion& o);
};

/// Ratios with a zero denominator are absent.
struct Metrics {
  std::optional<double> precision, recall, f1, accuracy;
};

Metrics metrics(const Confusion& c);

/// Ground truth of one stream, indexed like its events.
struct LabelTrack {
  std::vector<double> t;
  std::vector<std::uint8_t> label;
};

/// IMU streams and frame scenarios may share ids, so label maps are keyed
/// "imu/<id>" or "vision/<id>".
std::string label_key(Source source, const std::string& stream);

struct ScenarioRow {
  std::string detector;
  std::string scenario;
  bool abnormal = false;  // any positive label among the evaluated steps
  Confusion confusion;
  Metrics metrics;
};

struct DetectorSummary {
  std::string detector;
  Confusion pooled;
  Metrics pooled_metrics;
  /// Unweighted means over abnormal scenarios of the metrics that exist.
  Metrics macro;
  std::size_t abnormal_scenarios = 0;
};

struct EvalReport {
  /// Per detector: normal scenarios, then abnormal ones, in natural order.
  std::vector<ScenarioRow> rows;
  std::vector<DetectorSummary> detectors;
};

class LabelMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A step is predicted abnormal if any of its channels is flagged. Only
/// evaluable events count. Throws LabelMismatch when a stream has no labels,
/// an index is out of range, or timestamps disagree.
EvalReport evaluate(const std::vector<FlagEvent>& events, const std::map<std::string, LabelTrack>& labels);

/// Fixed-width table: one block per detector, a row per scenario, then the
/// macro average and pooled rows. Absent values print as "-".
void write_report_table(std::ostream& os, const EvalReport& r);
/// detector,scenario,abnormal,tp,fp,tn,fn,precision,recall,f1,accuracy with
/// empty fields for absent values; scenario "macro" and "pooled" rows last.
void write_report_csv(std::ostream& os, const EvalReport& r);
EvalReport read_report_csv(std::istream& is);

}  // namespace adrf::pipeline
