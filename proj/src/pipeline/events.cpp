#include "adrf/pipeline/events.hpp"

#include "adrf/data/io.hpp"

#include <json.hpp>

#include <istream>
#include <ostream>

namespace adrf::pipeline {

using nlohmann::json;

namespace {

void require(const stats::ThresholdSet& th, std::initializer_list<stats::Stream> streams) {
  for (auto s : streams) {
    if (!(th[s] > 0.0) || !std::isfinite(th[s])) {
      throw MissingCalibration("no calibrated threshold for stream " + std::string(stats::stream_name(s)));
    }
  }
}

ChannelFlag channel(const char* name, double error, double threshold) {
  return {name, error, threshold, stats::exceeds(error, threshold)};
}

template <class ErrorFn>
std::vector<FlagEvent> imu_events(const data::ImuStream& raw, Source source, data::WindowMode mode,
                                  const data::ScalerParams& scaler, stats::Stream sa, stats::Stream sl,
                                  const stats::ThresholdSet& th, ErrorFn errors_of) {
  require(th, {sa, sl});
  const auto scaled = data::apply_scaler(scaler, raw);
  const auto errors = errors_of(data::make_windows(scaled, mode));
  std::vector<FlagEvent> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i].stream = raw.id;
    out[i].source = source;
    out[i].index = i;
    out[i].t = raw.t[i];
  }
  for (const auto& e : errors) {
    auto& ev = out[e.index];
    ev.evaluable = true;
    ev.channels = {channel("e_a", e.e_a, th[sa]), channel("e_l", e.e_l, th[sl])};
  }
  return out;
}

}  // namespace

bool FlagEvent::flagged() const {
  return std::any_of(channels.begin(), channels.end(), [](const ChannelFlag& c) { return c.flagged; });
}

std::string_view source_name(Source s) {
  switch (s) {
    case Source::imu_autoencoder: return "imu-autoencoder";
    case Source::imu_forecaster: return "imu-forecaster";
    case Source::vision: return "vision";
  }
  return "unknown";
}

Source parse_source(std::string_view name) {
  for (auto s : {Source::imu_autoencoder, Source::imu_forecaster, Source::vision})
    if (source_name(s) == name) return s;
  throw data::FormatError("unknown event source '" + std::string(name) + "'");
}

std::vector<FlagEvent> infer_imu(const data::ImuStream& raw, const imu::LstmAutoencoder& model,
                                 const data::ScalerParams& scaler, const stats::ThresholdSet& thresholds) {
  return imu_events(raw, Source::imu_autoencoder, data::WindowMode::reconstruction, scaler,
                    stats::Stream::autoencoder_a, stats::Stream::autoencoder_l, thresholds,
                    [&](const auto& w) { return imu::reconstruct_errors(model, w); });
}

std::vector<FlagEvent> infer_imu(const data::ImuStream& raw, const imu::LstmForecaster& model,
                                 const data::ScalerParams& scaler, const stats::ThresholdSet& thresholds) {
  return imu_events(raw, Source::imu_forecaster, data::WindowMode::forecast, scaler, stats::Stream::forecaster_a,
                    stats::Stream::forecaster_l, thresholds,
                    [&](const auto& w) { return imu::forecast_errors(model, w); });
}

std::vector<FlagEvent> infer_vision(const std::vector<data::FrameSequence>& seqs,
                                    const vision::CnnLstmForecaster& model, const stats::ThresholdSet& thresholds) {
  require(thresholds, {stats::Stream::vision});
  const auto errors = vision::sequence_errors(model, seqs);
  std::vector<FlagEvent> out;
  out.reserve(seqs.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    FlagEvent e;
    e.stream = seqs[i].scenario;
    e.source = Source::vision;
    e.index = seqs[i].end_index;
    e.t = seqs[i].t;
    e.evaluable = true;
    e.channels = {channel("e_v", errors[i], thresholds[stats::Stream::vision])};
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<FlagEvent> infer_vision(const data::FrameScenario& s, const vision::CnnLstmForecaster& model,
                                    const stats::ThresholdSet& thresholds) {
  require(thresholds, {stats::Stream::vision});
  std::vector<FlagEvent> out;
  for (std::size_t i = 0; i < std::min<std::size_t>(3, s.size()); ++i) {
    FlagEvent e;
    e.stream = s.id;
    e.source = Source::vision;
    e.index = i;
    e.t = s.t[i];
    out.push_back(std::move(e));
  }
  const auto rest = infer_vision(data::make_sequences(s), model, thresholds);
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

void write_event_jsonl(std::ostream& os, const FlagEvent& e) {
  json j;
  j["stream"] = e.stream;
  j["source"] = std::string(source_name(e.source));
  j["index"] = e.index;
  j["t"] = e.t;
  j["evaluable"] = e.evaluable;
  if (e.evaluable) {
    j["flagged"] = e.flagged();
    json ch = json::object();
    for (const auto& c : e.channels) ch[c.name] = {{"error", c.error}, {"threshold", c.threshold}, {"flagged", c.flagged}};
    j["channels"] = ch;
  }
  os << j.dump() << '\n';
}

std::vector<FlagEvent> read_events_jsonl(std::istream& is) {
  std::vector<FlagEvent> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      FlagEvent e;
      e.stream = j.at("stream").get<std::string>();
      e.source = parse_source(j.at("source").get<std::string>());
      e.index = j.at("index").get<std::size_t>();
      e.t = j.at("t").get<double>();
      e.evaluable = j.at("evaluable").get<bool>();
      if (e.evaluable) {
        for (const auto& [name, c] : j.at("channels").items()) {
          e.channels.push_back({name, c.at("error").get<double>(), c.at("threshold").get<double>(),
                                c.at("flagged").get<bool>()});
        }
      }
      out.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw data::FormatError("events line " + std::to_string(n) + ": " + ex.what());
    } catch (const data::FormatError& ex) {
      throw data::FormatError("events line " + std::to_string(n) + ": " + ex.what());
    }
  }
  return out;
}

}  // namespace adrf::pipeline
