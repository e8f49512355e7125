#include "doctest.h"

#include "adrf/data/io.hpp"
#include "adrf/pipeline/checkpoint.hpp"
#include "adrf/pipeline/config.hpp"
#include "adrf/pipeline/evaluate.hpp"
#include "adrf/pipeline/events.hpp"
#include "adrf/pipeline/thresholds.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace adrf;
using namespace adrf::pipeline;

namespace {

template <class Model>
void zero_all(Model& m) {
  for (Tensor t : m.parameters().tensors())
    for (auto& v : t.mutable_data()) v = 0.0;
}

/// Scaler that leaves values in [-1, 1] unchanged.
data::ScalerParams identity_scaler() {
  data::ScalerParams s;
  s.min.fill(-1.0);
  s.max.fill(1.0);
  return s;
}

/// Every sample has angular components `a` and linear components `l`.
data::ImuStream flat_stream(std::size_t n, double a, double l) {
  data::ImuStream s;
  s.id = "flat";
  for (std::size_t i = 0; i < n; ++i) {
    s.t.push_back(0.05 * static_cast<double>(i));
    s.x.push_back({a, a, a, l, l, l});
  }
  return s;
}

stats::ThresholdSet thresholds(double v) {
  stats::ThresholdSet t;
  t.theta.fill(v);
  return t;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("adrf_test_" + name)).string();
}

bool bit_equal(const nn::ParameterRegistry& a, const nn::ParameterRegistry& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.entries()[i];
    const auto& y = b.entries()[i];
    if (x.name != y.name || x.tensor.shape() != y.tensor.shape()) return false;
    const auto dx = x.tensor.data(), dy = y.tensor.data();
    if (std::memcmp(dx.data(), dy.data(), dx.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("checkpoints round-trip every parameter bit-exactly") {
  const auto ae = imu::LstmAutoencoder::init(3, 8, 5);
  const auto scaler = identity_scaler();
  const auto path = temp_path("ae.ckpt");
  save_checkpoint(path, make_checkpoint(ae, scaler, {{"imu.epochs", "10"}}));
  const auto loaded = load_checkpoint(path);
  CHECK(loaded.kind == ModelKind::imu_autoencoder);
  CHECK(loaded.config.at("imu.epochs") == "10");
  REQUIRE(loaded.scaler);
  CHECK(loaded.scaler->max == scaler.max);
  const auto back = restore_as<imu::LstmAutoencoder>(loaded);
  CHECK(bit_equal(back.parameters(), ae.parameters()));

  const auto fc = imu::LstmForecaster::init(4, 7);
  CHECK(bit_equal(restore_as<imu::LstmForecaster>(decode_checkpoint(encode_checkpoint(make_checkpoint(fc))))
                      .parameters(),
                  fc.parameters()));

  const auto vf = vision::CnnLstmForecaster::init({16, {4, 4, 4}, {2, 2, 1}, 2}, 5);
  const auto vb = restore_model(decode_checkpoint(encode_checkpoint(make_checkpoint(vf))));
  REQUIRE(std::holds_alternative<vision::CnnLstmForecaster>(vb));
  CHECK(std::get<vision::CnnLstmForecaster>(vb).codec.arch.strides == vf.codec.arch.strides);
  CHECK(bit_equal(std::get<vision::CnnLstmForecaster>(vb).parameters(), vf.parameters()));

  // The kind tag decides the model type.
  CHECK_THROWS_AS(restore_as<imu::LstmForecaster>(loaded), CheckpointError);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint corruption gives distinct errors") {
  const auto fc = imu::LstmForecaster::init(4, 3);
  const auto bytes = encode_checkpoint(make_checkpoint(fc));
  CHECK(bytes.substr(0, 4) == "ADRF");

  auto bad_magic = bytes;
  bad_magic.replace(0, 4, "XXXX");
  CHECK_THROWS_AS(decode_checkpoint(bad_magic), BadMagic);

  auto bad_version = bytes;
  bad_version[4] = 2;
  CHECK_THROWS_AS(decode_checkpoint(bad_version), VersionMismatch);

  // Cut in the middle of the last tensor's values.
  const std::string last = fc.parameters().entries().back().name;
  const auto cut = bytes.substr(0, bytes.size() - 12);
  try {
    decode_checkpoint(cut);
    FAIL("truncation not detected");
  } catch (const TruncatedCheckpoint& e) {
    CHECK(std::string(e.what()).find("'" + last + "'") != std::string::npos);
  }
  CHECK_THROWS_AS(decode_checkpoint(bytes + "x"), CheckpointError);
}

TEST_CASE("flag rule: strictly above the threshold") {
  // A zero network reconstructs zeros, so e_a is the mean square of the input.
  auto ae = imu::LstmAutoencoder::init(1, 4, 3);
  zero_all(ae);
  const double a = std::sqrt(0.30);
  const auto stream = flat_stream(6, a, 0.1);
  auto th = thresholds(0.276);
  auto ev = infer_imu(stream, ae, identity_scaler(), th);
  REQUIRE(ev.size() == 6);
  REQUIRE(ev[2].evaluable);
  CHECK(ev[2].channels[0].name == "e_a");
  CHECK(ev[2].channels[0].error == doctest::Approx(0.30).epsilon(1e-12));
  CHECK(ev[2].channels[0].flagged);
  CHECK_FALSE(ev[2].channels[1].flagged);
  CHECK(ev[2].flagged());

  th[stats::Stream::autoencoder_a] = ev[2].channels[0].error;
  ev = infer_imu(stream, ae, identity_scaler(), th);
  CHECK_FALSE(ev[2].channels[0].flagged);
}

TEST_CASE("warm-up events are not evaluable") {
  auto ae = imu::LstmAutoencoder::init(1, 4, 3);
  auto fc = imu::LstmForecaster::init(2, 4);
  const auto stream = flat_stream(8, 0.2, 0.1);
  const auto ea = infer_imu(stream, ae, identity_scaler(), thresholds(1.0));
  const auto ef = infer_imu(stream, fc, identity_scaler(), thresholds(1.0));
  REQUIRE(ea.size() == 8);
  REQUIRE(ef.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(ea[i].evaluable == (i >= 2));
    CHECK(ef[i].evaluable == (i >= 3));
    CHECK(ea[i].t == stream.t[i]);
    CHECK(ea[i].source == Source::imu_autoencoder);
    CHECK(ef[i].source == Source::imu_forecaster);
  }
  CHECK(ea[0].channels.empty());

  data::FrameScenarioSpec spec;
  spec.size = 16;
  spec.length = 6;
  const auto sc = data::generate_frame_scenario("cam", spec, 3);
  const auto vf = vision::CnnLstmForecaster::init({16, {4, 4, 4}, {2, 2, 1}, 2}, 5);
  const auto ev = infer_vision(sc, vf, thresholds(1.0));
  REQUIRE(ev.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(ev[i].evaluable == (i >= 3));
  CHECK(ev[3].channels.size() == 1);
  CHECK(ev[3].channels[0].name == "e_v");
}

TEST_CASE("inference without calibration is rejected") {
  auto ae = imu::LstmAutoencoder::init(1, 4, 3);
  stats::ThresholdSet th;
  th[stats::Stream::forecaster_a] = 0.1;
  th[stats::Stream::forecaster_l] = 0.1;
  CHECK_THROWS_AS(infer_imu(flat_stream(5, 0.1, 0.1), ae, identity_scaler(), th), MissingCalibration);
}

TEST_CASE("events survive a JSONL round trip and stay self-consistent") {
  auto fc = imu::LstmForecaster::init(2, 4);
  const auto events = infer_imu(flat_stream(10, 0.3, -0.2), fc, identity_scaler(), thresholds(1e-3));
  std::stringstream ss;
  for (const auto& e : events) write_event_jsonl(ss, e);
  const auto back = read_events_jsonl(ss);
  REQUIRE(back.size() == events.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].evaluable == events[i].evaluable);
    CHECK(back[i].t == events[i].t);
    REQUIRE(back[i].channels.size() == events[i].channels.size());
    for (std::size_t k = 0; k < back[i].channels.size(); ++k) {
      const auto& c = back[i].channels[k];
      CHECK(c.error == events[i].channels[k].error);
      CHECK(c.flagged == stats::exceeds(c.error, c.threshold));
    }
  }
  std::stringstream bad("{\"stream\":\"x\"}\n");
  CHECK_THROWS_AS(read_events_jsonl(bad), data::FormatError);
}

namespace {

std::vector<FlagEvent> synthetic_events(const std::string& stream, const std::vector<int>& pred) {
  std::vector<FlagEvent> out;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    FlagEvent e;
    e.stream = stream;
    e.source = Source::imu_forecaster;
    e.index = i;
    e.t = static_cast<double>(i);
    e.evaluable = true;
    e.channels = {{"e_a", pred[i] ? 2.0 : 0.0, 1.0, pred[i] != 0}, {"e_l", 0.0, 1.0, false}};
    out.push_back(e);
  }
  return out;
}

LabelTrack track(const std::vector<int>& labels) {
  LabelTrack t;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    t.t.push_back(static_cast<double>(i));
    t.label.push_back(static_cast<std::uint8_t>(labels[i]));
  }
  return t;
}

}  // namespace

TEST_CASE("metric arithmetic") {
  const auto m = metrics({9, 1, 9, 1});
  CHECK(*m.precision == doctest::Approx(0.9));
  CHECK(*m.recall == doctest::Approx(0.9));
  CHECK(*m.f1 == doctest::Approx(0.9));
  CHECK(*m.accuracy == doctest::Approx(0.9));

  const auto none = metrics({0, 0, 5, 3});
  CHECK_FALSE(none.precision.has_value());
  CHECK(*none.recall == 0.0);
  CHECK_FALSE(none.f1.has_value());

  const auto perfect = metrics({0, 0, 20, 0});
  CHECK(*perfect.accuracy == 1.0);
  CHECK_FALSE(perfect.recall.has_value());
}

TEST_CASE("evaluate scores steps, scenarios and macro averages") {
  // 9 TP, 1 FN, 1 FP, 9 TN in one stream; a perfect second stream.
  std::vector<int> truth(20, 0), pred(20, 0);
  for (int i = 0; i < 10; ++i) truth[i] = 1;
  for (int i = 0; i < 9; ++i) pred[i] = 1;
  pred[15] = 1;
  auto events = synthetic_events("abnormal-1", pred);
  const auto perfect = synthetic_events("abnormal-0", {1, 1, 0, 0});
  events.insert(events.end(), perfect.begin(), perfect.end());
  auto warm = synthetic_events("abnormal-0", {0});
  warm[0].evaluable = false;
  events.insert(events.begin(), warm.begin(), warm.end());

  std::map<std::string, LabelTrack> labels{{label_key(Source::imu_forecaster, "abnormal-1"), track(truth)},
                                           {label_key(Source::imu_forecaster, "abnormal-0"), track({1, 1, 0, 0})}};
  const auto r = evaluate(events, labels);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].scenario == "abnormal-0");
  CHECK(r.rows[1].confusion.tp == 9);
  CHECK(r.rows[1].confusion.fn == 1);
  CHECK(r.rows[1].confusion.fp == 1);
  CHECK(r.rows[1].confusion.tn == 9);
  REQUIRE(r.detectors.size() == 1);
  CHECK(r.detectors[0].detector == "imu-forecaster");
  CHECK(*r.detectors[0].macro.f1 == doctest::Approx((0.9 + 1.0) / 2));
  CHECK(r.detectors[0].pooled.total() == 24);

  std::stringstream csv;
  write_report_csv(csv, r);
  const auto back = read_report_csv(csv);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[1].confusion.tp == 9);
  CHECK(*back.detectors[0].macro.f1 == *r.detectors[0].macro.f1);
  std::stringstream table;
  write_report_table(table, r);
  CHECK(table.str().find("average (abnormal)") != std::string::npos);

  labels[label_key(Source::imu_forecaster, "abnormal-0")].t[1] = 7.0;
  CHECK_THROWS_AS(evaluate(events, labels), LabelMismatch);
  CHECK_THROWS_AS(evaluate(synthetic_events("other", {1}), labels), LabelMismatch);
}

TEST_CASE("config: unknown and missing keys are named") {
  auto c = Config::defaults(Scale::desk);
  const auto s = settings_from(c);
  CHECK(s.arch.latent_length() == 512);
  CHECK(s.p == 0.95);
  CHECK(s.families.size() == 5);
  CHECK(settings_from(Config::defaults(Scale::paper)).arch.latent_length() == 1024);

  const auto path = temp_path("config.ini");
  {
    std::ofstream os(path);
    os << "[imu]\nepochs = 3\n[vision]\ncgan_epochs = 0\n";
  }
  c.merge_ini(path);
  CHECK(settings_from(c).imu_epochs == 3);
  CHECK(settings_from(c).cgan_epochs == 0);
  {
    std::ofstream os(path);
    os << "[imu]\nepoch = 3\n";
  }
  try {
    c.merge_ini(path);
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("imu.epoch") != std::string::npos);
  }
  c.set("imu.batch", "");
  try {
    settings_from(c);
    FAIL("missing key accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("imu.batch") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("calibration file round trip") {
  std::mt19937_64 rng(4);
  std::gamma_distribution<double> g(3.0, 0.01);
  std::vector<double> errors(400);
  for (double& v : errors) v = g(rng);
  const std::vector<stats::Family> fams{stats::Family::gamma, stats::Family::normal};
  CalibrationFile f;
  f.streams.push_back(stats::calibrate_stream(stats::Stream::forecaster_l, errors, 0.95, fams));
  f.thresholds[stats::Stream::forecaster_l] = f.streams[0].threshold;
  std::stringstream ss;
  write_calibration(ss, f);
  const auto back = read_calibration(ss);
  CHECK(back.thresholds[stats::Stream::forecaster_l] == f.streams[0].threshold);
  CHECK(back.thresholds[stats::Stream::vision] == 0.0);
  REQUIRE(back.streams.size() == 1);
  CHECK(stats::parameters(back.streams[0].model.dist) == stats::parameters(f.streams[0].model.dist));

  std::stringstream bad("p=0.95\nvision=0.1\n");
  CHECK_THROWS_AS(read_calibration(bad), data::FormatError);
}
