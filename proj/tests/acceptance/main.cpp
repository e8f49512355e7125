// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.
//
//   acceptance [--skip-pipeline] [--keep <dir>] [--only <n>]...

#include "gradcheck.hpp"

#include "adrf/data/corpus.hpp"
#include "adrf/data/frames.hpp"
#include "adrf/data/imu.hpp"
#include "adrf/imu/models.hpp"
#include "adrf/loss.hpp"
#include "adrf/nn/layers.hpp"
#include "adrf/ops.hpp"
#include "adrf/pipeline/stages.hpp"
#include "adrf/pipeline/thresholds.hpp"
#include "adrf/stats/calibration.hpp"
#include "adrf/stats/distributions.hpp"
#include "adrf/stats/fitting.hpp"
#include "adrf/stats/special.hpp"
#include "adrf/vision/models.hpp"
#include "adrf/vision/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace adrf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::map<std::string, std::string> read_key_values(const fs::path& p) {
  std::map<std::string, std::string> out;
  std::istringstream in(read_file(p));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// 1

Outcome bs_threshold() {
  const double q = stats::quantile(stats::BirnbaumSaunders{2.053, 0.022, 0.019}, 0.95);
  return {std::abs(q - 0.276) <= 0.002, "quantile(0.95) = " + num(q) + ", target 0.276 +- 0.002"};
}

// ---------------------------------------------------------------------------
// 2

data::ImuStream ramp_stream(std::size_t n) {
  data::ImuStream s;
  s.id = "ramp";
  for (std::size_t i = 0; i < n; ++i) {
    s.t.push_back(0.05 * static_cast<double>(i));
    data::ImuVector x;
    for (std::size_t d = 0; d < data::kImuDims; ++d) x[d] = std::sin(0.1 * static_cast<double>(i) + static_cast<double>(d));
    s.x.push_back(x);
  }
  return s;
}

data::FrameScenario tiny_scenario(const std::string& id, std::size_t length, bool abnormal) {
  data::FrameScenarioSpec spec;
  spec.size = 8;
  spec.length = length;
  spec.abnormal = abnormal;
  spec.anomaly.displacement_px = 3.0;
  return data::generate_frame_scenario(id, spec, 11 + length);
}

Outcome count_identities() {
  std::ostringstream detail;
  bool pass = true;
  for (auto [n, rec, fc] : {std::tuple<std::size_t, std::size_t, std::size_t>{551, 549, 548}, {302, 299, 298}}) {
    const auto s = ramp_stream(n);
    const auto r = data::make_windows(s, data::WindowMode::reconstruction).size();
    const auto f = data::make_windows(s, data::WindowMode::forecast).size();
    const bool ok = r == rec && f == fc;
    pass = pass && ok;
    detail << n << "->" << r << '/' << f << (ok ? "" : " (expected " + std::to_string(rec) + '/' + std::to_string(fc) + ")")
           << "; ";
  }
  std::vector<data::FrameScenario> normals, abnormals;
  for (std::size_t len : {71, 71, 71, 70, 70, 70}) {
    normals.push_back(tiny_scenario("normal-" + std::to_string(normals.size()), len, false));
  }
  for (std::size_t len : {36, 36, 36, 36, 36, 34}) {
    abnormals.push_back(tiny_scenario("abnormal-" + std::to_string(abnormals.size()), len, true));
  }
  const auto split = data::build_frame_dataset(normals, abnormals, 100, 100, 42);
  const std::size_t normal_total = split.train.size() + split.threshold.size() + split.test_normal.size();
  const bool split_ok = normal_total == 810 && split.train.size() == 610 && split.threshold.size() == 100 &&
                        split.test_normal.size() == 100;
  const bool test_ok = split.test_normal.size() == 100 && split.test_abnormal.size() == 196 && split.test().size() == 296;
  pass = pass && split_ok && test_ok;
  detail << normal_total << "->" << split.train.size() << '/' << split.threshold.size() << '/' << split.test_normal.size()
         << "; " << split.test_normal.size() << '+' << split.test_abnormal.size() << "->" << split.test().size();
  return {pass, detail.str()};
}

// ---------------------------------------------------------------------------
// 3

Outcome gradient_suite() {
  using testing::grad_check;
  using testing::random_tensor;
  std::mt19937_64 rng(21);
  std::vector<std::pair<std::string, double>> results;
  double worst_abs = 0.0;
  auto run = [&](const std::string& name, std::vector<Tensor> params, const std::function<Tensor()>& f) {
    const auto r = grad_check(std::move(params), f);
    results.emplace_back(name, r.max_rel_error);
    worst_abs = std::max(worst_abs, r.max_abs_error);
  };

  {
    Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
    run("matmul+tanh", {a, b}, [&] { return sum(adrf::tanh(matmul(a, b))); });
  }
  {
    Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4}, rng), c = random_tensor({3, 4}, rng);
    run("add/sub/mul", {a, b, c}, [&] { return sum(adrf::tanh(mul(sub(add(a, b), c), add(c, b)))); });
  }
  {
    Tensor a = random_tensor({5}, rng, -3, 3);
    run("sigmoid/scale", {a}, [&] { return sum(mul(sigmoid(a), scale(a, 0.7))); });
  }
  {
    Tensor a = random_tensor({7}, rng);
    run("leaky_relu", {a}, [&] { return sum(mul(leaky_relu(a, 0.2), a)); });
  }
  {
    Tensor x = random_tensor({2, 2, 6, 6}, rng), w = random_tensor({3, 2, 3, 3}, rng), b = random_tensor({3}, rng);
    run("conv2d", {x, w, b}, [&] { return sum(adrf::tanh(conv2d(x, w, b, {2, 1}))); });
  }
  {
    Tensor x = random_tensor({1, 2, 2, 3}, rng), w = random_tensor({1, 48}, rng);
    run("upsample/reshape/flatten", {x, w},
        [&] { return sum(adrf::tanh(mul(reshape(flatten(upsample_nearest(x, 2)), {1, 48}), w))); });
  }
  {
    Tensor a = random_tensor({2, 3}, rng), b = random_tensor({2, 2}, rng);
    run("concat/narrow", {a, b}, [&] {
      return sum(mul(adrf::tanh(narrow(concat({a, b}, 1), 1, 1, 3)), narrow(concat({a, a}, 0), 0, 1, 2)));
    });
  }
  {
    Tensor a = random_tensor({4, 2}, rng);
    run("mean", {a}, [&] { return mean(mul(a, a)); });
  }
  {
    Tensor p = random_tensor({3, 2}, rng, 0.1, 0.9), t = random_tensor({3, 2}, rng, 0.0, 1.0);
    for (LossKind k : {LossKind::mse, LossKind::mae, LossKind::mse_mae, LossKind::bce}) {
      run("loss " + std::to_string(static_cast<int>(k)), {p}, [&] { return loss(k, p, t); });
    }
  }
  {
    nn::Rng r(4);
    auto cell = nn::LstmCellParams::init(3, 4, r);
    nn::Sequence seq{random_tensor({2, 3}, rng), random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)};
    Tensor target = random_tensor({2, 4}, rng);
    run("lstm layer", {cell.W, cell.U, cell.b},
        [&] { return mse_loss(nn::lstm_layer(cell, seq, nn::LstmMode::return_last).outputs[0], target); });
  }
  {
    nn::Sequence x{random_tensor({2, 6}, rng), random_tensor({2, 6}, rng), random_tensor({2, 6}, rng)};
    Tensor target = random_tensor({2, 6}, rng);
    const auto ae = imu::LstmAutoencoder::init(7, 5, 4);
    run("lstm autoencoder", ae.parameters().tensors(), [&] { return mse_loss(concat(ae.forward(x), 1), concat(x, 1)); });
    const auto fc = imu::LstmForecaster::init(7, 5);
    run("lstm forecaster", fc.parameters().tensors(), [&] { return mse_loss(fc.forward(x), target); });
  }
  {
    const vision::CodecArch arch{8, {2, 2}, {2, 1}, 1};
    const Tensor f0 = random_tensor({1, 1, 8, 8}, rng, -0.9, 0.9), f1 = random_tensor({1, 1, 8, 8}, rng, -0.9, 0.9),
                 f2 = random_tensor({1, 1, 8, 8}, rng, -0.9, 0.9), f3 = random_tensor({1, 1, 8, 8}, rng, -0.9, 0.9);
    const auto fc = vision::CnnLstmForecaster::init(arch, 5);
    run("cnn-lstm forecaster", fc.parameters().tensors(), [&] { return mse_loss(fc.forward({f0, f1, f2}), f3); });
    const auto d = vision::Discriminator::init(arch, 6, 3);
    run("discriminator", d.parameters().tensors(),
        [&] { return bce_loss(d.forward({f0, f1, f2, f3}), Tensor({1, 1}, 1.0)); });
  }

  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, err] : results) {
    if (err >= worst) {
      worst = err;
      worst_name = name;
    }
  }
  return {worst < 1e-4, std::to_string(results.size()) + " checks, max relative error " + num(worst, 3) + " (" +
                            worst_name + "), bound 1e-4; max absolute error " + num(worst_abs, 3)};
}

// ---------------------------------------------------------------------------
// 4

Outcome calibration_by_construction(const fs::path& run) {
  const auto cal = pipeline::load_calibration(run / "run" / "calibration.txt");
  std::ostringstream detail;
  bool pass = cal.streams.size() == stats::kAllStreams.size();
  for (const auto& s : cal.streams) {
    const double n = static_cast<double>(s.model.n);
    const double sigma = std::sqrt(0.05 * 0.95 / n);
    const bool ok = std::abs(s.flagged_fraction - 0.05) <= 3.0 * sigma;
    pass = pass && ok;
    if (detail.tellp() > 0) detail << "; ";
    detail << stats::stream_name(s.stream) << ' ' << num(s.flagged_fraction, 4) << " (n " << s.model.n << ", +-"
           << num(3.0 * sigma, 3) << (ok ? ")" : ", out)");
  }
  if (cal.streams.size() != stats::kAllStreams.size()) detail << "; only " << cal.streams.size() << " streams calibrated";
  return {pass, detail.str()};
}

// ---------------------------------------------------------------------------
// 5

Outcome ks_recovery() {
  const auto t0 = Clock::now();
  const std::vector<std::pair<stats::Family, stats::Distribution>> cases{
      {stats::Family::birnbaum_saunders, stats::BirnbaumSaunders{2.053, 0.022, 0.019}},
      {stats::Family::johnson_su, stats::JohnsonSU{0.89, 0.44, 0.16, 0.0024}},
      {stats::Family::normal, stats::Normal{0.3, 0.05}},
  };
  std::ostringstream detail;
  bool pass = true;
  for (const auto& [family, dist] : cases) {
    int hits = 0;
    for (std::uint64_t seed = 2000; seed < 2010; ++seed) {
      std::mt19937_64 rng(seed);
      const auto xs = stats::sample(dist, 5000, rng);
      const auto best = stats::select_best_fit(xs, stats::kAllFamilies);
      if (stats::family_of(best.dist) == family) ++hits;
    }
    pass = pass && hits >= 9;
    detail << stats::family_name(family) << ' ' << hits << "/10; ";
  }
  const double elapsed = seconds_since(t0);
  pass = pass && elapsed < 120.0;
  detail << num(elapsed, 3) << " s (limit 120)";
  return {pass, detail.str()};
}

// ---------------------------------------------------------------------------
// 6

Outcome quantile_consistency(const fs::path* run) {
  // The bisection behind the NIG quantile, checked against the closed form.
  double inverter_err = 0.0;
  auto normal_mass = [](double a, double b) { return stats::normal_cdf(b) - stats::normal_cdf(a); };
  for (int k = 1; k <= 99; ++k) {
    const double p = k / 100.0;
    const double q = stats::numeric_quantile(normal_mass, p, -40.0, 40.0, 0.0);
    inverter_err = std::max(inverter_err, std::abs(q - stats::normal_quantile(p)));
  }

  std::vector<std::pair<std::string, stats::Distribution>> models;
  if (run) {
    const auto cal = pipeline::load_calibration(*run / "run" / "calibration.txt");
    for (const auto& s : cal.streams) models.emplace_back(std::string(stats::stream_name(s.stream)), s.model.dist);
  }
  const std::vector<stats::Distribution> sources{
      stats::BirnbaumSaunders{2.053, 0.022, 0.019}, stats::JohnsonSU{0.89, 0.44, 0.16, 0.0024},
      stats::NormalInverseGaussian{0.326, 0.291, 0.061, 0.01}, stats::Normal{5.0, 2.0},
      stats::GammaDist{0.6, -1.0, 3.0}};
  std::mt19937_64 rng(3000);
  for (const auto& src : sources) {
    const auto xs = stats::sample(src, 2000, rng);
    for (stats::Family f : stats::kAllFamilies) {
      try {
        models.emplace_back(std::string(stats::family_name(f)) + " fit",
                            stats::fit_family(xs, f).dist);
      } catch (const stats::FitError&) {
      }
    }
  }

  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, d] : models) {
    for (int k = 1; k <= 99; ++k) {
      const double p = k / 100.0;
      const double e = std::abs(stats::cdf(d, stats::quantile(d, p)) - p);
      if (!(e <= worst)) {
        worst = e;
        worst_name = name;
      }
    }
  }
  std::size_t nig = 0;
  for (const auto& [name, d] : models) nig += stats::family_of(d) == stats::Family::normal_inverse_gaussian;
  const bool pass = inverter_err < 1e-8 && worst < 1e-6 && nig > 0;
  return {pass, "inverter on normal " + num(inverter_err, 3) + " (bound 1e-8); " + std::to_string(models.size()) +
                    " fitted models (" + std::to_string(nig) + " nig), max |cdf(quantile(p)) - p| " + num(worst, 3) +
                    (worst_name.empty() ? "" : " (" + worst_name + ")") + ", bound 1e-6"};
}

// ---------------------------------------------------------------------------
// 7

struct PipelineRun {
  fs::path dir;
  double seconds = 0.0;
  pipeline::EvalReport eval;
  pipeline::VisionSummary vision;
};

PipelineRun run_pipeline(const pipeline::Context& ctx, const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  PipelineRun r;
  r.dir = dir;
  const auto t0 = Clock::now();
  const fs::path corpus = dir / "corpus", out = dir / "run";
  pipeline::run_datagen(ctx, corpus);
  pipeline::run_train_imu(ctx, corpus, out);
  r.vision = pipeline::run_train_vision(ctx, corpus, out);
  pipeline::run_calibrate(ctx, corpus, out, out);
  pipeline::run_infer(ctx, corpus, out, out / "calibration.txt", out);
  r.eval = pipeline::run_eval(ctx, corpus, out / "events.jsonl", out);
  pipeline::run_report(ctx, out);
  r.seconds = seconds_since(t0);
  return r;
}

const pipeline::DetectorSummary* detector(const pipeline::EvalReport& r, pipeline::Source s) {
  for (const auto& d : r.detectors) {
    if (d.detector == pipeline::source_name(s)) return &d;
  }
  return nullptr;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v, 4) : std::string("-"); }

Outcome detection_benchmark(const PipelineRun& run) {
  using pipeline::Source;
  std::ostringstream detail;
  bool pass = run.seconds < 900.0;
  for (Source s : {Source::imu_autoencoder, Source::imu_forecaster}) {
    const auto* d = detector(run.eval, s);
    const bool ok = d && d->macro.f1 && *d->macro.f1 >= 0.90;
    pass = pass && ok;
    detail << pipeline::source_name(s) << " F1 " << (d ? opt(d->macro.f1) : "missing") << "; ";
  }
  const auto* v = detector(run.eval, Source::vision);
  const bool recall_ok = v && v->pooled_metrics.recall && *v->pooled_metrics.recall >= 0.85;
  const auto cal = pipeline::load_calibration(run.dir / "run" / "calibration.txt");
  std::optional<double> cal_fp;
  for (const auto& s : cal.streams) {
    if (s.stream == stats::Stream::vision) cal_fp = s.flagged_fraction;
  }
  const bool fp_ok = cal_fp && *cal_fp <= 0.10;
  pass = pass && recall_ok && fp_ok;
  detail << "vision recall " << (v ? opt(v->pooled_metrics.recall) : "missing") << ", calibration FP " << opt(cal_fp);
  if (v) detail << ", precision " << opt(v->pooled_metrics.precision);
  detail << "; pipeline " << num(run.seconds, 4) << " s (limit 900)";
  return {pass, detail.str()};
}

// ---------------------------------------------------------------------------
// 8

Outcome overfit_oracles() {
  std::ostringstream detail;
  data::ImuWindow w;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t k = 0; k < 3; ++k) {
    w.t[k] = 0.05 * static_cast<double>(k);
    for (auto& v : w.x[k]) v = u(rng);
  }
  w.flag_index = 2;
  auto ae = imu::LstmAutoencoder::init(4);
  imu::TrainConfig cfg;
  cfg.epochs = 500;
  const auto report = imu::train_autoencoder(ae, {w}, cfg);
  const double imu_mse = report.epoch_loss.back();
  const bool imu_ok = imu_mse < 1e-4;
  detail << "imu single-window mse " << num(imu_mse, 3) << " (bound 1e-4); ";

  // Constant sequence of a synthetic frame: a frozen codec can at best hand
  // back its own round trip, so the forecaster is judged against that.
  data::FrameScenarioSpec spec;
  spec.size = 16;
  spec.length = 4;
  const auto scenario = data::generate_frame_scenario("constant", spec, 5);
  auto frame = scenario.frames[0];
  const vision::CodecArch arch{16, {8, 8, 8}, {2, 2, 1}, 4};
  auto model = vision::CnnLstmForecaster::init(arch, 3);
  vision::VisionTrainConfig vc;
  vc.epochs = 300;
  vc.batch = 1;
  vc.augment = false;
  vc.schedule.clear();
  vc.learning_rate = 3e-3;
  vision::pretrain_codec(model.codec, {frame}, vc);
  data::FrameSequence q;
  q.frames = {frame, frame, frame, frame};
  q.scenario = "constant";
  vision::train_forecaster(model, {q}, vc);

  NoGradGuard guard;
  const double codec_err =
      vision::frame_error(vision::tensor_to_frame(model.codec.round_trip(vision::frames_to_tensor({frame.get()}))), *frame);
  const auto pred = vision::predict_frame(model, {frame.get(), frame.get(), frame.get()});
  const double pred_err = vision::frame_error(pred.frame, *frame);
  const bool vision_ok = pred_err <= 2.0 * codec_err;
  detail << "constant-frame prediction error " << num(pred_err, 3) << " vs codec round trip " << num(codec_err, 3)
         << " (bound 2x)";
  return {imu_ok && vision_ok, detail.str()};
}

// ---------------------------------------------------------------------------
// 9

void write_tiny_config(const fs::path& path) {
  std::ofstream os(path);
  os << "[data]\nimu_length = 120\nframe_length = 24\nvision_threshold_count = 20\nvision_test_count = 20\n"
        "[imu]\nepochs = 1\nbatch = 16\n"
        "[vision]\npretrain_epochs = 1\nforecaster_epochs = 1\ncgan_epochs = 1\n";
}

std::map<std::string, std::string> directory_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
  }
  return out;
}

Outcome invariants(const fs::path& scratch) {
  std::ostringstream detail;
  // Frozen codec during forecaster training.
  const vision::CodecArch arch{16, {4, 4, 4}, {2, 2, 1}, 2};
  auto fc = vision::CnnLstmForecaster::init(arch, 8);
  std::vector<data::FrameSequence> seqs;
  data::FrameScenarioSpec spec;
  spec.size = 16;
  spec.length = 12;
  const auto scenario = data::generate_frame_scenario("frozen", spec, 9);
  for (const auto& q : data::make_sequences(scenario)) seqs.push_back(q);
  const auto codec_before = fc.codec.parameters().snapshot();
  const auto lstm_before = fc.lstm.parameters().snapshot();
  vision::VisionTrainConfig vc;
  vc.epochs = 3;
  vc.batch = 4;
  vision::train_forecaster(fc, seqs, vc);
  const bool frozen = fc.codec.parameters().snapshot() == codec_before;
  const bool moved = fc.lstm.parameters().snapshot() != lstm_before;
  detail << "codec " << (frozen ? "bit-identical" : "CHANGED") << ", lstm " << (moved ? "updated" : "unchanged") << "; ";

  // Two seeded runs of the whole pipeline at a tiny configuration.
  const fs::path config = scratch / "tiny.ini";
  fs::create_directories(scratch);
  write_tiny_config(config);
  auto ctx = pipeline::Context::make(pipeline::Scale::desk, 17, config);
  ctx.log = nullptr;
  run_pipeline(ctx, scratch / "a");
  run_pipeline(ctx, scratch / "b");
  const auto a = directory_bytes(scratch / "a");
  const auto b = directory_bytes(scratch / "b");
  std::size_t checkpoints = 0, reports = 0;
  std::vector<std::string> differing;
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second != bytes) differing.push_back(name);
    checkpoints += name.ends_with(".ckpt");
    const auto file = fs::path(name).filename().string();
    reports += file.starts_with("report") || file.starts_with("eval_report");
  }
  if (a.size() != b.size()) differing.push_back("(file sets differ)");
  const bool same = differing.empty() && checkpoints >= 4 && reports >= 2;
  detail << a.size() << " files compared (" << checkpoints << " checkpoints, " << reports << " reports), ";
  if (differing.empty()) {
    detail << "all byte-identical";
  } else {
    detail << differing.size() << " differ, first " << differing.front();
  }
  return {frozen && moved && same, detail.str()};
}

// ---------------------------------------------------------------------------
// 10

Outcome cgan_stability(const PipelineRun& run) {
  std::ostringstream detail;
  const auto summary = read_key_values(run.dir / "run" / "vision_summary.txt");
  const bool completed = summary.count("cgan_completed") && summary.at("cgan_completed") == "1";
  std::istringstream log(read_file(run.dir / "run" / "vision_training.csv"));
  std::string line;
  int epochs = 0;
  bool bounded = true;
  double worst = 0.0;
  while (std::getline(log, line)) {
    if (!line.starts_with("cgan,")) continue;
    ++epochs;
    std::istringstream fields(line);
    std::string phase, epoch, g, d;
    std::getline(fields, phase, ',');
    std::getline(fields, epoch, ',');
    std::getline(fields, g, ',');
    std::getline(fields, d, ',');
    for (const auto& s : {g, d}) {
      const double v = std::stod(s);
      bounded = bounded && std::isfinite(v) && std::abs(v) < 100.0;
      worst = std::max(worst, std::abs(v));
    }
  }
  const double before = run.vision.normal_error_prediction_only;
  const double after = run.vision.normal_error_final;
  const double change = after / before - 1.0;
  const bool degradation_ok = std::isfinite(change) && change <= 0.20;
  const std::string report = read_file(run.dir / "run" / "report.txt");
  const bool annotated = report.find("with the adversarial term") != std::string::npos;
  detail << epochs << " epochs" << (completed ? " completed" : " NOT completed") << ", max |loss| " << num(worst, 4)
         << (bounded ? "" : " (unbounded)") << ", held-out normal error " << num(before, 4) << " -> " << num(after, 4)
         << " (" << (change >= 0 ? "+" : "") << num(100.0 * change, 3) << "%, limit +20%), recall "
         << opt(run.vision.recall_prediction_only) << " -> " << opt(run.vision.recall_final)
         << (annotated ? ", annotated in report" : ", annotation missing");
  return {completed && epochs == 20 && bounded && degradation_ok && annotated, detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  bool skip_pipeline = false;
  std::optional<fs::path> keep;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--skip-pipeline") {
      skip_pipeline = true;
    } else if (a == "--keep" && i + 1 < argc) {
      keep = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      only.insert(std::stoi(argv[++i]));
    } else {
      std::cerr << "usage: acceptance [--skip-pipeline] [--keep <dir>] [--only <n>]...\n";
      return 2;
    }
  }
  const fs::path scratch = keep ? *keep : fs::temp_directory_path() / "adrf_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  int failures = 0, ran = 0;
  auto selected = [&](int id) { return only.empty() || only.count(id) > 0; };
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& check) {
    if (!selected(id)) return;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    ++ran;
    if (!o.pass) ++failures;
    std::printf("criterion %2d %s  %-28s %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  };
  auto not_run = [&](int id, const std::string& name) { report(id, name, [] { return Outcome{false, "not run"}; }); };

  std::optional<PipelineRun> run;
  std::string pipeline_error;
  if (!skip_pipeline && (selected(4) || selected(6) || selected(7) || selected(10))) {
    try {
      auto ctx = pipeline::Context::make(pipeline::Scale::desk, 7);
      ctx.log = nullptr;
      run = run_pipeline(ctx, scratch / "desk");
    } catch (const std::exception& e) {
      pipeline_error = e.what();
    }
  }
  auto with_run = [&](int id, const std::string& name, const std::function<Outcome(const PipelineRun&)>& check) {
    if (run) {
      report(id, name, [&] { return check(*run); });
    } else if (!pipeline_error.empty()) {
      report(id, name, [&] { return Outcome{false, "pipeline failed: " + pipeline_error}; });
    } else {
      not_run(id, name);
    }
  };

  report(1, "bs threshold", bs_threshold);
  report(2, "window/split counts", count_identities);
  report(3, "gradient suite", gradient_suite);
  with_run(4, "calibration by construction", [](const PipelineRun& r) { return calibration_by_construction(r.dir); });
  report(5, "ks family recovery", ks_recovery);
  report(6, "quantile/cdf consistency", [&] { return quantile_consistency(run ? &run->dir : nullptr); });
  with_run(7, "detection benchmark", detection_benchmark);
  report(8, "overfit oracles", overfit_oracles);
  report(9, "frozen codec, determinism", [&] { return invariants(scratch / "determinism"); });
  with_run(10, "cgan stability", cgan_stability);

  std::printf("%d of %d criteria failed\n", failures, ran);
  if (!keep) fs::remove_all(scratch);
  return failures == 0 ? 0 : 1;
}
