#include "adrf/pipeline/stages.hpp"

#include "adrf/data/io.hpp"
#include "adrf/imu/models.hpp"
#include "adrf/vision/training.hpp"

#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace adrf::pipeline {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << std::setprecision(17);
  return os;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  return is;
}

const data::ImuStream& find_stream(const data::Corpus& c, const std::string& id) {
  for (const auto* set : {&c.imu_normal, &c.imu_abnormal})
    for (const auto& s : *set)
      if (s.id == id) return s;
  throw ContractViolation("corpus has no IMU stream '" + id + "'");
}

std::vector<const data::ImuStream*> streams_for(const data::Corpus& c, const data::SplitManifest& m,
                                                const std::string& role) {
  std::vector<const data::ImuStream*> out;
  for (const auto& id : m.ids(role)) out.push_back(&find_stream(c, id));
  return out;
}

std::map<int, double> scaled_schedule(int epochs) {
  if (epochs < 2) return {};
  return {{epochs / 2, 0.1}, {epochs * 4 / 5, 0.01}};
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

/// Recall on labelled abnormal sequences at a threshold calibrated on the
/// threshold split.
std::optional<double> vision_recall(const Context& ctx, const vision::CnnLstmForecaster& model,
                                    const data::FrameDatasetSplit& split) {
  try {
    const auto cal = stats::calibrate_stream(stats::Stream::vision, vision::sequence_errors(model, split.threshold),
                                             ctx.settings.p, ctx.settings.families, ctx.settings.parsimony);
    const auto errors = vision::sequence_errors(model, split.test_abnormal);
    std::size_t tp = 0, pos = 0;
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (!split.test_abnormal[i].label) continue;
      ++pos;
      tp += stats::exceeds(errors[i], cal.threshold);
    }
    if (pos == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(pos);
  } catch (const stats::FitError& e) {
    ctx.note(std::string("vision recall unavailable: ") + e.what());
    return std::nullopt;
  }
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  auto is = open_in(path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

}  // namespace

Context Context::make(Scale scale, std::uint64_t seed, const std::optional<fs::path>& config_file) {
  Context ctx;
  ctx.config = Config::defaults(scale);
  if (config_file) ctx.config.merge_ini(*config_file);
  ctx.settings = settings_from(ctx.config);
  ctx.settings.scale = scale;
  ctx.seed = seed;
  return ctx;
}

void Context::note(std::string_view msg) const {
  if (log) log(msg);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : purpose) h = (h ^ ch) * 0x100000001B3ULL;
  return splitmix(splitmix(seed) ^ h);
}

data::CorpusSpec corpus_spec(const Settings& s) {
  data::CorpusSpec spec;
  spec.normal_count = s.normal_count;
  spec.abnormal_count = s.abnormal_count;
  spec.imu.length = s.imu_length;
  spec.imu.rate_hz = s.imu_rate_hz;
  spec.imu.anomaly.coverage = s.imu_anomaly_coverage;
  spec.frames.size = s.frame_size;
  spec.frames.length = s.frame_length;
  spec.frames.anomaly.coverage = s.frame_anomaly_coverage;
  spec.frames.anomaly.displacement_px = 8.0 * static_cast<double>(s.frame_size) / 32.0;
  return spec;
}

void run_datagen(const Context& ctx, const fs::path& out) {
  fs::create_directories(out);
  const auto corpus = data::generate_corpus(corpus_spec(ctx.settings), ctx.seed);
  data::write_corpus(out, corpus);
  auto os = open_out(out / "config.ini");
  ctx.config.write_ini(os);
  ctx.note("datagen: " + std::to_string(corpus.imu_normal.size()) + " normal and " +
           std::to_string(corpus.imu_abnormal.size()) + " abnormal scenarios in " + out.string());
}

void run_train_imu(const Context& ctx, const fs::path& corpus_dir, const fs::path& out) {
  const auto& s = ctx.settings;
  fs::create_directories(out);
  const auto corpus = data::read_corpus(corpus_dir, s.frame_size);
  const auto manifest = data::read_manifest(corpus_dir / "split.txt");
  const auto train = streams_for(corpus, manifest, "train");
  const auto scaler = data::fit_scaler(train);
  std::vector<data::ImuWindow> rec, fc;
  for (const auto* raw : train) {
    const auto scaled = data::apply_scaler(scaler, *raw);
    for (auto& w : data::make_windows(scaled, data::WindowMode::reconstruction)) rec.push_back(std::move(w));
    for (auto& w : data::make_windows(scaled, data::WindowMode::forecast)) fc.push_back(std::move(w));
  }
  auto log_csv = open_out(out / "imu_training.csv");
  log_csv << "model,epoch,loss\n";
  imu::TrainConfig cfg;
  cfg.epochs = s.imu_epochs;
  cfg.learning_rate = s.imu_learning_rate;
  cfg.batch = s.imu_batch;

  auto ae = imu::LstmAutoencoder::init(derive_seed(ctx.seed, "imu.autoencoder"), s.ae_hidden1, s.ae_hidden2);
  cfg.seed = derive_seed(ctx.seed, "imu.autoencoder.shuffle");
  cfg.on_epoch = [&](int e, double loss) {
    log_csv << "autoencoder," << e << ',' << loss << '\n';
    ctx.note("train-imu autoencoder epoch " + std::to_string(e) + " loss " + fixed(loss));
  };
  imu::train_autoencoder(ae, rec, cfg);
  save_checkpoint(out / "imu_autoencoder.ckpt", make_checkpoint(ae, scaler, ctx.config.values()));

  auto fm = imu::LstmForecaster::init(derive_seed(ctx.seed, "imu.forecaster"), s.fc_hidden);
  cfg.seed = derive_seed(ctx.seed, "imu.forecaster.shuffle");
  cfg.on_epoch = [&](int e, double loss) {
    log_csv << "forecaster," << e << ',' << loss << '\n';
    ctx.note("train-imu forecaster epoch " + std::to_string(e) + " loss " + fixed(loss));
  };
  imu::train_forecaster(fm, fc, cfg);
  save_checkpoint(out / "imu_forecaster.ckpt", make_checkpoint(fm, scaler, ctx.config.values()));
}

data::FrameDatasetSplit vision_split(const Settings& s, const data::Corpus& c) {
  return data::build_frame_dataset(c.frames_normal, c.frames_abnormal, s.vision_threshold_count, s.vision_test_count,
                                   s.split_seed);
}

VisionSummary run_train_vision(const Context& ctx, const fs::path& corpus_dir, const fs::path& out) {
  const auto& s = ctx.settings;
  fs::create_directories(out);
  const auto corpus = data::read_corpus(corpus_dir, s.frame_size);
  const auto split = vision_split(s, corpus);
  auto model = vision::CnnLstmForecaster::init(s.arch, derive_seed(ctx.seed, "vision.model"));
  auto log_csv = open_out(out / "vision_training.csv");
  log_csv << "phase,epoch,loss,discriminator_loss\n";

  vision::VisionTrainConfig pc;
  pc.epochs = s.pretrain_epochs;
  pc.learning_rate = s.vision_learning_rate;
  pc.schedule = scaled_schedule(s.pretrain_epochs);
  pc.batch = s.vision_batch;
  pc.augment = s.augment;
  pc.seed = derive_seed(ctx.seed, "vision.pretrain");
  pc.on_epoch = [&](int e, double loss) {
    log_csv << "pretrain," << e << ',' << loss << ",\n";
    ctx.note("train-vision pretrain epoch " + std::to_string(e) + " loss " + fixed(loss));
  };
  vision::pretrain_codec(model.codec, vision::unique_frames(split.train), pc);

  vision::VisionTrainConfig fc = pc;
  fc.epochs = s.forecaster_epochs;
  fc.schedule = scaled_schedule(s.forecaster_epochs);
  fc.augment = false;
  fc.seed = derive_seed(ctx.seed, "vision.forecaster");
  fc.on_epoch = [&](int e, double loss) {
    log_csv << "forecaster," << e << ',' << loss << ",\n";
    ctx.note("train-vision forecaster epoch " + std::to_string(e) + " loss " + fixed(loss));
  };
  vision::train_forecaster(model, split.train, fc);

  VisionSummary summary;
  summary.normal_error_prediction_only = mean(vision::sequence_errors(model, split.test_normal));
  summary.normal_error_final = summary.normal_error_prediction_only;
  if (s.cgan_epochs > 0) {
    const auto before = make_checkpoint(model, ctx.config.values());
    save_checkpoint(out / "vision_prediction_only.ckpt", before);
    summary.recall_prediction_only = vision_recall(ctx, model, split);
    auto disc = vision::Discriminator::init(s.arch, derive_seed(ctx.seed, "vision.discriminator"),
                                            s.discriminator_hidden);
    vision::CganConfig cg;
    cg.epochs = s.cgan_epochs;
    cg.learning_rate = s.cgan_learning_rate;
    cg.beta1 = s.cgan_beta1;
    cg.lambda_pred = s.lambda_pred;
    cg.batch = s.vision_batch;
    cg.seed = derive_seed(ctx.seed, "vision.cgan");
    cg.on_epoch = [&](int e, double g, double d) {
      log_csv << "cgan," << e << ',' << g << ',' << d << '\n';
      ctx.note("train-vision cgan epoch " + std::to_string(e) + " generator " + fixed(g) + " discriminator " +
               fixed(d));
    };
    try {
      vision::cgan_finetune(model, disc, split.train, cg);
      summary.cgan_completed = true;
      summary.cgan_note = "completed " + std::to_string(s.cgan_epochs) + " epochs";
    } catch (const vision::ModeCollapse& e) {
      model = restore_as<vision::CnnLstmForecaster>(before);
      summary.cgan_note = std::string("aborted, prediction-only weights kept: ") + e.what();
      ctx.note("train-vision: " + summary.cgan_note);
    }
    summary.normal_error_final = mean(vision::sequence_errors(model, split.test_normal));
    summary.recall_final = vision_recall(ctx, model, split);
  } else {
    summary.cgan_note = "not run";
  }
  save_checkpoint(out / "vision_forecaster.ckpt", make_checkpoint(model, ctx.config.values()));

  auto os = open_out(out / "vision_summary.txt");
  auto opt = [](const std::optional<double>& v) { return v ? fixed(*v, 17) : std::string(); };
  os << "normal_error_prediction_only=" << summary.normal_error_prediction_only << '\n'
     << "normal_error_final=" << summary.normal_error_final << '\n'
     << "recall_prediction_only=" << opt(summary.recall_prediction_only) << '\n'
     << "recall_final=" << opt(summary.recall_final) << '\n'
     << "cgan_completed=" << (summary.cgan_completed ? 1 : 0) << '\n'
     << "cgan_note=" << summary.cgan_note << '\n';
  return summary;
}

CalibrationFile run_calibrate(const Context& ctx, const fs::path& corpus_dir, const fs::path& models,
                              const fs::path& out) {
  const auto& s = ctx.settings;
  fs::create_directories(out);
  const auto corpus = data::read_corpus(corpus_dir, s.frame_size);
  const auto manifest = data::read_manifest(corpus_dir / "split.txt");
  std::vector<std::pair<stats::Stream, std::vector<double>>> errors;

  auto imu_errors = [&](const char* file, stats::Stream sa, stats::Stream sl, auto model_tag, data::WindowMode mode) {
    if (!fs::exists(models / file)) return;
    using Model = decltype(model_tag);
    const auto ckpt = load_checkpoint(models / file);
    const auto model = restore_as<Model>(ckpt);
    if (!ckpt.scaler) throw CheckpointError(std::string(file) + " carries no scaler");
    std::vector<double> ea, el;
    for (const auto* raw : streams_for(corpus, manifest, "threshold")) {
      const auto windows = data::make_windows(data::apply_scaler(*ckpt.scaler, *raw), mode);
      std::vector<imu::ImuError> errs;
      if constexpr (std::is_same_v<Model, imu::LstmAutoencoder>) {
        errs = imu::reconstruct_errors(model, windows);
      } else {
        errs = imu::forecast_errors(model, windows);
      }
      for (const auto& e : errs) {
        ea.push_back(e.e_a);
        el.push_back(e.e_l);
      }
    }
    errors.emplace_back(sa, std::move(ea));
    errors.emplace_back(sl, std::move(el));
  };
  imu_errors("imu_autoencoder.ckpt", stats::Stream::autoencoder_a, stats::Stream::autoencoder_l,
             imu::LstmAutoencoder{}, data::WindowMode::reconstruction);
  imu_errors("imu_forecaster.ckpt", stats::Stream::forecaster_a, stats::Stream::forecaster_l, imu::LstmForecaster{},
             data::WindowMode::forecast);
  if (fs::exists(models / "vision_forecaster.ckpt")) {
    const auto model = restore_as<vision::CnnLstmForecaster>(load_checkpoint(models / "vision_forecaster.ckpt"));
    errors.emplace_back(stats::Stream::vision, vision::sequence_errors(model, vision_split(s, corpus).threshold));
  }
  if (errors.empty()) throw ContractViolation("calibrate: no checkpoints in " + models.string());

  CalibrationFile file;
  file.thresholds.p = s.p;
  auto csv = open_out(out / "calibration_errors.csv");
  csv << "stream,error\n";
  for (const auto& [stream, values] : errors) {
    for (double v : values) csv << stats::stream_name(stream) << ',' << v << '\n';
    auto cal = stats::calibrate_stream(stream, values, s.p, s.families, s.parsimony);
    file.thresholds[stream] = cal.threshold;
    ctx.note("calibrate " + std::string(stats::stream_name(stream)) + ": " +
             std::string(stats::family_name(stats::family_of(cal.model.dist))) + " threshold " +
             fixed(cal.threshold) + " KS " + fixed(cal.model.ks, 4) + " flagged " +
             fixed(cal.flagged_fraction, 4) + " of " + std::to_string(values.size()));
    file.streams.push_back(std::move(cal));
  }
  save_calibration(out / "calibration.txt", file);
  return file;
}

std::vector<FlagEvent> run_infer(const Context& ctx, const fs::path& corpus_dir, const fs::path& models,
                                 const fs::path& calibration, const fs::path& out) {
  const auto& s = ctx.settings;
  fs::create_directories(out);
  const auto corpus = data::read_corpus(corpus_dir, s.frame_size);
  const auto manifest = data::read_manifest(corpus_dir / "split.txt");
  const auto th = load_calibration(calibration).thresholds;
  std::vector<FlagEvent> events;
  auto append = [&](std::vector<FlagEvent> v) { events.insert(events.end(), v.begin(), v.end()); };

  const auto tests = streams_for(corpus, manifest, "test");
  if (fs::exists(models / "imu_autoencoder.ckpt")) {
    const auto ckpt = load_checkpoint(models / "imu_autoencoder.ckpt");
    const auto m = restore_as<imu::LstmAutoencoder>(ckpt);
    for (const auto* raw : tests) append(infer_imu(*raw, m, ckpt.scaler.value(), th));
  }
  if (fs::exists(models / "imu_forecaster.ckpt")) {
    const auto ckpt = load_checkpoint(models / "imu_forecaster.ckpt");
    const auto m = restore_as<imu::LstmForecaster>(ckpt);
    for (const auto* raw : tests) append(infer_imu(*raw, m, ckpt.scaler.value(), th));
  }
  if (fs::exists(models / "vision_forecaster.ckpt")) {
    const auto m = restore_as<vision::CnnLstmForecaster>(load_checkpoint(models / "vision_forecaster.ckpt"));
    append(infer_vision(vision_split(s, corpus).test_normal, m, th));
    for (const auto& sc : corpus.frames_abnormal) append(infer_vision(sc, m, th));
  }
  auto os = open_out(out / "events.jsonl");
  for (const auto& e : events) write_event_jsonl(os, e);
  ctx.note("infer: " + std::to_string(events.size()) + " events");
  return events;
}

std::vector<FlagEvent> run_infer_files(const Context& ctx, const fs::path& models, const fs::path& calibration,
                                       const std::vector<fs::path>& imu_files, const std::vector<fs::path>& frame_dirs,
                                       const fs::path& out) {
  fs::create_directories(out);
  const auto th = load_calibration(calibration).thresholds;
  std::vector<FlagEvent> events;
  auto append = [&](std::vector<FlagEvent> v) { events.insert(events.end(), v.begin(), v.end()); };
  if (!imu_files.empty()) {
    std::vector<data::ImuStream> streams;
    for (const auto& f : imu_files) {
      auto r = data::read_imu_file(f, f.stem().string());
      for (const auto& issue : r.issues) {
        ctx.note(f.string() + ":" + std::to_string(issue.line) + ": skipped record: " + issue.message);
      }
      streams.push_back(std::move(r.stream));
    }
    const auto ae_ckpt = load_checkpoint(models / "imu_autoencoder.ckpt");
    const auto fc_ckpt = load_checkpoint(models / "imu_forecaster.ckpt");
    const auto ae = restore_as<imu::LstmAutoencoder>(ae_ckpt);
    const auto fc = restore_as<imu::LstmForecaster>(fc_ckpt);
    for (const auto& s : streams) append(infer_imu(s, ae, ae_ckpt.scaler.value(), th));
    for (const auto& s : streams) append(infer_imu(s, fc, fc_ckpt.scaler.value(), th));
  }
  if (!frame_dirs.empty()) {
    const auto m = restore_as<vision::CnnLstmForecaster>(load_checkpoint(models / "vision_forecaster.ckpt"));
    for (const auto& d : frame_dirs) {
      append(infer_vision(data::read_frame_dir(d, d.filename().string(), ctx.settings.frame_size), m, th));
    }
  }
  auto os = open_out(out / "events.jsonl");
  for (const auto& e : events) write_event_jsonl(os, e);
  ctx.note("infer: " + std::to_string(events.size()) + " events");
  return events;
}

std::map<std::string, LabelTrack> corpus_labels(const data::Corpus& c) {
  std::map<std::string, LabelTrack> out;
  for (const auto* set : {&c.imu_normal, &c.imu_abnormal})
    for (const auto& s : *set) {
      auto lab = s.label;
      if (lab.empty()) lab.assign(s.size(), 0);
      out[label_key(Source::imu_autoencoder, s.id)] = {s.t, lab};
    }
  for (const auto* set : {&c.frames_normal, &c.frames_abnormal})
    for (const auto& s : *set) {
      out[label_key(Source::vision, s.id)] = {s.t, s.label};
      const auto m = data::mirror(s);
      out[label_key(Source::vision, m.id)] = {m.t, m.label};
    }
  return out;
}

EvalReport run_eval(const Context& ctx, const fs::path& corpus_dir, const fs::path& events_path, const fs::path& out) {
  fs::create_directories(out);
  const auto corpus = data::read_corpus(corpus_dir, ctx.settings.frame_size);
  auto is = open_in(events_path);
  const auto report = evaluate(read_events_jsonl(is), corpus_labels(corpus));
  auto os = open_out(out / "eval_report.csv");
  write_report_csv(os, report);
  for (const auto& d : report.detectors) {
    ctx.note("eval " + d.detector + ": macro F1 " + (d.macro.f1 ? fixed(*d.macro.f1, 4) : "-") + " recall " +
             (d.macro.recall ? fixed(*d.macro.recall, 4) : "-") + " over " + std::to_string(d.abnormal_scenarios) +
             " abnormal scenarios");
  }
  return report;
}

std::string run_report(const Context& ctx, const fs::path& dir) {
  std::ostringstream table;
  {
    auto is = open_in(dir / "eval_report.csv");
    const auto report = read_report_csv(is);
    write_report_table(table, report);
    auto csv = open_out(dir / "report.csv");
    write_report_csv(csv, report);
  }
  if (fs::exists(dir / "calibration.txt")) {
    const auto cal = load_calibration(dir / "calibration.txt");
    table << "thresholds (p = " << cal.thresholds.p << ")\n";
    std::map<std::string, std::vector<double>> errors;
    if (fs::exists(dir / "calibration_errors.csv")) {
      auto is = open_in(dir / "calibration_errors.csv");
      std::string line;
      std::getline(is, line);
      while (std::getline(is, line)) {
        const auto comma = line.find(',');
        if (comma != std::string::npos) errors[line.substr(0, comma)].push_back(std::stod(line.substr(comma + 1)));
      }
    }
    for (const auto& c : cal.streams) {
      const std::string name(stats::stream_name(c.stream));
      table << "  " << std::left << std::setw(16) << name << std::right << std::setw(26)
            << stats::family_name(stats::family_of(c.model.dist)) << "  threshold " << fixed(c.threshold)
            << "  KS " << fixed(c.model.ks, 4) << "  flagged " << fixed(c.flagged_fraction, 4) << '\n';
      if (errors.count(name)) {
        auto os = open_out(dir / ("histogram_" + name + ".csv"));
        stats::write_histogram_csv(os, errors[name], c.model.dist);
      }
    }
    table << '\n';
  }
  if (fs::exists(dir / "vision_summary.txt")) {
    const auto kv = read_key_values(dir / "vision_summary.txt");
    auto get = [&](const std::string& k) { return kv.count(k) ? kv.at(k) : std::string(); };
    table << "vision fine-tuning: " << get("cgan_note") << '\n';
    const auto e0 = get("normal_error_prediction_only"), e1 = get("normal_error_final");
    if (!e0.empty() && !e1.empty()) {
      const double a = std::stod(e0), b = std::stod(e1);
      table << "  held-out normal error  prediction only " << fixed(a) << "  after " << fixed(b) << "  ("
            << (b >= a ? "+" : "") << fixed(100.0 * (b / a - 1.0), 3) << "%)\n";
    }
    const auto r0 = get("recall_prediction_only"), r1 = get("recall_final");
    if (!r0.empty() && !r1.empty()) {
      const double a = std::stod(r0), b = std::stod(r1);
      table << "  recall  prediction only " << fixed(a, 4) << "  combined loss " << fixed(b, 4) << "  ("
            << (b > a ? "higher" : b < a ? "lower" : "unchanged") << " with the adversarial term)\n";
    }
  }
  const std::string text = table.str();
  auto os = open_out(dir / "report.txt");
  os << text;
  ctx.note("report written to " + (dir / "report.txt").string());
  return text;
}

}  // namespace adrf::pipeline
