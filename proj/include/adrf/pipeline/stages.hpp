#pragma once

#include "adrf/data/corpus.hpp"
#include "adrf/pipeline/checkpoint.hpp"
#include "adrf/pipeline/config.hpp"
#include "adrf/pipeline/evaluate.hpp"
#include "adrf/pipeline/thresholds.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string_view>

namespace adrf::pipeline {

namespace fs = std::filesystem;

struct Context {
  Config config = Config::defaults(Scale::desk);
  Settings settings = settings_from(config);
  std::uint64_t seed = 7;
  std::function<void(std::string_view)> log;

  static Context make(Scale scale, std::uint64_t seed, const std::optional<fs::path>& config_file = {});
  void note(std::string_view msg) const;
};

/// Independent sub-seed for a named purpose.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose);

data::CorpusSpec corpus_spec(const Settings& s);

/// Corpus layout of write_corpus plus config.ini.
void run_datagen(const Context& ctx, const fs::path& out);

/// imu_autoencoder.ckpt, imu_forecaster.ckpt (both carry the scaler) and
/// imu_training.csv.
void run_train_imu(const Context& ctx, const fs::path& corpus, const fs::path& out);

struct VisionSummary {
  double normal_error_prediction_only = 0.0;
  double normal_error_final = 0.0;
  std::optional<double> recall_prediction_only;
  std::optional<double> recall_final;
  bool cgan_completed = false;
  std::string cgan_note;
};

/// Codec pretraining, forecaster training with the codec frozen, then CGAN
/// fine-tuning. Writes vision_forecaster.ckpt (final), and with fine-tuning
/// vision_prediction_only.ckpt, vision_training.csv and vision_summary.txt.
/// A collapsed fine-tuning run keeps the prediction-only weights.
VisionSummary run_train_vision(const Context& ctx, const fs::path& corpus, const fs::path& out);

/// The frame split every vision stage uses.
data::FrameDatasetSplit vision_split(const Settings& s, const data::Corpus& c);

/// calibration.txt and calibration_errors.csv (stream,error). Streams whose
/// checkpoint is missing from `models` are skipped.
CalibrationFile run_calibrate(const Context& ctx, const fs::path& corpus, const fs::path& models, const fs::path& out);

/// events.jsonl: IMU test streams, then vision (held-out normal sequences and
/// every frame of the abnormal scenarios).
std::vector<FlagEvent> run_infer(const Context& ctx, const fs::path& corpus, const fs::path& models,
                                 const fs::path& calibration, const fs::path& out);

/// Inference on stream files instead of a corpus: IMU .csv/.jsonl files
/// (malformed records are logged with their line number and skipped) and
/// frame directories. Writes events.jsonl.
std::vector<FlagEvent> run_infer_files(const Context& ctx, const fs::path& models, const fs::path& calibration,
                                       const std::vector<fs::path>& imu_files, const std::vector<fs::path>& frame_dirs,
                                       const fs::path& out);

/// Ground truth for every IMU stream and frame scenario (with mirrors), keyed
/// by label_key.
std::map<std::string, LabelTrack> corpus_labels(const data::Corpus& c);

/// eval_report.csv
EvalReport run_eval(const Context& ctx, const fs::path& corpus, const fs::path& events, const fs::path& out);

/// report.txt and report.csv from eval_report.csv, histogram_<stream>.csv
/// from calibration.txt and calibration_errors.csv, and the fine-tuning note
/// from vision_summary.txt when present. All inputs are read from `dir`.
std::string run_report(const Context& ctx, const fs::path& dir);

}  // namespace adrf::pipeline
