#include "adrf/pipeline/stages.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;
using namespace adrf::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised anomaly detection for IMU and camera streams"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, scale = "desk";
  std::uint64_t seed = 7;
  fs::path out = "out";
  bool quiet = false;
  app.add_option("--config", config_path, "INI file overriding the scale defaults")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Seed for data generation and training");
  app.add_option("--out", out, "Output directory");
  app.add_option("--scale", scale, "Preset: desk (32x32 frames) or paper (128x128)")
      ->check(CLI::IsMember({"desk", "paper"}));
  app.add_flag("-q,--quiet", quiet, "Only print errors");

  fs::path corpus = "corpus", models, calibration, events;
  std::vector<fs::path> imu_files, frame_dirs;
  auto* datagen = app.add_subcommand("datagen", "Write a synthetic corpus to --out");
  auto* train_imu = app.add_subcommand("train-imu", "Train the IMU autoencoder and forecaster");
  auto* train_vision = app.add_subcommand("train-vision", "Train the frame forecaster, then fine-tune it adversarially");
  auto* calibrate = app.add_subcommand("calibrate", "Fit error distributions and write thresholds");
  auto* infer = app.add_subcommand("infer", "Flag the test streams");
  auto* eval = app.add_subcommand("eval", "Score flag events against the corpus labels");
  auto* report = app.add_subcommand("report", "Render the evaluation table, CSV and histograms in --out");
  auto* print_config = app.add_subcommand("print-config", "Print the effective configuration");
  for (auto* sc : {train_imu, train_vision, calibrate, infer, eval})
    sc->add_option("--corpus", corpus, "Corpus directory")->check(CLI::ExistingDirectory);
  for (auto* sc : {calibrate, infer})
    sc->add_option("--models", models, "Directory with checkpoints (default: --out)")->check(CLI::ExistingDirectory);
  infer->add_option("--calibration", calibration, "Threshold file (default: <models>/calibration.txt)")
      ->check(CLI::ExistingFile);
  infer->add_option("--imu", imu_files, "IMU stream files (.csv/.jsonl) to flag instead of the corpus test split")
      ->check(CLI::ExistingFile);
  infer->add_option("--frames", frame_dirs, "Frame directories to flag instead of the corpus test split")
      ->check(CLI::ExistingDirectory);
  eval->add_option("--events", events, "Events JSONL (default: <out>/events.jsonl)")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    auto ctx = Context::make(parse_scale(scale), seed,
                             config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path));
    if (!quiet) ctx.log = [](std::string_view m) { std::clog << m << '\n'; };
    if (models.empty()) models = out;
    if (calibration.empty()) calibration = models / "calibration.txt";
    if (events.empty()) events = out / "events.jsonl";

    if (*datagen) {
      run_datagen(ctx, out);
    } else if (*train_imu) {
      run_train_imu(ctx, corpus, out);
    } else if (*train_vision) {
      run_train_vision(ctx, corpus, out);
    } else if (*calibrate) {
      run_calibrate(ctx, corpus, models, out);
    } else if (*infer) {
      if (imu_files.empty() && frame_dirs.empty()) {
        run_infer(ctx, corpus, models, calibration, out);
      } else {
        run_infer_files(ctx, models, calibration, imu_files, frame_dirs, out);
      }
    } else if (*eval) {
      run_eval(ctx, corpus, events, out);
    } else if (*report) {
      std::cout << run_report(ctx, out);
    } else if (*print_config) {
      ctx.config.write_ini(std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
