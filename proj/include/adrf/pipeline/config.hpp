#pragma once

#include "adrf/stats/calibration.hpp"
#include "adrf/vision/models.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace adrf::pipeline {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scale { desk, paper };

Scale parse_scale(std::string_view s);
std::string_view scale_name(Scale s);

/// Flat "section.key" → value map.
class Config {
 public:
  static Config defaults(Scale scale);

  /// Overrides from an INI file; any key not in the defaults is a ConfigError
  /// naming it.
  void merge_ini(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);

  /// Throws ConfigError naming the key when it is absent or empty.
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long get_int(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  void write_ini(std::ostream& os) const;

 private:
  std::map<std::string, std::string> values_;
};

struct Settings {
  Scale scale = Scale::desk;

  std::size_t normal_count = 6;
  std::size_t abnormal_count = 6;
  std::size_t imu_length = 600;
  double imu_rate_hz = 20.0;
  double imu_anomaly_coverage = 0.5;
  std::size_t frame_size = 32;
  std::size_t frame_length = 60;
  double frame_anomaly_coverage = 0.6;
  std::size_t vision_threshold_count = 100;
  std::size_t vision_test_count = 100;
  std::uint64_t split_seed = 1;

  int imu_epochs = 10;
  double imu_learning_rate = 0.01;
  std::size_t imu_batch = 1;
  std::size_t ae_hidden1 = 128;
  std::size_t ae_hidden2 = 64;
  std::size_t fc_hidden = 64;

  vision::CodecArch arch;
  int pretrain_epochs = 15;
  int forecaster_epochs = 15;
  int cgan_epochs = 20;
  double vision_learning_rate = 1e-3;
  double cgan_learning_rate = 1e-5;
  double cgan_beta1 = 0.5;
  double lambda_pred = 100.0;
  std::size_t vision_batch = 8;
  bool augment = true;
  std::size_t discriminator_hidden = 64;

  double p = 0.95;
  std::vector<stats::Family> families;
  double parsimony = stats::kDefaultParsimony;
};

Settings settings_from(const Config& c);

}  // namespace adrf::pipeline
