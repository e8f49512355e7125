#include "adrf/pipeline/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <ostream>
#include <sstream>

namespace adrf::pipeline {

namespace {

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

Scale parse_scale(std::string_view s) {
  if (s == "desk") return Scale::desk;
  if (s == "paper") return Scale::paper;
  throw ConfigError("unknown scale '" + std::string(s) + "' (desk or paper)");
}

std::string_view scale_name(Scale s) { return s == Scale::desk ? "desk" : "paper"; }

Config Config::defaults(Scale scale) {
  const bool desk = scale == Scale::desk;
  const auto arch = desk ? vision::desk_arch() : vision::paper_arch();
  Config c;
  c.values_ = {
      {"data.normal_count", "6"},
      {"data.abnormal_count", "6"},
      {"data.imu_length", "600"},
      {"data.imu_rate_hz", "20"},
      {"data.imu_anomaly_coverage", "0.5"},
      {"data.frame_size", std::to_string(arch.size)},
      {"data.frame_length", "60"},
      {"data.frame_anomaly_coverage", "0.6"},
      {"data.vision_threshold_count", "100"},
      {"data.vision_test_count", "100"},
      {"data.split_seed", "1"},
      {"imu.epochs", desk ? "10" : "500"},
      {"imu.learning_rate", "0.01"},
      {"imu.batch", "1"},
      {"imu.autoencoder_hidden1", "128"},
      {"imu.autoencoder_hidden2", "64"},
      {"imu.forecaster_hidden", "64"},
      {"vision.channels", join(arch.channels)},
      {"vision.strides", join(arch.strides)},
      {"vision.latent_channels", std::to_string(arch.latent_channels)},
      {"vision.pretrain_epochs", desk ? "15" : "100"},
      {"vision.forecaster_epochs", desk ? "15" : "100"},
      {"vision.cgan_epochs", "20"},
      {"vision.learning_rate", "0.001"},
      {"vision.cgan_learning_rate", "0.00001"},
      {"vision.cgan_beta1", "0.5"},
      {"vision.lambda_pred", "100"},
      {"vision.batch", "8"},
      {"vision.augment", "true"},
      {"vision.discriminator_hidden", "64"},
      {"calibration.p", "0.95"},
      {"calibration.families", "normal,gamma,birnbaum_saunders,johnson_su,normal_inverse_gaussian"},
      {"calibration.parsimony", "0.25"},
  };
  return c;
}

void Config::merge_ini(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config " + path.string() + ": key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      if (!values_.count(full)) throw ConfigError("config " + path.string() + ": unknown key '" + full + "'");
      values_[full] = value.get_value<std::string>();
    }
  }
}

void Config::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': not a number: " + v);
}

long Config::get_int(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const long n = std::stol(v, &used);
    if (used == v.size()) return n;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': not an integer: " + v);
}

std::size_t Config::get_size(const std::string& key) const {
  const long n = get_int(key);
  if (n < 0) throw ConfigError("config key '" + key + "' must be >= 0");
  return static_cast<std::size_t>(n);
}

bool Config::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': not a boolean: " + v);
}

void Config::write_ini(std::ostream& os) const {
  std::string section;
  for (const auto& [full, value] : values_) {
    const auto dot = full.find('.');
    const auto s = full.substr(0, dot);
    if (s != section) {
      os << (section.empty() ? "" : "\n") << '[' << s << "]\n";
      section = s;
    }
    os << full.substr(dot + 1) << " = " << value << '\n';
  }
}

Settings settings_from(const Config& c) {
  Settings s;
  s.normal_count = c.get_size("data.normal_count");
  s.abnormal_count = c.get_size("data.abnormal_count");
  s.imu_length = c.get_size("data.imu_length");
  s.imu_rate_hz = c.get_double("data.imu_rate_hz");
  s.imu_anomaly_coverage = c.get_double("data.imu_anomaly_coverage");
  s.frame_size = c.get_size("data.frame_size");
  s.frame_length = c.get_size("data.frame_length");
  s.frame_anomaly_coverage = c.get_double("data.frame_anomaly_coverage");
  s.vision_threshold_count = c.get_size("data.vision_threshold_count");
  s.vision_test_count = c.get_size("data.vision_test_count");
  s.split_seed = c.get_size("data.split_seed");

  s.imu_epochs = static_cast<int>(c.get_int("imu.epochs"));
  s.imu_learning_rate = c.get_double("imu.learning_rate");
  s.imu_batch = c.get_size("imu.batch");
  s.ae_hidden1 = c.get_size("imu.autoencoder_hidden1");
  s.ae_hidden2 = c.get_size("imu.autoencoder_hidden2");
  s.fc_hidden = c.get_size("imu.forecaster_hidden");

  s.arch.size = s.frame_size;
  for (const auto& v : split(c.get("vision.channels"))) s.arch.channels.push_back(std::stoul(v));
  for (const auto& v : split(c.get("vision.strides"))) s.arch.strides.push_back(std::stoul(v));
  s.arch.latent_channels = c.get_size("vision.latent_channels");
  s.pretrain_epochs = static_cast<int>(c.get_int("vision.pretrain_epochs"));
  s.forecaster_epochs = static_cast<int>(c.get_int("vision.forecaster_epochs"));
  s.cgan_epochs = static_cast<int>(c.get_int("vision.cgan_epochs"));
  s.vision_learning_rate = c.get_double("vision.learning_rate");
  s.cgan_learning_rate = c.get_double("vision.cgan_learning_rate");
  s.cgan_beta1 = c.get_double("vision.cgan_beta1");
  s.lambda_pred = c.get_double("vision.lambda_pred");
  s.vision_batch = c.get_size("vision.batch");
  s.augment = c.get_bool("vision.augment");
  s.discriminator_hidden = c.get_size("vision.discriminator_hidden");

  s.p = c.get_double("calibration.p");
  try {
    for (const auto& f : split(c.get("calibration.families"))) s.families.push_back(stats::parse_family(f));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config key 'calibration.families': ") + e.what());
  }
  s.parsimony = c.get_double("calibration.parsimony");
  vision::codec_specs(s.arch);
  return s;
}

}  // namespace adrf::pipeline
