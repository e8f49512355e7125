#pragma once

#include "adrf/data/imu.hpp"
#include "adrf/imu/models.hpp"
#include "adrf/nn/registry.hpp"
#include "adrf/vision/models.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace adrf::pipeline {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class ModelKind : std::uint32_t { imu_autoencoder = 1, imu_forecaster = 2, vision_forecaster = 3 };

std::string_view kind_name(ModelKind k);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class BadMagic : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class VersionMismatch : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class TruncatedCheckpoint : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

struct StoredTensor {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

/// Layout, all integers little-endian: "ADRF", u32 version, u32 kind,
/// u32 config count then (u32 length, bytes) key/value pairs, u8 scaler flag
/// then 12 f64 (min, max), u32 tensor count then per tensor u32 name length,
/// name, u32 rank, u64 dims, f64 values.
struct Checkpoint {
  ModelKind kind = ModelKind::imu_autoencoder;
  std::map<std::string, std::string> config;
  std::optional<data::ScalerParams> scaler;
  std::vector<StoredTensor> tensors;
};

std::string encode_checkpoint(const Checkpoint& c);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Architecture keys go into the config echo; `config` adds to it.
Checkpoint make_checkpoint(const imu::LstmAutoencoder& m, const std::optional<data::ScalerParams>& scaler = {},
                           const std::map<std::string, std::string>& config = {});
Checkpoint make_checkpoint(const imu::LstmForecaster& m, const std::optional<data::ScalerParams>& scaler = {},
                           const std::map<std::string, std::string>& config = {});
Checkpoint make_checkpoint(const vision::CnnLstmForecaster& m, const std::map<std::string, std::string>& config = {});

using AnyModel = std::variant<imu::LstmAutoencoder, imu::LstmForecaster, vision::CnnLstmForecaster>;

/// Builds the model named by the kind tag and fills in every parameter.
AnyModel restore_model(const Checkpoint& c);

template <class Model>
Model restore_as(const Checkpoint& c) {
  auto m = restore_model(c);
  if (auto* p = std::get_if<Model>(&m)) return std::move(*p);
  throw CheckpointError("checkpoint holds a " + std::string(kind_name(c.kind)) + " model, not the requested kind");
}

}  // namespace adrf::pipeline
