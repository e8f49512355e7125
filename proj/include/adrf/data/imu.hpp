#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace adrf::data {

inline constexpr std::size_t kImuDims = 6;

/// Angular velocity a_x, a_y, a_z (rad/s) then linear acceleration l_x, l_y, l_z (m/s²).
using ImuVector = std::array<double, kImuDims>;

inline constexpr std::array<const char*, kImuDims> kImuChannelNames{"a_x", "a_y", "a_z", "l_x", "l_y", "l_z"};

struct ImuStream {
  std::string id;
  std::vector<double> t;
  std::vector<ImuVector> x;
  /// Per-sample ground truth (1 = abnormal); empty when unknown.
  std::vector<std::uint8_t> label;

  std::size_t size() const { return x.size(); }
};

/// Throws ContractViolation on length mismatches, non-finite values or
/// timestamps that do not strictly increase.
void validate(const ImuStream& s);

// --- Scaling to [-1, 1] ------------------------------------------------------

struct ScalerParams {
  ImuVector min{};
  ImuVector max{};
};

/// Per-feature min/max over all samples. Throws on a constant feature.
ScalerParams fit_scaler(const std::vector<const ImuStream*>& train);
/// x' = 2 (x - min) / (max - min) - 1, not clamped.
ImuVector apply_scaler(const ScalerParams& p, const ImuVector& x);
ImuVector invert_scaler(const ScalerParams& p, const ImuVector& x);
ImuStream apply_scaler(const ScalerParams& p, const ImuStream& s);

// --- Windowing ---------------------------------------------------------------

enum class WindowMode { reconstruction, forecast };

struct ImuWindow {
  std::array<ImuVector, 3> x{};
  std::array<double, 3> t{};
  std::optional<ImuVector> target;
  double target_t = 0.0;
  /// Index in the stream of the sample the window's error is attributed to:
  /// the last input for reconstruction, the target for forecasting.
  std::size_t flag_index = 0;
};

/// Sliding windows of three samples (plus the fourth as target in forecast
/// mode): N-2 or N-3 windows on a gap-free stream. Windows spanning a gap
/// wider than `max_gap_factor` times the median period are dropped.
std::vector<ImuWindow> make_windows(const ImuStream& s, WindowMode mode, double max_gap_factor = 1.5);

std::size_t window_count(std::size_t samples, WindowMode mode);

// --- Ground truth ------------------------------------------------------------

struct Envelope {
  ImuVector min{};
  ImuVector max{};
};

Envelope fit_envelope(const std::vector<const ImuStream*>& reference);

/// Abnormal iff any channel leaves the envelope of the normal reference.
std::vector<std::uint8_t> label_ground_truth(const ImuStream& s, const std::vector<const ImuStream*>& reference);
std::vector<std::uint8_t> label_ground_truth(const ImuStream& s, const Envelope& e);

// --- Synthetic scenarios -----------------------------------------------------

/// Vehicle profile shared by every scenario of a corpus: per-channel
/// amplitude and base frequencies of the low-frequency motion.
struct ImuProfile {
  ImuVector amplitude{};
  std::array<std::vector<double>, kImuDims> freq_hz;
  std::array<std::vector<double>, kImuDims> weight;
};

ImuProfile make_imu_profile(std::uint64_t seed);

enum class ImuEventKind { spike, step, burst };

struct ImuAnomalySpec {
  /// Fraction of the stream covered by injected events.
  double coverage = 0.5;
  std::size_t min_event = 20;
  std::size_t max_event = 50;
  /// Magnitudes in units of the channel amplitude.
  double spike_magnitude = 10.0;
  double step_magnitude = 4.0;
  double burst_magnitude = 4.0;
};

struct ImuScenarioSpec {
  std::size_t length = 600;
  double rate_hz = 20.0;
  /// Noise sigma as a fraction of the channel amplitude.
  double noise = 0.05;
  bool abnormal = false;
  ImuAnomalySpec anomaly;
};

/// Throws ContractViolation on an invalid spec (length < 10, or any
/// anomaly magnitude not above the noise level).
ImuStream generate_imu_scenario(const std::string& id, const ImuProfile& profile, const ImuScenarioSpec& spec,
                                std::uint64_t seed);

}  // namespace adrf::data
