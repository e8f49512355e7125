#pragma once

#include "adrf/data/imu.hpp"
#include "adrf/nn/layers.hpp"
#include "adrf/optim.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

namespace adrf::imu {

using data::ImuVector;
using data::ImuWindow;
using data::kImuDims;

/// Encoder LSTM 6→h1 (all steps) → h2 (last step), repeated three times,
/// decoder LSTM h2→h2 → h1 (all steps), time-distributed dense h1→6.
struct LstmAutoencoder {
  nn::LstmCellParams enc1, enc2, dec1, dec2;
  nn::Dense head;

  static LstmAutoencoder init(std::uint64_t seed, std::size_t hidden1 = 128, std::size_t hidden2 = 64);

  bool initialized() const;
  /// Bottleneck [batch, h2] for inputs of three [batch, 6] steps.
  Tensor encode(const nn::Sequence& x) const;
  nn::Sequence forward(const nn::Sequence& x) const;
  nn::ParameterRegistry parameters() const;
};

/// Encoder LSTM 6→H over the window; one decoder cell started from the
/// encoder's final state and fed zeros; dense H→6.
struct LstmForecaster {
  nn::LstmCellParams encoder, decoder;
  nn::Dense head;

  static LstmForecaster init(std::uint64_t seed, std::size_t hidden = 64);

  bool initialized() const;
  Tensor forward(const nn::Sequence& x) const;
  nn::ParameterRegistry parameters() const;
};

struct ImuError {
  ImuVector e{};
  double e_a = 0.0;
  double e_l = 0.0;
  double t_flag = 0.0;
  std::size_t index = 0;
};

/// e_a and e_l are the means over the angular and linear halves.
ImuError split_error(const ImuVector& e, double t_flag, std::size_t index = 0);

/// Per-dimension squared error averaged over the three steps, attributed to
/// the window's last sample.
ImuError reconstruct_error(const LstmAutoencoder& model, const ImuWindow& w);
/// Per-dimension squared error of the predicted fourth sample.
ImuError forecast_error(const LstmForecaster& model, const ImuWindow& w);

std::vector<ImuError> reconstruct_errors(const LstmAutoencoder& model, const std::vector<ImuWindow>& windows);
std::vector<ImuError> forecast_errors(const LstmForecaster& model, const std::vector<ImuWindow>& windows);

struct TrainConfig {
  int epochs = 500;
  double learning_rate = 0.01;
  std::size_t batch = 1;
  std::uint64_t seed = 0;
  std::map<int, double> schedule;
  /// Called after every epoch with (epoch, mean loss).
  std::function<void(int, double)> on_epoch;
};

struct TrainReport {
  std::vector<double> epoch_loss;
};

/// Mean squared reconstruction loss; windows are reshuffled every epoch from
/// the seed. Throws on an empty window set and NumericError on divergence.
TrainReport train_autoencoder(LstmAutoencoder& model, const std::vector<ImuWindow>& windows, const TrainConfig& cfg);
/// Mean squared error of the predicted fourth sample; windows need targets.
TrainReport train_forecaster(LstmForecaster& model, const std::vector<ImuWindow>& windows, const TrainConfig& cfg);

/// Stacks windows into three [batch, 6] step tensors.
nn::Sequence window_batch(const std::vector<const ImuWindow*>& windows);

}  // namespace adrf::imu
