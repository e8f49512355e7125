#pragma once

#include "adrf/vision/models.hpp"

#include <functional>
#include <map>
#include <stdexcept>

namespace adrf::vision {

struct VisionTrainConfig {
  int epochs = 100;
  double learning_rate = 1e-3;
  /// Multiplier from the given epoch on.
  std::map<int, double> schedule{{50, 0.1}, {80, 0.01}};
  std::size_t batch = 8;
  std::uint64_t seed = 0;
  bool augment = true;
  data::AugmentSpec augmentation;
  std::function<void(int, double)> on_epoch;
};

struct VisionTrainReport {
  std::vector<double> epoch_loss;
  /// Loss of every optimizer step, in order.
  std::vector<double> step_loss;
};

/// Reconstruction (mse + mae) of individually augmented frames.
VisionTrainReport pretrain_codec(ConvCodec& codec, const std::vector<data::FramePtr>& frames, const VisionTrainConfig& cfg);

/// Distinct frames of the sequences, in first-seen order.
std::vector<data::FramePtr> unique_frames(const std::vector<data::FrameSequence>& seqs);

/// Next-frame (mse + mae) training. With `freeze_codec` only the LSTM
/// learns; the codec is checked bit-for-bit afterwards and a change is a
/// ContractViolation.
VisionTrainReport train_forecaster(CnnLstmForecaster& model, const std::vector<data::FrameSequence>& seqs,
                                   const VisionTrainConfig& cfg, bool freeze_codec = true);

class ModeCollapse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CganConfig {
  int epochs = 20;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  /// Weight of the prediction term relative to the adversarial term. Infinity
  /// removes the adversarial term.
  double lambda_pred = 100.0;
  std::size_t batch = 8;
  std::uint64_t seed = 0;
  double collapse_loss = 0.01;
  int collapse_epochs = 10;
  std::function<void(int, double, double)> on_epoch;
};

struct CganReport {
  std::vector<double> generator_loss;      // per epoch
  std::vector<double> discriminator_loss;  // per epoch
  std::vector<double> prediction_loss;     // per epoch
  std::vector<double> step_prediction_loss;
};

/// Alternating updates: the discriminator sees the first three frames with
/// either the codec round trip of the real fourth frame (label 1) or the
/// prediction (label 0); then the forecaster, with every weight free,
/// minimizes prediction + adversarial / lambda_pred. Throws ModeCollapse when
/// the discriminator loss stays below collapse_loss for collapse_epochs.
CganReport cgan_finetune(CnnLstmForecaster& model, Discriminator& disc, const std::vector<data::FrameSequence>& seqs,
                         const CganConfig& cfg);

/// The real branch of the discriminator: encode then decode with the
/// forecaster's current codec.
Tensor real_branch(const CnnLstmForecaster& model, const Tensor& real);

}  // namespace adrf::vision
