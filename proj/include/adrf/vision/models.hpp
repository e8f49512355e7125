#pragma once

#include "adrf/data/frames.hpp"
#include "adrf/nn/layer_spec.hpp"
#include "adrf/nn/layers.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace adrf::vision {

using data::Frame;

/// Encoder hidden layers (3×3 kernels) with their output channels and
/// strides; one more tanh convolution produces the 4×4 latent.
struct CodecArch {
  std::size_t size = 32;
  std::vector<std::size_t> channels;
  std::vector<std::size_t> strides;
  std::size_t latent_channels = 32;

  std::size_t latent_side() const;
  std::size_t latent_length() const { return latent_side() * latent_side() * latent_channels; }
};

/// 32×32 → 4×4×32 with seven hidden layers, three of them strided.
CodecArch desk_arch();
/// 128×128 → 4×4×64 with nine hidden layers, five of them strided.
CodecArch paper_arch();

/// Layer specs of the encoder followed by the decoder; throws if the chain
/// does not connect.
std::vector<nn::LayerSpec> codec_specs(const CodecArch& arch);

/// Leaky-ReLU hidden layers and a tanh output layer on each side. The decoder
/// mirrors the encoder, replacing each strided layer by nearest-neighbour
/// upsampling followed by a stride-1 convolution.
struct ConvCodec {
  CodecArch arch;
  std::vector<nn::Conv2dLayer> encoder;
  std::vector<nn::Conv2dLayer> decoder;
  std::vector<bool> upsample_before;

  static ConvCodec init(const CodecArch& arch, std::uint64_t seed);

  bool initialized() const { return !encoder.empty(); }
  /// [N,1,H,W] → [N,C,4,4]
  Tensor encode(const Tensor& x) const;
  /// [N,C,4,4] → [N,1,H,W]
  Tensor decode(const Tensor& z) const;
  Tensor round_trip(const Tensor& x) const { return decode(encode(x)); }
  nn::ParameterRegistry parameters() const;
};

/// Shared codec around an LSTM over the three flattened latents whose final
/// hidden state is the predicted fourth latent.
struct CnnLstmForecaster {
  ConvCodec codec;
  nn::LstmCellParams lstm;

  static CnnLstmForecaster init(const CodecArch& arch, std::uint64_t seed);

  /// Three [N,1,H,W] frames → predicted latent [N, L].
  Tensor predict_latent(const std::array<Tensor, 3>& frames) const;
  Tensor forward(const std::array<Tensor, 3>& frames) const;
  nn::ParameterRegistry parameters() const;
};

/// Encoder with the codec encoder's architecture, an LSTM over the four
/// encoded frames and a sigmoid head.
struct Discriminator {
  std::vector<nn::Conv2dLayer> encoder;
  nn::LstmCellParams lstm;
  nn::Dense head;
  std::size_t latent_length = 0;

  static Discriminator init(const CodecArch& arch, std::uint64_t seed, std::size_t hidden = 64);

  /// Four [N,1,H,W] frames → probability [N,1], strictly inside (0, 1).
  Tensor forward(const std::array<Tensor, 4>& frames) const;
  nn::ParameterRegistry parameters() const;
};

/// Frames → [N,1,H,W]; all frames must share the arch size.
Tensor frames_to_tensor(const std::vector<const Frame*>& frames);
/// One image of an [N,1,H,W] tensor.
Frame tensor_to_frame(const Tensor& t, std::size_t index = 0);

struct Prediction {
  Frame frame;
  std::vector<double> latent;
};

Prediction predict_frame(const CnnLstmForecaster& model, const std::array<const Frame*, 3>& frames);

/// Mean squared pixel difference.
double frame_error(const Frame& predicted, const Frame& actual);

/// Prediction errors of every sequence, batched.
std::vector<double> sequence_errors(const CnnLstmForecaster& model, const std::vector<data::FrameSequence>& seqs,
                                    std::size_t batch = 32);

}  // namespace adrf::vision
