#pragma once

#include "adrf/nn/layers.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace adrf::nn {

enum class LayerKind { dense, time_distributed_dense, lstm, repeat_vector, conv2d, upsample, reshape };

/// Static description of one layer. Shapes exclude the batch axis:
/// dense [in], sequences [steps, features], images [channels, height, width].
struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  Shape input;
  Shape output;
  Activation activation = Activation::none;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 1;
  std::size_t factor = 2;  // upsample factor or repeat count
  LstmMode lstm_mode = LstmMode::return_all;
  std::string name;
};

/// Output shape implied by the spec's input and attributes.
Shape infer_output(const LayerSpec& spec);

/// Checks every spec against infer_output and that consecutive specs connect.
/// Throws ContractViolation naming the first offending layer.
void validate_chain(const std::vector<LayerSpec>& specs);

/// Fresh parameters for one layer, reproducible from the seed. Layers without
/// parameters return an empty registry.
ParameterRegistry init_params(const LayerSpec& spec, std::uint64_t seed);

}  // namespace adrf::nn
