#include "adrf/vision/models.hpp"

#include "adrf/ops.hpp"

namespace adrf::vision {

std::size_t CodecArch::latent_side() const {
  std::size_t side = size;
  for (std::size_t s : strides) side = conv_output_size(side, 3, s, 1);
  return side;
}

CodecArch desk_arch() {
  return {32, {8, 8, 16, 16, 32, 32, 32}, {2, 1, 2, 1, 2, 1, 1}, 32};
}

CodecArch paper_arch() {
  return {128, {8, 16, 16, 32, 32, 64, 64, 64, 64}, {2, 2, 2, 2, 2, 1, 1, 1, 1}, 64};
}

std::vector<nn::LayerSpec> codec_specs(const CodecArch& arch) {
  if (arch.channels.size() != arch.strides.size() || arch.channels.empty()) {
    throw ContractViolation("codec: channels and strides must be non-empty and of equal length");
  }
  std::vector<nn::LayerSpec> specs;
  Shape shape{1, arch.size, arch.size};
  auto conv = [&](std::size_t out, std::size_t stride, nn::Activation act, const std::string& name) {
    nn::LayerSpec s;
    s.kind = nn::LayerKind::conv2d;
    s.input = shape;
    s.kernel = 3;
    s.stride = stride;
    s.padding = 1;
    s.activation = act;
    s.name = name;
    s.output = {out, 0, 0};
    s.output = nn::infer_output(s);
    shape = s.output;
    specs.push_back(s);
  };
  for (std::size_t i = 0; i < arch.channels.size(); ++i) {
    conv(arch.channels[i], arch.strides[i], nn::Activation::leaky_relu, "encoder." + std::to_string(i));
  }
  conv(arch.latent_channels, 1, nn::Activation::tanh, "encoder.latent");
  if (shape[1] != 4 || shape[2] != 4) {
    throw ContractViolation("codec: latent must be 4x4, got " + shape_string(shape));
  }
  for (std::size_t k = 0; k < arch.channels.size(); ++k) {
    const std::size_t i = arch.channels.size() - 1 - k;
    if (arch.strides[i] > 1) {
      nn::LayerSpec up;
      up.kind = nn::LayerKind::upsample;
      up.input = shape;
      up.factor = arch.strides[i];
      up.name = "decoder.up" + std::to_string(k);
      up.output = nn::infer_output(up);
      shape = up.output;
      specs.push_back(up);
    }
    conv(arch.channels[i], 1, nn::Activation::leaky_relu, "decoder." + std::to_string(k));
  }
  conv(1, 1, nn::Activation::tanh, "decoder.image");
  nn::validate_chain(specs);
  if (shape != Shape{1, arch.size, arch.size}) {
    throw ContractViolation("codec: decoder output " + shape_string(shape) + " does not match the input");
  }
  return specs;
}

namespace {

std::vector<nn::Conv2dLayer> make_encoder(const CodecArch& arch, nn::Rng& rng) {
  std::vector<nn::Conv2dLayer> layers;
  std::size_t in = 1;
  for (std::size_t i = 0; i < arch.channels.size(); ++i) {
    layers.push_back(nn::Conv2dLayer::init(in, arch.channels[i], 3, arch.strides[i], 1, nn::Activation::leaky_relu, rng));
    in = arch.channels[i];
  }
  layers.push_back(nn::Conv2dLayer::init(in, arch.latent_channels, 3, 1, 1, nn::Activation::tanh, rng));
  return layers;
}

Tensor run_encoder(const std::vector<nn::Conv2dLayer>& layers, const Tensor& x, std::size_t size) {
  if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != size || x.dim(3) != size) {
    throw ContractViolation("encoder: expected [N,1," + std::to_string(size) + "," + std::to_string(size) + "], got " +
                            shape_string(x.shape()));
  }
  Tensor h = x;
  for (const auto& l : layers) h = l(h);
  return h;
}

void add_layers(nn::ParameterRegistry& r, const std::string& prefix, const std::vector<nn::Conv2dLayer>& layers) {
  for (std::size_t i = 0; i < layers.size(); ++i) r.append(prefix + std::to_string(i) + ".", layers[i].parameters());
}

}  // namespace

ConvCodec ConvCodec::init(const CodecArch& arch, std::uint64_t seed) {
  codec_specs(arch);
  nn::Rng rng(seed);
  ConvCodec c;
  c.arch = arch;
  c.encoder = make_encoder(arch, rng);
  std::size_t in = arch.latent_channels;
  for (std::size_t k = 0; k < arch.channels.size(); ++k) {
    const std::size_t i = arch.channels.size() - 1 - k;
    c.upsample_before.push_back(arch.strides[i] > 1);
    c.decoder.push_back(nn::Conv2dLayer::init(in, arch.channels[i], 3, 1, 1, nn::Activation::leaky_relu, rng));
    in = arch.channels[i];
  }
  c.upsample_before.push_back(false);
  c.decoder.push_back(nn::Conv2dLayer::init(in, 1, 3, 1, 1, nn::Activation::tanh, rng));
  return c;
}

Tensor ConvCodec::encode(const Tensor& x) const {
  if (!initialized()) throw ContractViolation("codec: parameters are not initialized");
  return run_encoder(encoder, x, arch.size);
}

Tensor ConvCodec::decode(const Tensor& z) const {
  if (!initialized()) throw ContractViolation("codec: parameters are not initialized");
  const std::size_t side = arch.latent_side();
  if (z.rank() != 4 || z.dim(1) != arch.latent_channels || z.dim(2) != side || z.dim(3) != side) {
    throw ContractViolation("decoder: unexpected latent shape " + shape_string(z.shape()));
  }
  Tensor h = z;
  for (std::size_t k = 0; k < decoder.size(); ++k) {
    if (upsample_before[k]) {
      const std::size_t i = arch.channels.size() - 1 - k;
      h = upsample_nearest(h, arch.strides[i]);
    }
    h = decoder[k](h);
  }
  return h;
}

nn::ParameterRegistry ConvCodec::parameters() const {
  nn::ParameterRegistry r;
  add_layers(r, "encoder.", encoder);
  add_layers(r, "decoder.", decoder);
  return r;
}

CnnLstmForecaster CnnLstmForecaster::init(const CodecArch& arch, std::uint64_t seed) {
  CnnLstmForecaster m;
  m.codec = ConvCodec::init(arch, seed);
  nn::Rng rng(seed ^ 0x5A5A5A5AULL);
  m.lstm = nn::LstmCellParams::init(arch.latent_length(), arch.latent_length(), rng);
  return m;
}

Tensor CnnLstmForecaster::predict_latent(const std::array<Tensor, 3>& frames) const {
  nn::Sequence latents;
  for (const auto& f : frames) latents.push_back(flatten(codec.encode(f)));
  return nn::lstm_layer(lstm, latents, nn::LstmMode::return_last).outputs.front();
}

Tensor CnnLstmForecaster::forward(const std::array<Tensor, 3>& frames) const {
  const Tensor z = predict_latent(frames);
  const std::size_t side = codec.arch.latent_side();
  return codec.decode(reshape(z, {z.dim(0), codec.arch.latent_channels, side, side}));
}

nn::ParameterRegistry CnnLstmForecaster::parameters() const {
  nn::ParameterRegistry r;
  r.append("codec.", codec.parameters());
  r.append("lstm.", lstm.parameters());
  return r;
}

Discriminator Discriminator::init(const CodecArch& arch, std::uint64_t seed, std::size_t hidden) {
  codec_specs(arch);
  nn::Rng rng(seed);
  Discriminator d;
  d.encoder = make_encoder(arch, rng);
  d.latent_length = arch.latent_length();
  d.lstm = nn::LstmCellParams::init(d.latent_length, hidden, rng);
  d.head = nn::Dense::init(hidden, 1, nn::Activation::sigmoid, rng);
  return d;
}

Tensor Discriminator::forward(const std::array<Tensor, 4>& frames) const {
  if (encoder.empty()) throw ContractViolation("discriminator: parameters are not initialized");
  nn::Sequence latents;
  const std::size_t size = frames[0].rank() == 4 ? frames[0].dim(2) : 0;
  for (const auto& f : frames) latents.push_back(flatten(run_encoder(encoder, f, size)));
  const Tensor p = head(nn::lstm_layer(lstm, latents, nn::LstmMode::return_last).outputs.front());
  // Keep the probability away from exact 0 and 1 so the log-loss stays finite.
  constexpr double eps = 1e-12;
  return add(scale(p, 1.0 - 2.0 * eps), Tensor({1}, eps));
}

nn::ParameterRegistry Discriminator::parameters() const {
  nn::ParameterRegistry r;
  add_layers(r, "encoder.", encoder);
  r.append("lstm.", lstm.parameters());
  r.append("head.", head.parameters());
  return r;
}

Tensor frames_to_tensor(const std::vector<const Frame*>& frames) {
  if (frames.empty()) throw ContractViolation("frames_to_tensor: no frames");
  const std::size_t H = frames[0]->rows(), W = frames[0]->cols();
  std::vector<double> v;
  v.reserve(frames.size() * H * W);
  for (const Frame* f : frames) {
    if (static_cast<std::size_t>(f->rows()) != H || static_cast<std::size_t>(f->cols()) != W) {
      throw ContractViolation("frames_to_tensor: frames differ in size");
    }
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t c = 0; c < W; ++c) v.push_back((*f)(r, c));
  }
  return Tensor({frames.size(), 1, H, W}, std::move(v));
}

Frame tensor_to_frame(const Tensor& t, std::size_t index) {
  if (t.rank() != 4 || t.dim(1) != 1 || index >= t.dim(0)) {
    throw ContractViolation("tensor_to_frame: expected [N,1,H,W], got " + shape_string(t.shape()));
  }
  const std::size_t H = t.dim(2), W = t.dim(3);
  const double* p = t.data().data() + index * H * W;
  Frame f(H, W);
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c) f(r, c) = p[r * W + c];
  return f;
}

Prediction predict_frame(const CnnLstmForecaster& model, const std::array<const Frame*, 3>& frames) {
  const std::size_t size = model.codec.arch.size;
  for (const Frame* f : frames) {
    if (static_cast<std::size_t>(f->rows()) != size || static_cast<std::size_t>(f->cols()) != size) {
      throw ContractViolation("predict_frame: frames must be " + std::to_string(size) + "x" + std::to_string(size));
    }
  }
  NoGradGuard guard;
  std::array<Tensor, 3> x{frames_to_tensor({frames[0]}), frames_to_tensor({frames[1]}), frames_to_tensor({frames[2]})};
  const Tensor z = model.predict_latent(x);
  const std::size_t side = model.codec.arch.latent_side();
  const Tensor img = model.codec.decode(reshape(z, {1, model.codec.arch.latent_channels, side, side}));
  return {tensor_to_frame(img), std::vector<double>(z.data().begin(), z.data().end())};
}

double frame_error(const Frame& predicted, const Frame& actual) {
  if (predicted.rows() != actual.rows() || predicted.cols() != actual.cols() || predicted.size() == 0) {
    throw ContractViolation("frame_error: dimension mismatch");
  }
  return (predicted - actual).squaredNorm() / static_cast<double>(predicted.size());
}

std::vector<double> sequence_errors(const CnnLstmForecaster& model, const std::vector<data::FrameSequence>& seqs,
                                    std::size_t batch) {
  std::vector<double> out;
  NoGradGuard guard;
  for (std::size_t k = 0; k < seqs.size(); k += batch) {
    const std::size_t end = std::min(seqs.size(), k + batch);
    std::array<std::vector<const Frame*>, 4> cols;
    for (std::size_t i = k; i < end; ++i)
      for (std::size_t j = 0; j < 4; ++j) cols[j].push_back(seqs[i].frames[j].get());
    const Tensor pred = model.forward({frames_to_tensor(cols[0]), frames_to_tensor(cols[1]), frames_to_tensor(cols[2])});
    for (std::size_t i = k; i < end; ++i) out.push_back(frame_error(tensor_to_frame(pred, i - k), *seqs[i].frames[3]));
  }
  return out;
}

}  // namespace adrf::vision
