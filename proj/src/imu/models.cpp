#include "adrf/imu/models.hpp"

#include "adrf/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace adrf::imu {

namespace {

void require_initialized(bool ok, const char* what) {
  if (!ok) throw ContractViolation(std::string(what) + ": model parameters are not initialized");
}

void check_window(const nn::Sequence& x) {
  if (x.size() != 3) throw ContractViolation("imu model: expected 3 steps, got " + std::to_string(x.size()));
  for (const auto& s : x) {
    if (s.rank() != 2 || s.dim(1) != kImuDims) {
      throw ContractViolation("imu model: each step must be [batch,6], got " + shape_string(s.shape()));
    }
  }
}

Tensor target_batch(const std::vector<const ImuWindow*>& windows) {
  std::vector<double> v;
  v.reserve(windows.size() * kImuDims);
  for (const auto* w : windows) {
    if (!w->target) throw ContractViolation("forecaster: window has no target");
    v.insert(v.end(), w->target->begin(), w->target->end());
  }
  return Tensor({windows.size(), kImuDims}, std::move(v));
}

template <typename StepLoss>
TrainReport train_loop(const std::vector<Tensor>& params, const std::vector<ImuWindow>& windows,
                       const TrainConfig& cfg, StepLoss step_loss) {
  if (windows.empty()) throw ContractViolation("train: empty window set");
  if (cfg.epochs < 0 || cfg.batch == 0 || !(cfg.learning_rate > 0.0)) {
    throw ContractViolation("train: epochs >= 0, batch >= 1 and learning rate > 0 required");
  }
  AdamConfig ac;
  ac.learning_rate = cfg.learning_rate;
  ac.schedule = cfg.schedule;
  Adam opt(params, ac);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  TrainReport report;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.set_epoch(epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t k = 0; k < order.size(); k += cfg.batch) {
      std::vector<const ImuWindow*> batch;
      for (std::size_t j = k; j < std::min(order.size(), k + cfg.batch); ++j) batch.push_back(&windows[order[j]]);
      Tape tape;
      Tensor loss = step_loss(batch);
      tape.backward(loss);
      opt.step();
      total += loss.item() * static_cast<double>(batch.size());
    }
    const double mean = total / static_cast<double>(windows.size());
    if (!std::isfinite(mean)) throw NumericError("train: loss diverged at epoch " + std::to_string(epoch));
    report.epoch_loss.push_back(mean);
    if (cfg.on_epoch) cfg.on_epoch(epoch, mean);
  }
  return report;
}

}  // namespace

LstmAutoencoder LstmAutoencoder::init(std::uint64_t seed, std::size_t hidden1, std::size_t hidden2) {
  nn::Rng rng(seed);
  LstmAutoencoder m;
  m.enc1 = nn::LstmCellParams::init(kImuDims, hidden1, rng);
  m.enc2 = nn::LstmCellParams::init(hidden1, hidden2, rng);
  m.dec1 = nn::LstmCellParams::init(hidden2, hidden2, rng);
  m.dec2 = nn::LstmCellParams::init(hidden2, hidden1, rng);
  m.head = nn::Dense::init(hidden1, kImuDims, nn::Activation::none, rng);
  return m;
}

bool LstmAutoencoder::initialized() const {
  return enc1.W.defined() && enc2.W.defined() && dec1.W.defined() && dec2.W.defined() && head.weight.defined();
}

Tensor LstmAutoencoder::encode(const nn::Sequence& x) const {
  require_initialized(initialized(), "autoencoder");
  check_window(x);
  const auto h1 = nn::lstm_layer(enc1, x, nn::LstmMode::return_all);
  return nn::lstm_layer(enc2, h1.outputs, nn::LstmMode::return_last).outputs.front();
}

nn::Sequence LstmAutoencoder::forward(const nn::Sequence& x) const {
  const Tensor z = encode(x);
  const auto d1 = nn::lstm_layer(dec1, nn::repeat_vector(z, x.size()), nn::LstmMode::return_all);
  const auto d2 = nn::lstm_layer(dec2, d1.outputs, nn::LstmMode::return_all);
  return nn::time_distributed(head, d2.outputs);
}

nn::ParameterRegistry LstmAutoencoder::parameters() const {
  nn::ParameterRegistry r;
  r.append("encoder1.", enc1.parameters());
  r.append("encoder2.", enc2.parameters());
  r.append("decoder1.", dec1.parameters());
  r.append("decoder2.", dec2.parameters());
  r.append("output.", head.parameters());
  return r;
}

LstmForecaster LstmForecaster::init(std::uint64_t seed, std::size_t hidden) {
  nn::Rng rng(seed);
  LstmForecaster m;
  m.encoder = nn::LstmCellParams::init(kImuDims, hidden, rng);
  m.decoder = nn::LstmCellParams::init(kImuDims, hidden, rng);
  m.head = nn::Dense::init(hidden, kImuDims, nn::Activation::none, rng);
  return m;
}

bool LstmForecaster::initialized() const {
  return encoder.W.defined() && decoder.W.defined() && head.weight.defined();
}

Tensor LstmForecaster::forward(const nn::Sequence& x) const {
  require_initialized(initialized(), "forecaster");
  check_window(x);
  const auto enc = nn::lstm_layer(encoder, x, nn::LstmMode::return_last);
  const Tensor zero({x.front().dim(0), kImuDims}, 0.0);
  const auto dec = nn::lstm_cell_step(decoder, zero, enc.final_state);
  return head(dec.h);
}

nn::ParameterRegistry LstmForecaster::parameters() const {
  nn::ParameterRegistry r;
  r.append("encoder.", encoder.parameters());
  r.append("decoder.", decoder.parameters());
  r.append("output.", head.parameters());
  return r;
}

ImuError split_error(const ImuVector& e, double t_flag, std::size_t index) {
  ImuError out;
  out.e = e;
  out.e_a = (e[0] + e[1] + e[2]) / 3.0;
  out.e_l = (e[3] + e[4] + e[5]) / 3.0;
  out.t_flag = t_flag;
  out.index = index;
  return out;
}

nn::Sequence window_batch(const std::vector<const ImuWindow*>& windows) {
  if (windows.empty()) throw ContractViolation("window_batch: no windows");
  nn::Sequence steps;
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> v;
    v.reserve(windows.size() * kImuDims);
    for (const auto* w : windows) v.insert(v.end(), w->x[k].begin(), w->x[k].end());
    steps.emplace_back(Shape{windows.size(), kImuDims}, std::move(v));
  }
  return steps;
}

std::vector<ImuError> reconstruct_errors(const LstmAutoencoder& model, const std::vector<ImuWindow>& windows) {
  require_initialized(model.initialized(), "reconstruct_error");
  std::vector<ImuError> out;
  if (windows.empty()) return out;
  NoGradGuard guard;
  std::vector<const ImuWindow*> ptrs;
  for (const auto& w : windows) ptrs.push_back(&w);
  const auto y = model.forward(window_batch(ptrs));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    ImuVector e{};
    for (std::size_t k = 0; k < 3; ++k) {
      const auto yk = y[k].data();
      for (std::size_t d = 0; d < kImuDims; ++d) {
        const double diff = yk[i * kImuDims + d] - windows[i].x[k][d];
        e[d] += diff * diff / 3.0;
      }
    }
    out.push_back(split_error(e, windows[i].t[2], windows[i].flag_index));
  }
  return out;
}

std::vector<ImuError> forecast_errors(const LstmForecaster& model, const std::vector<ImuWindow>& windows) {
  require_initialized(model.initialized(), "forecast_error");
  std::vector<ImuError> out;
  if (windows.empty()) return out;
  NoGradGuard guard;
  std::vector<const ImuWindow*> ptrs;
  for (const auto& w : windows) {
    if (!w.target) throw ContractViolation("forecast_error: window has no target");
    ptrs.push_back(&w);
  }
  const Tensor pred = model.forward(window_batch(ptrs));
  const auto y = pred.data();
  for (std::size_t i = 0; i < windows.size(); ++i) {
    ImuVector e{};
    for (std::size_t d = 0; d < kImuDims; ++d) {
      const double diff = y[i * kImuDims + d] - (*windows[i].target)[d];
      e[d] = diff * diff;
    }
    out.push_back(split_error(e, windows[i].target_t, windows[i].flag_index));
  }
  return out;
}

ImuError reconstruct_error(const LstmAutoencoder& model, const ImuWindow& w) {
  return reconstruct_errors(model, {w}).front();
}

ImuError forecast_error(const LstmForecaster& model, const ImuWindow& w) {
  return forecast_errors(model, {w}).front();
}

TrainReport train_autoencoder(LstmAutoencoder& model, const std::vector<ImuWindow>& windows, const TrainConfig& cfg) {
  require_initialized(model.initialized(), "train_autoencoder");
  return train_loop(model.parameters().tensors(), windows, cfg, [&](const std::vector<const ImuWindow*>& batch) {
    const auto x = window_batch(batch);
    return mse_loss(concat(model.forward(x), 1), concat(x, 1));
  });
}

TrainReport train_forecaster(LstmForecaster& model, const std::vector<ImuWindow>& windows, const TrainConfig& cfg) {
  require_initialized(model.initialized(), "train_forecaster");
  for (const auto& w : windows) {
    if (!w.target) throw ContractViolation("train_forecaster: window has no target");
  }
  return train_loop(model.parameters().tensors(), windows, cfg, [&](const std::vector<const ImuWindow*>& batch) {
    return mse_loss(model.forward(window_batch(batch)), target_batch(batch));
  });
}

}  // namespace adrf::imu
