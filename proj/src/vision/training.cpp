#include "adrf/vision/training.hpp"

#include "adrf/loss.hpp"
#include "adrf/ops.hpp"
#include "adrf/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace adrf::vision {

namespace {

void check_config(int epochs, double lr, std::size_t batch) {
  if (epochs < 0 || !(lr > 0.0) || batch == 0) {
    throw ContractViolation("vision training: epochs >= 0, learning rate > 0 and batch >= 1 required");
  }
}

struct SequenceBatch {
  std::array<Tensor, 3> inputs;
  Tensor target;
};

SequenceBatch make_batch(const std::vector<data::FrameSequence>& seqs, const std::vector<std::size_t>& order,
                         std::size_t begin, std::size_t end) {
  std::array<std::vector<const Frame*>, 4> cols;
  for (std::size_t k = begin; k < end; ++k)
    for (std::size_t j = 0; j < 4; ++j) cols[j].push_back(seqs[order[k]].frames[j].get());
  return {{frames_to_tensor(cols[0]), frames_to_tensor(cols[1]), frames_to_tensor(cols[2])}, frames_to_tensor(cols[3])};
}

double finite_or_throw(double v, const char* what, int epoch) {
  if (!std::isfinite(v)) throw NumericError(std::string(what) + ": loss diverged at epoch " + std::to_string(epoch));
  return v;
}

}  // namespace

std::vector<data::FramePtr> unique_frames(const std::vector<data::FrameSequence>& seqs) {
  std::vector<data::FramePtr> out;
  std::set<const Frame*> seen;
  for (const auto& q : seqs)
    for (const auto& f : q.frames)
      if (seen.insert(f.get()).second) out.push_back(f);
  return out;
}

VisionTrainReport pretrain_codec(ConvCodec& codec, const std::vector<data::FramePtr>& frames, const VisionTrainConfig& cfg) {
  if (frames.empty()) throw ContractViolation("pretrain_codec: no frames");
  check_config(cfg.epochs, cfg.learning_rate, cfg.batch);
  AdamConfig ac;
  ac.learning_rate = cfg.learning_rate;
  ac.schedule = cfg.schedule;
  Adam opt(codec.parameters().tensors(), ac);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), 0);
  VisionTrainReport report;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.set_epoch(epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t k = 0; k < order.size(); k += cfg.batch) {
      std::vector<Frame> batch;
      for (std::size_t i = k; i < std::min(order.size(), k + cfg.batch); ++i) {
        const Frame& f = *frames[order[i]];
        batch.push_back(cfg.augment ? data::augment(f, data::draw_augment(cfg.augmentation, rng)) : f);
      }
      std::vector<const Frame*> ptrs;
      for (const auto& f : batch) ptrs.push_back(&f);
      const Tensor x = frames_to_tensor(ptrs);
      Tape tape;
      const Tensor loss = adrf::loss(LossKind::mse_mae, codec.round_trip(x), x);
      tape.backward(loss);
      opt.step();
      report.step_loss.push_back(loss.item());
      total += loss.item() * static_cast<double>(batch.size());
    }
    report.epoch_loss.push_back(finite_or_throw(total / static_cast<double>(frames.size()), "pretrain_codec", epoch));
    if (cfg.on_epoch) cfg.on_epoch(epoch, report.epoch_loss.back());
  }
  return report;
}

VisionTrainReport train_forecaster(CnnLstmForecaster& model, const std::vector<data::FrameSequence>& seqs,
                                   const VisionTrainConfig& cfg, bool freeze_codec) {
  if (seqs.empty()) throw ContractViolation("train_forecaster: no sequences");
  check_config(cfg.epochs, cfg.learning_rate, cfg.batch);
  auto codec_params = model.codec.parameters();
  const auto before = codec_params.snapshot();
  std::vector<Tensor> trainable = model.lstm.parameters().tensors();
  if (freeze_codec) {
    codec_params.set_trainable(false);
  } else {
    const auto c = codec_params.tensors();
    trainable.insert(trainable.begin(), c.begin(), c.end());
  }
  AdamConfig ac;
  ac.learning_rate = cfg.learning_rate;
  ac.schedule = cfg.schedule;
  Adam opt(trainable, ac);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(seqs.size());
  std::iota(order.begin(), order.end(), 0);
  VisionTrainReport report;
  try {
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      opt.set_epoch(epoch);
      std::shuffle(order.begin(), order.end(), rng);
      double total = 0.0;
      for (std::size_t k = 0; k < order.size(); k += cfg.batch) {
        const std::size_t end = std::min(order.size(), k + cfg.batch);
        const auto b = make_batch(seqs, order, k, end);
        Tape tape;
        const Tensor loss = adrf::loss(LossKind::mse_mae, model.forward(b.inputs), b.target);
        tape.backward(loss);
        opt.step();
        report.step_loss.push_back(loss.item());
        total += loss.item() * static_cast<double>(end - k);
      }
      report.epoch_loss.push_back(finite_or_throw(total / static_cast<double>(seqs.size()), "train_forecaster", epoch));
      if (cfg.on_epoch) cfg.on_epoch(epoch, report.epoch_loss.back());
    }
  } catch (...) {
    codec_params.set_trainable(true);
    throw;
  }
  codec_params.set_trainable(true);
  if (freeze_codec && codec_params.snapshot() != before) {
    throw ContractViolation("train_forecaster: codec weights changed while frozen");
  }
  return report;
}

Tensor real_branch(const CnnLstmForecaster& model, const Tensor& real) {
  NoGradGuard guard;
  return model.codec.round_trip(real);
}

CganReport cgan_finetune(CnnLstmForecaster& model, Discriminator& disc, const std::vector<data::FrameSequence>& seqs,
                         const CganConfig& cfg) {
  if (seqs.empty()) throw ContractViolation("cgan_finetune: no sequences");
  check_config(cfg.epochs, cfg.learning_rate, cfg.batch);
  if (!(cfg.lambda_pred > 0.0)) throw ContractViolation("cgan_finetune: lambda_pred must be > 0");
  const double adv_weight = std::isinf(cfg.lambda_pred) ? 0.0 : 1.0 / cfg.lambda_pred;

  auto gen_params = model.parameters();
  auto disc_params = disc.parameters();
  gen_params.set_trainable(true);
  AdamConfig ac;
  ac.learning_rate = cfg.learning_rate;
  ac.beta1 = cfg.beta1;
  Adam gen_opt(gen_params.tensors(), ac);
  Adam disc_opt(disc_params.tensors(), ac);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(seqs.size());
  std::iota(order.begin(), order.end(), 0);
  CganReport report;
  int low_streak = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double g_total = 0.0, d_total = 0.0, p_total = 0.0;
    for (std::size_t k = 0; k < order.size(); k += cfg.batch) {
      const std::size_t end = std::min(order.size(), k + cfg.batch);
      const std::size_t n = end - k;
      const auto b = make_batch(seqs, order, k, end);
      const Tensor ones({n, 1}, 1.0), zeros({n, 1}, 0.0);

      // The prediction is recorded once; the discriminator step sees a
      // detached copy on its own nested tape.
      Tape tape;
      const Tensor fake = model.forward(b.inputs);
      const Tensor real = real_branch(model, b.target);
      double d_loss_value;
      {
        disc_params.set_trainable(true);
        const auto values = fake.data();
        const Tensor fake_detached(fake.shape(), std::vector<double>(values.begin(), values.end()));
        Tape d_tape;
        const Tensor d_real = disc.forward({b.inputs[0], b.inputs[1], b.inputs[2], real});
        const Tensor d_fake = disc.forward({b.inputs[0], b.inputs[1], b.inputs[2], fake_detached});
        const Tensor d_loss = scale(add(bce_loss(d_real, ones), bce_loss(d_fake, zeros)), 0.5);
        d_tape.backward(d_loss);
        disc_opt.step();
        d_loss_value = d_loss.item();
      }

      // Forecaster step against the updated discriminator.
      disc_params.set_trainable(false);
      const Tensor pred_loss = adrf::loss(LossKind::mse_mae, fake, b.target);
      Tensor g_loss = pred_loss;
      if (adv_weight > 0.0) {
        const Tensor adv = bce_loss(disc.forward({b.inputs[0], b.inputs[1], b.inputs[2], fake}), ones);
        g_loss = add(pred_loss, scale(adv, adv_weight));
      }
      tape.backward(g_loss);
      gen_opt.step();
      report.step_prediction_loss.push_back(pred_loss.item());
      g_total += g_loss.item() * static_cast<double>(n);
      p_total += pred_loss.item() * static_cast<double>(n);
      d_total += d_loss_value * static_cast<double>(n);
    }
    disc_params.set_trainable(true);
    const double count = static_cast<double>(seqs.size());
    report.generator_loss.push_back(finite_or_throw(g_total / count, "cgan generator", epoch));
    report.discriminator_loss.push_back(finite_or_throw(d_total / count, "cgan discriminator", epoch));
    report.prediction_loss.push_back(p_total / count);
    if (cfg.on_epoch) cfg.on_epoch(epoch, report.generator_loss.back(), report.discriminator_loss.back());
    low_streak = report.discriminator_loss.back() < cfg.collapse_loss ? low_streak + 1 : 0;
    if (low_streak >= cfg.collapse_epochs) {
      throw ModeCollapse("cgan_finetune: discriminator loss below " + std::to_string(cfg.collapse_loss) + " for " +
                         std::to_string(low_streak) + " consecutive epochs (last " +
                         std::to_string(report.discriminator_loss.back()) + " at epoch " + std::to_string(epoch) +
                         "); the discriminator separates real from predicted frames perfectly");
    }
  }
  return report;
}

}  // namespace adrf::vision
