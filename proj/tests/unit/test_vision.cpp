#include "doctest.h"
#include "gradcheck.hpp"

#include "adrf/loss.hpp"
#include "adrf/ops.hpp"
#include "adrf/vision/models.hpp"
#include "adrf/vision/training.hpp"

#include <cmath>
#include <limits>

using namespace adrf;
using namespace adrf::vision;

namespace {

// 16×16 codec with two strided layers, small enough for exhaustive checks.
CodecArch tiny_arch() { return {16, {4, 4, 4}, {2, 2, 1}, 2}; }

data::FrameSequence constant_sequence(const Frame& f) {
  auto p = std::make_shared<const Frame>(f);
  data::FrameSequence q;
  q.frames = {p, p, p, p};
  return q;
}

}  // namespace

TEST_CASE("codec shape chains") {
  const auto paper = codec_specs(paper_arch());
  std::size_t strided = 0, hidden = 0;
  for (const auto& s : paper) {
    if (s.kind == nn::LayerKind::conv2d && s.name.rfind("encoder.", 0) == 0 && s.name != "encoder.latent") {
      ++hidden;
      strided += s.stride == 2;
    }
  }
  CHECK(hidden == 9);
  CHECK(strided == 5);
  const auto latent = std::find_if(paper.begin(), paper.end(), [](const auto& s) { return s.name == "encoder.latent"; });
  REQUIRE(latent != paper.end());
  CHECK(latent->output == Shape{64, 4, 4});
  CHECK(paper_arch().latent_length() == 1024);
  CHECK(paper.back().output == Shape{1, 128, 128});

  CHECK(desk_arch().latent_length() == 512);
  CHECK(codec_specs(desk_arch()).back().output == Shape{1, 32, 32});

  CodecArch bad = desk_arch();
  bad.strides = {1, 1, 1, 1, 1, 1, 1};
  CHECK_THROWS_AS(codec_specs(bad), ContractViolation);
}

TEST_CASE("codec round trip, forecaster and discriminator shapes") {
  const auto codec = ConvCodec::init(desk_arch(), 1);
  Tensor x({2, 1, 32, 32}, 0.1);
  NoGradGuard guard;
  CHECK(codec.encode(x).shape() == Shape{2, 32, 4, 4});
  const auto y = codec.round_trip(x);
  CHECK(y.shape() == x.shape());
  for (double v : y.data()) CHECK(std::abs(v) < 1.0);

  const auto fc = CnnLstmForecaster::init(desk_arch(), 2);
  CHECK(fc.lstm.hidden_size() == 512);
  CHECK(fc.forward({x, x, x}).shape() == x.shape());

  const auto d = Discriminator::init(desk_arch(), 3);
  const auto p = d.forward({x, x, x, x});
  CHECK(p.shape() == Shape{2, 1});
  for (double v : p.data()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }

  Frame f = Frame::Zero(16, 16);
  CHECK_THROWS_AS(predict_frame(fc, {&f, &f, &f}), ContractViolation);
}

TEST_CASE("all-zero forecaster predicts tanh of the output bias") {
  auto fc = CnnLstmForecaster::init(tiny_arch(), 4);
  for (Tensor t : fc.parameters().tensors())
    for (auto& v : t.mutable_data()) v = 0.0;
  auto b = fc.codec.decoder.back().bias.mutable_data();
  b[0] = 0.3;
  Frame z = Frame::Zero(16, 16);
  const auto pred = predict_frame(fc, {&z, &z, &z});
  CHECK(pred.frame.rows() == 16);
  CHECK((pred.frame.array() - std::tanh(0.3)).abs().maxCoeff() < 1e-15);
  CHECK(pred.latent.size() == tiny_arch().latent_length());
}

TEST_CASE("frame error") {
  Frame a = Frame::Constant(8, 8, -1.0), b = Frame::Constant(8, 8, 1.0);
  CHECK(frame_error(a, a) == 0.0);
  CHECK(frame_error(a, b) == doctest::Approx(4.0));
  CHECK_THROWS_AS(frame_error(a, Frame::Zero(4, 4)), ContractViolation);
}

TEST_CASE("vision models pass finite-difference gradient checks") {
  std::mt19937_64 rng(3);
  const CodecArch arch{8, {2, 2}, {2, 1}, 1};
  auto x = [&] { return testing::random_tensor({1, 1, 8, 8}, rng, -0.9, 0.9); };
  const Tensor f0 = x(), f1 = x(), f2 = x(), f3 = x();

  const auto fc = CnnLstmForecaster::init(arch, 5);
  const auto r1 = testing::grad_check(fc.parameters().tensors(), [&] {
    return adrf::loss(LossKind::mse, fc.forward({f0, f1, f2}), f3);
  });
  CHECK(r1.max_rel_error < 1e-4);

  const auto d = Discriminator::init(arch, 6, 3);
  const auto r2 = testing::grad_check(d.parameters().tensors(), [&] {
    return bce_loss(d.forward({f0, f1, f2, f3}), Tensor({1, 1}, 1.0));
  });
  CHECK(r2.max_rel_error < 1e-4);
}

TEST_CASE("frozen codec stays bit-identical during forecaster training") {
  auto fc = CnnLstmForecaster::init(tiny_arch(), 8);
  std::vector<data::FrameSequence> seqs;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int k = 0; k < 4; ++k) {
    Frame f(16, 16);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = u(rng);
    seqs.push_back(constant_sequence(f));
  }
  const auto before = fc.codec.parameters().snapshot();
  const auto lstm_before = fc.lstm.parameters().snapshot();
  VisionTrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch = 2;
  train_forecaster(fc, seqs, cfg);
  CHECK(fc.codec.parameters().snapshot() == before);
  CHECK(fc.lstm.parameters().snapshot() != lstm_before);
  for (const auto& e : fc.codec.parameters().entries()) CHECK(e.tensor.requires_grad());
}

TEST_CASE("adversarial weight zero reduces fine-tuning to plain training") {
  std::vector<data::FrameSequence> seqs;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int k = 0; k < 6; ++k) {
    Frame f(16, 16);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = u(rng);
    seqs.push_back(constant_sequence(f));
  }
  auto a = CnnLstmForecaster::init(tiny_arch(), 9);
  auto b = CnnLstmForecaster::init(tiny_arch(), 9);
  auto disc = Discriminator::init(tiny_arch(), 10, 8);

  CganConfig cg;
  cg.epochs = 2;
  cg.batch = 2;
  cg.seed = 4;
  cg.lambda_pred = std::numeric_limits<double>::infinity();
  const auto rc = cgan_finetune(a, disc, seqs, cg);

  VisionTrainConfig plain;
  plain.epochs = 2;
  plain.batch = 2;
  plain.seed = 4;
  plain.learning_rate = cg.learning_rate;
  plain.schedule.clear();
  plain.augment = false;
  const auto rp = train_forecaster(b, seqs, plain, false);

  REQUIRE(rc.step_prediction_loss.size() == rp.step_loss.size());
  for (std::size_t k = 0; k < rp.step_loss.size(); ++k) CHECK(std::abs(rc.step_prediction_loss[k] - rp.step_loss[k]) < 1e-9);
  for (double v : rc.discriminator_loss) CHECK(std::isfinite(v));
}

TEST_CASE("cgan fine-tuning with the default weight stays finite; collapse aborts") {
  std::vector<data::FrameSequence> seqs;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int k = 0; k < 4; ++k) {
    Frame f(16, 16);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = u(rng);
    seqs.push_back(constant_sequence(f));
  }
  auto fc = CnnLstmForecaster::init(tiny_arch(), 11);
  auto disc = Discriminator::init(tiny_arch(), 12, 8);
  CganConfig cg;
  cg.epochs = 3;
  cg.batch = 2;
  const auto r = cgan_finetune(fc, disc, seqs, cg);
  for (std::size_t e = 0; e < r.generator_loss.size(); ++e) {
    CHECK(std::isfinite(r.generator_loss[e]));
    CHECK(r.discriminator_loss[e] < 5.0);
  }

  // Every loss is below this level, so two epochs trigger the abort.
  CganConfig collapse = cg;
  collapse.collapse_loss = 1e9;
  collapse.collapse_epochs = 2;
  collapse.epochs = 5;
  CHECK_THROWS_AS(cgan_finetune(fc, disc, seqs, collapse), ModeCollapse);
}

TEST_CASE("real branch is the codec round trip") {
  const auto fc = CnnLstmForecaster::init(tiny_arch(), 13);
  Tensor x({1, 1, 16, 16}, 0.2);
  NoGradGuard guard;
  const auto a = real_branch(fc, x);
  const auto b = fc.codec.decode(fc.codec.encode(x));
  CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
}

TEST_CASE("codec overfits a constant-zero frame") {
  auto codec = ConvCodec::init(tiny_arch(), 14);
  auto zero = std::make_shared<const Frame>(Frame::Zero(16, 16));
  VisionTrainConfig cfg;
  cfg.epochs = 150;
  cfg.batch = 1;
  cfg.augment = false;
  cfg.schedule.clear();
  cfg.learning_rate = 3e-3;
  pretrain_codec(codec, {zero}, cfg);
  NoGradGuard guard;
  const Tensor y = codec.round_trip(frames_to_tensor({zero.get()}));
  double worst = 0.0;
  for (double v : y.data()) worst = std::max(worst, std::abs(v));
  CHECK(worst < 0.05);
}
