#include "doctest.h"
#include "gradcheck.hpp"

#include "adrf/imu/models.hpp"
#include "adrf/loss.hpp"
#include "adrf/ops.hpp"

#include <cmath>

using namespace adrf;
using namespace adrf::imu;

namespace {

ImuWindow make_window(std::mt19937_64& rng, bool with_target) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ImuWindow w;
  for (std::size_t k = 0; k < 3; ++k) {
    w.t[k] = 0.05 * static_cast<double>(k);
    for (auto& v : w.x[k]) v = u(rng);
  }
  w.flag_index = 2;
  if (with_target) {
    ImuVector t;
    for (auto& v : t) v = u(rng);
    w.target = t;
    w.target_t = 0.15;
    w.flag_index = 3;
  }
  return w;
}

}  // namespace

TEST_CASE("autoencoder and forecaster shapes") {
  const auto ae = LstmAutoencoder::init(1);
  const auto fc = LstmForecaster::init(1);
  std::mt19937_64 rng(2);
  const auto w = make_window(rng, true);
  const auto x = window_batch({&w});
  NoGradGuard guard;
  CHECK(ae.encode(x).shape() == Shape{1, 64});
  const auto y = ae.forward(x);
  REQUIRE(y.size() == 3);
  for (const auto& s : y) CHECK(s.shape() == Shape{1, 6});
  CHECK(fc.forward(x).shape() == Shape{1, 6});
  CHECK(ae.enc1.hidden_size() == 128);
  CHECK(fc.encoder.hidden_size() == 64);
}

TEST_CASE("error splitting and attribution") {
  const auto e = split_error({1, 2, 3, 4, 5, 6}, 0.5);
  CHECK(e.e_a == doctest::Approx(2.0));
  CHECK(e.e_l == doctest::Approx(5.0));

  // A zero-weight head outputs its bias; choose the bias to equal the input.
  auto ae = LstmAutoencoder::init(3);
  for (auto& v : ae.head.weight.mutable_data()) v = 0.0;
  ImuWindow w;
  for (std::size_t k = 0; k < 3; ++k) {
    w.t[k] = static_cast<double>(k);
    w.x[k] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  }
  w.flag_index = 2;
  auto b = ae.head.bias.mutable_data();
  for (std::size_t d = 0; d < 6; ++d) b[d] = w.x[0][d];
  const auto r = reconstruct_error(ae, w);
  CHECK(r.e_a == doctest::Approx(0.0));
  CHECK(r.e_l == doctest::Approx(0.0));
  CHECK(r.t_flag == 2.0);

  auto fc = LstmForecaster::init(3);
  for (auto& v : fc.head.weight.mutable_data()) v = 0.0;
  w.target = ImuVector{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  w.target_t = 3.0;
  auto fb = fc.head.bias.mutable_data();
  for (std::size_t d = 0; d < 6; ++d) fb[d] = (*w.target)[d];
  const auto f = forecast_error(fc, w);
  CHECK(f.e_a == doctest::Approx(0.0));
  CHECK(f.t_flag == 3.0);
  fb[0] += 0.3;
  const auto g = forecast_error(fc, w);
  CHECK(g.e[0] == doctest::Approx(0.09));
  CHECK(g.e_a == doctest::Approx(0.03));
  CHECK(g.e_l == doctest::Approx(0.0));

  w.target.reset();
  CHECK_THROWS_AS(forecast_error(fc, w), ContractViolation);
}

TEST_CASE("untrained models are rejected") {
  LstmAutoencoder ae;
  LstmForecaster fc;
  std::mt19937_64 rng(1);
  const auto w = make_window(rng, true);
  CHECK_THROWS_AS(reconstruct_error(ae, w), ContractViolation);
  CHECK_THROWS_AS(forecast_error(fc, w), ContractViolation);
  auto good = LstmAutoencoder::init(1);
  CHECK_THROWS_AS(train_autoencoder(good, {}, TrainConfig{}), ContractViolation);
}

TEST_CASE("both imu models pass finite-difference gradient checks") {
  std::mt19937_64 rng(5);
  std::vector<ImuWindow> ws{make_window(rng, true), make_window(rng, true)};
  const auto x = window_batch({&ws[0], &ws[1]});
  Tensor target({2, 6}, std::vector<double>{0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.2, 0.1, -0.3, 0.0, 0.5, -0.1});

  const auto ae = LstmAutoencoder::init(7, 5, 4);
  const auto r1 = testing::grad_check(ae.parameters().tensors(), [&] { return mse_loss(concat(ae.forward(x), 1), concat(x, 1)); });
  CHECK(r1.max_rel_error < 1e-4);

  const auto fc = LstmForecaster::init(7, 5);
  const auto r2 = testing::grad_check(fc.parameters().tensors(), [&] { return mse_loss(fc.forward(x), target); });
  CHECK(r2.max_rel_error < 1e-4);
}

TEST_CASE("single-window autoencoder overfit") {
  std::mt19937_64 rng(11);
  std::vector<ImuWindow> ws{make_window(rng, false)};
  auto ae = LstmAutoencoder::init(4);
  TrainConfig cfg;
  cfg.epochs = 500;
  const auto report = train_autoencoder(ae, ws, cfg);
  CHECK(report.epoch_loss.back() < 1e-4);
  const auto e = reconstruct_error(ae, ws[0]);
  CHECK((e.e_a + e.e_l) / 2.0 < 1e-4);
}

TEST_CASE("constant-sequence forecaster overfit") {
  ImuWindow w;
  const ImuVector c{0.3, -0.2, 0.5, -0.7, 0.1, 0.4};
  for (std::size_t k = 0; k < 3; ++k) {
    w.x[k] = c;
    w.t[k] = static_cast<double>(k);
  }
  w.target = c;
  w.target_t = 3.0;
  auto fc = LstmForecaster::init(4);
  TrainConfig cfg;
  cfg.epochs = 500;
  train_forecaster(fc, {w}, cfg);
  const auto e = forecast_error(fc, w);
  CHECK((e.e_a + e.e_l) / 2.0 < 1e-4);
}

TEST_CASE("training is deterministic and the loss trends down") {
  std::mt19937_64 rng(13);
  std::vector<ImuWindow> ws;
  for (int i = 0; i < 12; ++i) ws.push_back(make_window(rng, true));
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.seed = 9;
  cfg.batch = 3;
  auto a = LstmForecaster::init(2, 16);
  auto b = LstmForecaster::init(2, 16);
  const auto ra = train_forecaster(a, ws, cfg);
  const auto rb = train_forecaster(b, ws, cfg);
  CHECK(ra.epoch_loss == rb.epoch_loss);
  CHECK(a.parameters().snapshot() == b.parameters().snapshot());

  auto avg = [&](std::size_t from) {
    double s = 0.0;
    for (std::size_t k = from; k < from + 20; ++k) s += ra.epoch_loss[k];
    return s / 20.0;
  };
  CHECK(avg(40) < avg(0));
}
