#include "adrf/loss.hpp"
#include "adrf/ops.hpp"
#include "adrf/optim.hpp"
#include "gradcheck.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace adrf;
using adrf::testing::grad_check;
using adrf::testing::random_tensor;

TEST_CASE("tensor construction checks shape against data") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), ContractViolation);
  CHECK_THROWS_AS(Tensor(Shape{0, 3}), ContractViolation);
  Tensor t({2, 3}, 1.5);
  CHECK(t.numel() == 6);
  CHECK(t.data()[5] == 1.5);
}

TEST_CASE("matmul with identity returns the other operand") {
  std::mt19937_64 rng(1);
  Tensor eye({3, 3}, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor a = random_tensor({3, 5}, rng);
  Tensor out = matmul(eye, a);
  CHECK(out.shape() == Shape{3, 5});
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(out[i] == a[i]);
  CHECK_THROWS_AS(matmul(a, eye), ContractViolation);
}

TEST_CASE("leaky relu uses the configured slope") {
  Tensor x({2}, std::vector<double>{-1.0, 2.0});
  Tensor y = leaky_relu(x, 0.2);
  CHECK(y[0] == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(y[1] == 2.0);
  CHECK_THROWS_AS(leaky_relu(x, 1.0), ContractViolation);
  CHECK_THROWS_AS(leaky_relu(x, 0.0), ContractViolation);
}

TEST_CASE("1x1 identity kernel leaves a 4x4 input unchanged") {
  std::mt19937_64 rng(2);
  Tensor x = random_tensor({1, 1, 4, 4}, rng);
  Tensor w({1, 1, 1, 1}, 1.0);
  Tensor b({1}, 0.0);
  Tensor y = conv2d(x, w, b, {1, 0});
  CHECK(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("conv output size follows floor((in + 2 pad - k) / stride) + 1") {
  std::mt19937_64 rng(3);
  for (std::size_t in : {4u, 7u, 8u, 16u, 32u}) {
    for (std::size_t k : {1u, 3u}) {
      for (std::size_t s : {1u, 2u}) {
        for (std::size_t p : {0u, 1u}) {
          if (in + 2 * p < k) continue;
          const std::size_t expect = (in + 2 * p - k) / s + 1;
          Tensor x = random_tensor({1, 2, in, in}, rng);
          Tensor w = random_tensor({3, 2, k, k}, rng);
          Tensor b({3}, 0.0);
          Tensor y = conv2d(x, w, b, {s, p});
          CHECK(y.shape() == Shape{1, 3, expect, expect});
          CHECK(conv_output_size(in, k, s, p) == expect);
        }
      }
    }
  }
  CHECK_THROWS_AS(conv_output_size(4, 3, 0, 1), ContractViolation);
}

TEST_CASE("conv2d matches a direct nested-loop convolution") {
  std::mt19937_64 rng(4);
  Tensor x = random_tensor({2, 2, 5, 5}, rng);
  Tensor w = random_tensor({3, 2, 3, 3}, rng);
  Tensor b = random_tensor({3}, rng);
  Tensor y = conv2d(x, w, b, {2, 1});
  const std::size_t Ho = 3;
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t o = 0; o < 3; ++o)
      for (std::size_t oy = 0; oy < Ho; ++oy)
        for (std::size_t ox = 0; ox < Ho; ++ox) {
          double acc = b[o];
          for (std::size_t c = 0; c < 2; ++c)
            for (int ki = 0; ki < 3; ++ki)
              for (int kj = 0; kj < 3; ++kj) {
                const int iy = int(oy * 2) + ki - 1, ix = int(ox * 2) + kj - 1;
                if (iy < 0 || ix < 0 || iy >= 5 || ix >= 5) continue;
                acc += w[((o * 2 + c) * 3 + ki) * 3 + kj] * x[((n * 2 + c) * 5 + iy) * 5 + ix];
              }
          CHECK(y[((n * 3 + o) * Ho + oy) * Ho + ox] == doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("non-finite results raise a numeric error") {
  Tensor x({1}, std::vector<double>{1e308});
  CHECK_THROWS_AS(scale(x, 10.0), NumericError);
}

TEST_CASE("losses match hand arithmetic") {
  Tensor zeros({2}, 0.0), ones({2}, 1.0);
  CHECK(mse_loss(zeros, zeros).item() == 0.0);
  CHECK(mse_loss(zeros, ones).item() == doctest::Approx(1.0));
  CHECK(mae_loss(zeros, ones).item() == doctest::Approx(1.0));
  CHECK(loss(LossKind::mse_mae, zeros, ones).item() == doctest::Approx(2.0));
  Tensor half({1}, 0.5), one({1}, 1.0);
  CHECK(bce_loss(half, one).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(bce_loss(one, one), ContractViolation);
  CHECK_THROWS_AS(mse_loss(zeros, Tensor({3}, 0.0)), ContractViolation);
  CHECK(parse_loss_kind("mse+mae") == LossKind::mse_mae);
}

TEST_CASE("tanh derivative at zero is one") {
  Tensor x({1}, 0.0, true);
  Tape tape;
  Tensor y = sum(adrf::tanh(x));
  tape.backward(y);
  CHECK(x.grad()[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("mse of identical inputs has zero gradient") {
  std::mt19937_64 rng(5);
  Tensor x = random_tensor({4, 3}, rng);
  x.set_requires_grad(true);
  Tape tape;
  Tensor l = mse_loss(x, x.detach());
  tape.backward(l);
  for (double g : x.grad()) CHECK(g == 0.0);
}

TEST_CASE("backward preconditions and unreachable leaves") {
  Tensor a({2}, 1.0, true), b({2}, 2.0, true);
  Tape tape;
  Tensor unused = mul(b, b);
  Tensor l = sum(scale(a, 3.0));
  CHECK_THROWS_AS(tape.backward(mul(a, a)), ContractViolation);  // not scalar
  tape.backward(l);
  CHECK(a.grad()[0] == doctest::Approx(3.0));
  REQUIRE(b.has_grad());
  CHECK(b.grad()[0] == 0.0);
  CHECK_THROWS_AS(tape.backward(l), ContractViolation);
}

TEST_CASE("ops record only when a tape is active and an input requires grad") {
  Tensor a({2}, 1.0, true);
  Tensor c({2}, 1.0);
  {
    Tape tape;
    (void)add(c, c);
    CHECK(tape.size() == 0);
    (void)add(a, c);
    CHECK(tape.size() == 1);
    {
      NoGradGuard guard;
      (void)add(a, c);
    }
    CHECK(tape.size() == 1);
  }
  Tensor r = add(a, c);
  CHECK_FALSE(r.requires_grad());
}

TEST_CASE("every op passes the central finite-difference check") {
  std::mt19937_64 rng(6);
  const double tol = 1e-4;

  SUBCASE("matmul") {
    Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng);
    auto r = grad_check({a, b}, [&] { return sum(adrf::tanh(matmul(a, b))); });
    CHECK(r.max_rel_error < tol);
  }
  SUBCASE("add/sub/mul with broadcasting") {
    Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4}, rng), c = random_tensor({3, 4}, rng);
    auto r = grad_check({a, b, c}, [&] { return sum(adrf::tanh(mul(sub(add(a, b), c), add(c, b)))); });
    CHECK(r.max_rel_error < tol);
  }
  SUBCASE("sigmoid and scale") {
    Tensor a = random_tensor({5}, rng, -3, 3);
    auto r = grad_check({a}, [&] { return sum(mul(sigmoid(a), scale(a, 0.7))); });
    CHECK(r.max_rel_error < tol);
  }
  SUBCASE("leaky relu") {
    Tensor a = random_tensor({7}, rng);
    auto r = grad_check({a}, [&] { return sum(mul(leaky_relu(a, 0.2), a)); });
    CHECK(r.max_rel_error < tol);
  }
  SUBCASE("conv2d with stride and padding") {
    Tensor x = random_tensor({2, 2, 6, 6}, rng), w = random_tensor({3, 2, 3, 3}, rng),
           b = random_tensor({3}, rng);
    auto r = grad_check({x, w, b}, [&] { return sum(adrf::tanh(conv2d(x, w, b, {2, 1}))); });
    CHECK(r.max_rel_error < tol);
  }
  SUBCASE("upsample, reshape, flatten") {
    Tensor x = random_tensor({1, 2, 2, 3}, rng), w = random_tensor({1, 48}, rng);
    auto r = grad_check({x, w}, [&] {
      Tensor u = flatten(upsample_nearest(x, 2));
      return sum(adrf::tanh(mul(reshape(u, {1, 48}), w)));
    });
    CHECK(r.max_rel_error < tol);
  }
  SUBCASE("concat and narrow") {
    Tensor a = random_tensor({2, 3}, rng), b = random_tensor({2, 2}, rng);
    auto r = grad_check({a, b}, [&] {
      Tensor c = concat({a, b}, 1);
      Tensor n = narrow(c, 1, 1, 3);
      return sum(mul(adrf::tanh(n), narrow(concat({a, a}, 0), 0, 1, 2)));
    });
    CHECK(r.max_rel_error < tol);
  }
  SUBCASE("losses") {
    Tensor p = random_tensor({3, 2}, rng, 0.1, 0.9), t = random_tensor({3, 2}, rng, 0.0, 1.0);
    for (LossKind k : {LossKind::mse, LossKind::mae, LossKind::mse_mae, LossKind::bce}) {
      auto r = grad_check({p}, [&] { return loss(k, p, t); });
      CHECK(r.max_rel_error < tol);
    }
  }
  SUBCASE("mean") {
    Tensor a = random_tensor({4, 2}, rng);
    auto r = grad_check({a}, [&] { return mean(mul(a, a)); });
    CHECK(r.max_rel_error < tol);
  }
}

TEST_CASE("random two-layer network gradients match finite differences") {
  std::mt19937_64 rng(11);
  Tensor x = random_tensor({4, 5}, rng);
  Tensor w1 = random_tensor({5, 8}, rng), b1 = random_tensor({8}, rng);
  Tensor w2 = random_tensor({8, 3}, rng), b2 = random_tensor({3}, rng);
  Tensor y = random_tensor({4, 3}, rng);
  auto r = grad_check({w1, b1, w2, b2}, [&] {
    Tensor h = adrf::tanh(add(matmul(x, w1), b1));
    return mse_loss(add(matmul(h, w2), b2), y);
  });
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("adam leaves parameters unchanged on zero gradients") {
  Tensor w({3}, std::vector<double>{1.0, -2.0, 0.5}, true);
  Adam opt({w}, {});
  w.mutable_grad();
  opt.step();
  CHECK(w[0] == 1.0);
  CHECK(w[1] == -2.0);
  CHECK(opt.step_count() == 1);
}

TEST_CASE("adam requires a gradient for every parameter") {
  Tensor w({1}, 1.0, true);
  Adam opt({w}, {});
  CHECK_THROWS_AS(opt.step(), ContractViolation);
}

TEST_CASE("adam drives w^2 toward zero from w=1") {
  Tensor w({1}, 1.0, true);
  Adam opt({w}, {.learning_rate = 0.01});
  for (int i = 0; i < 200; ++i) {
    Tape tape;
    Tensor l = sum(mul(w, w));
    tape.backward(l);
    opt.step();
  }
  CHECK(std::abs(w[0]) < 0.05);
}

TEST_CASE("adam schedule multiplies the base rate from the given epoch") {
  Tensor w({1}, 1.0, true);
  Adam opt({w}, {.learning_rate = 1e-3, .schedule = {{50, 0.1}, {80, 0.01}}});
  opt.set_epoch(0);
  CHECK(opt.current_learning_rate() == doctest::Approx(1e-3));
  opt.set_epoch(50);
  CHECK(opt.current_learning_rate() == doctest::Approx(1e-4));
  opt.set_epoch(99);
  CHECK(opt.current_learning_rate() == doctest::Approx(1e-5));
}

TEST_CASE("identical seeds give bit-identical parameters") {
  auto run = [] {
    std::mt19937_64 rng(99);
    Tensor w = random_tensor({3, 2}, rng);
    w.set_requires_grad(true);
    Tensor x = random_tensor({5, 3}, rng), y = random_tensor({5, 2}, rng);
    Adam opt({w}, {});
    for (int i = 0; i < 25; ++i) {
      Tape tape;
      Tensor l = mse_loss(adrf::tanh(matmul(x, w)), y);
      tape.backward(l);
      opt.step();
    }
    return std::vector<double>(w.data().begin(), w.data().end());
  };
  CHECK(run() == run());
}
