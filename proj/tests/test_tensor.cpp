#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "dddm/errors.hpp"
#include "dddm/ops.hpp"
#include "dddm/rng.hpp"
#include "gradcheck.hpp"

using namespace dddm;
using namespace dddm::gradcheck;

TEST(Autodiff, EveryPrimitiveMatchesFiniteDifferences) {
  for (const OpCase& c : op_cases()) {
    Rng rng(11, 0);
    for (int inst = 0; inst < 20; ++inst) {
      const double err = max_rel_error(c.build, c.make(rng), rng);
      EXPECT_LT(err, 1e-5) << c.name << " instance " << inst;
    }
  }
}

TEST(Autodiff, MatmulIdentity) {
  Tape tape(false);
  Var i2 = tape.constant(Tensor::from_rows({{1, 0}, {0, 1}}));
  Var v = tape.constant(Tensor::col({3.0, -2.0}));
  Var y = ad::matmul(i2, v);
  EXPECT_EQ(y.value()[0], 3.0);
  EXPECT_EQ(y.value()[1], -2.0);
}

TEST(Autodiff, L1OfSelfIsZero) {
  Tape tape(false);
  Var x = tape.constant(Tensor::from_rows({{1, -2, 3}}));
  EXPECT_EQ(ad::l1_loss(x, x).value()[0], 0.0);
}

TEST(Autodiff, TanhGradientAtZeroIsOne) {
  Parameter p("x", Tensor::scalar(0.0));
  Tape tape;
  tape.backward(ad::tanh(tape.param(p)));
  EXPECT_DOUBLE_EQ(p.grad[0], 1.0);
}

TEST(Autodiff, LinearFormGradientIsInput) {
  Parameter w("w", Tensor::row({0.3, -0.1, 2.0}));
  Tensor x = Tensor::row({1.5, 4.0, -0.5});
  Tape tape;
  tape.backward(ad::sum(ad::mul(tape.param(w), tape.constant(x))));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(w.grad[i], x[i]);
}

TEST(Autodiff, MseGradientMatchesFiniteDifferencesPerCoordinate) {
  Rng rng(5);
  Parameter w("w", random_tensor(4, 3, rng));
  const Tensor x = random_tensor(6, 4, rng), y = random_tensor(6, 3, rng);
  auto loss_at = [&](const Tensor& wv) {
    Tape t(false);
    return ad::mse_loss(ad::matmul(t.constant(x), t.constant(wv)), t.constant(y)).value()[0];
  };
  Tape tape;
  tape.backward(ad::mse_loss(ad::matmul(tape.constant(x), tape.param(w)), tape.constant(y)));
  for (std::size_t i = 0; i < w.value.size(); ++i) {
    Tensor p = w.value, m = w.value;
    p[i] += 1e-5;
    m[i] -= 1e-5;
    const double fd = (loss_at(p) - loss_at(m)) / 2e-5;
    EXPECT_NEAR(w.grad[i], fd, 1e-6 * std::max(1.0, std::fabs(fd)));
  }
}

TEST(Autodiff, UnusedParameterGetsZeroGradient) {
  Parameter used("u", Tensor::scalar(2.0)), unused("n", Tensor::scalar(5.0));
  Tape tape;
  tape.param(unused);
  tape.backward(ad::mul(tape.param(used), tape.param(used)));
  EXPECT_DOUBLE_EQ(used.grad[0], 4.0);
  EXPECT_DOUBLE_EQ(unused.grad[0], 0.0);
}

TEST(Autodiff, NonScalarLossRejected) {
  Parameter p("p", Tensor(2, 2, 1.0));
  Tape tape;
  Var v = ad::tanh(tape.param(p));
  EXPECT_THROW(tape.backward(v), ContractError);
}

TEST(Autodiff, ShapeMismatchRejected) {
  Tape tape(false);
  Var a = tape.constant(Tensor(2, 3)), b = tape.constant(Tensor(2, 2));
  EXPECT_THROW(ad::matmul(a, b), ShapeError);
  EXPECT_THROW(ad::add(a, b), ShapeError);
  EXPECT_THROW(ad::l1_loss(a, b), ShapeError);
}

TEST(Autodiff, NonFiniteInputRejected) {
  Tape tape(false);
  EXPECT_THROW(tape.constant(Tensor::scalar(std::nan(""))), NumericError);
  Var big = tape.constant(Tensor::scalar(1e308));
  EXPECT_THROW(ad::scale(big, 10.0), NumericError);
}

TEST(Autodiff, BackwardIsBitwiseDeterministic) {
  auto run = [] {
    Rng rng(99);
    Parameter w("w", random_tensor(8, 5, rng));
    Tensor x = random_tensor(16, 8, rng);
    Tape tape;
    Var h = ad::silu(ad::matmul(tape.constant(x), tape.param(w)));
    tape.backward(ad::mean(ad::mul(h, h)));
    return w.grad.values();
  };
  EXPECT_EQ(run(), run());
}
