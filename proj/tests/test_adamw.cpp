#include <gtest/gtest.h>

#include <cmath>

#include "dddm/adamw.hpp"
#include "dddm/errors.hpp"

using namespace dddm;

namespace {

// Textbook AdamW recurrence, kept separate from the library code.
struct RefAdamW {
  double lr, b1, b2, wd, eps;
  double m = 0, v = 0;
  int t = 0;
  double step(double p, double g) {
    ++t;
    p -= lr * wd * p;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return p - lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace

TEST(AdamW, ZeroGradZeroDecayIsIdentity) {
  Parameter p("p", Tensor::row({1.0, -2.0, 3.0}));
  AdamW opt({&p}, AdamWConfig{.lr = 1e-3, .weight_decay = 0.0});
  p.zero_grad();
  opt.step();
  EXPECT_EQ(p.value.values(), (std::vector<double>{1.0, -2.0, 3.0}));
}

TEST(AdamW, OneStepMatchesHandComputedReference) {
  Parameter p("p", Tensor::scalar(1.0));
  AdamW opt({&p}, AdamWConfig{});
  p.grad[0] = 1.0;
  opt.step();
  RefAdamW ref{5e-5, 0.8, 0.99, 0.01, 1e-8};
  EXPECT_NEAR(p.value[0], ref.step(1.0, 1.0), 1e-15);
  // Frozen: (1 - 5e-7) - 5e-5 / (1 + 1e-8).
  EXPECT_NEAR(p.value[0], 0.9999495000005001, 1e-14);
}

TEST(AdamW, MultiStepTracksReference) {
  Parameter p("p", Tensor::scalar(0.7));
  AdamW opt({&p}, AdamWConfig{.lr = 1e-2});
  RefAdamW ref{1e-2, 0.8, 0.99, 0.01, 1e-8};
  double q = 0.7;
  for (int k = 0; k < 25; ++k) {
    const double g = std::sin(0.3 * k) + 0.1 * p.value[0];
    p.grad[0] = g;
    opt.step();
    q = ref.step(q, g);
    EXPECT_NEAR(p.value[0], q, 1e-13);
  }
}

TEST(AdamW, DecoupledDecayOnly) {
  // Zero gradient leaves zero moments, so only the decay term acts.
  Parameter p("p", Tensor::scalar(2.0));
  AdamW opt({&p}, AdamWConfig{.lr = 5e-5, .weight_decay = 0.01});
  p.grad[0] = 0.0;
  opt.step();
  EXPECT_DOUBLE_EQ(p.value[0], 2.0 * (1.0 - 5e-5 * 0.01));
}

TEST(AdamW, ZeroLearningRateIsIdentity) {
  Parameter p("p", Tensor::row({0.5, -0.25}));
  AdamW opt({&p}, AdamWConfig{.lr = 0.0});
  p.grad = Tensor::row({3.0, -7.0});
  opt.step();
  EXPECT_EQ(p.value.values(), (std::vector<double>{0.5, -0.25}));
}

TEST(AdamW, MomentsMatchParameterShapes) {
  Parameter a("a", Tensor(3, 2)), b("b", Tensor(1, 5));
  AdamW opt({&a, &b}, AdamWConfig{});
  ASSERT_EQ(opt.first_moments().size(), 2u);
  EXPECT_TRUE(opt.first_moments()[0].same_shape(a.value));
  EXPECT_TRUE(opt.second_moments()[1].same_shape(b.value));
}

TEST(AdamW, ShapeMismatchRejected) {
  Parameter a("a", Tensor(2, 2));
  AdamW opt({&a}, AdamWConfig{});
  a.grad = Tensor(1, 4);
  EXPECT_THROW(opt.step(), ShapeError);
}

TEST(LrSchedule, EpochDecay) {
  const double decay = std::pow(0.999, 1.0 / 8.0);
  for (std::uint64_t k : {0u, 1u, 8u, 200u})
    EXPECT_NEAR(scheduled_lr(LrSchedule::exponential, 5e-5, decay, k, 0, 0), 5e-5 * std::pow(decay, k), 1e-20);
  EXPECT_NEAR(scheduled_lr(LrSchedule::exponential, 5e-5, decay, 8, 0, 0), 5e-5 * 0.999, 1e-18);
}

TEST(LrSchedule, CosineEndpoints) {
  EXPECT_DOUBLE_EQ(scheduled_lr(LrSchedule::cosine, 1e-2, 1.0, 0, 0, 100), 1e-2);
  EXPECT_NEAR(scheduled_lr(LrSchedule::cosine, 1e-2, 1.0, 0, 50, 100), 5e-3, 1e-15);
  EXPECT_NEAR(scheduled_lr(LrSchedule::cosine, 1e-2, 1.0, 0, 100, 100), 0.0, 1e-15);
}
