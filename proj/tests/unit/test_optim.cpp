#include <gtest/gtest.h>

#include "avt/errors.hpp"
#include "avt/optim.hpp"

using namespace avt;

namespace {

ParameterList<double> one_param(double value) {
  Tensor<double> p(Shape{1}, value);
  p.set_requires_grad(true);
  return {{"p", p}};
}

void set_grad(ParameterList<double>& params, double g) { params[0].tensor.mutable_grad()[0] = g; }

}  // namespace

TEST(LrSchedule, PaperEndpoints) {
  EXPECT_EQ(lr_at_epoch(20), 1e-4);
  EXPECT_EQ(lr_at_epoch(50), 0.0);
  EXPECT_EQ(lr_at_epoch(35), 5e-5);
}

TEST(LrSchedule, WarmupIsLinearFromZero) {
  EXPECT_EQ(lr_at_epoch(0), 0.0);
  EXPECT_DOUBLE_EQ(lr_at_epoch(10), 5e-5);
  EXPECT_DOUBLE_EQ(lr_at(2.5), 1e-4 * 2.5 / 20);
}

TEST(LrSchedule, OutOfRangeThrows) {
  EXPECT_THROW(lr_at_epoch(51), ConfigError);
  EXPECT_THROW(lr_at_epoch(-1), ConfigError);
}

TEST(LrSchedule, DeskBudget) {
  const LrSchedule desk{30, 12, 0.05};
  EXPECT_EQ(lr_at_epoch(12, desk), 0.05);
  EXPECT_EQ(lr_at_epoch(30, desk), 0.0);
  EXPECT_EQ(lr_at_epoch(21, desk), 0.025);
}

TEST(SgdMomentum, PlainStep) {
  auto params = one_param(2.0);
  SgdMomentum<double> opt(params, {1.0, 0.0, 0.0});
  set_grad(params, 0.5);
  opt.step(1.0);
  EXPECT_EQ(params[0].tensor[0], 1.5);
  EXPECT_FALSE(params[0].tensor.has_grad());
}

TEST(SgdMomentum, MomentumUnrolls) {
  auto params = one_param(0.0);
  SgdMomentum<double> opt(params, {0.1, 0.9, 0.0});
  set_grad(params, 1.0);
  opt.step(0.1);
  const double after_first = params[0].tensor[0];
  set_grad(params, 1.0);
  opt.step(0.1);
  EXPECT_DOUBLE_EQ(after_first - params[0].tensor[0], 1.0 * (1 + 0.9) * 0.1);
}

TEST(SgdMomentum, WeightDecayWithZeroGrad) {
  auto params = one_param(3.0);
  SgdMomentum<double> opt(params, {0.1, 0.9, 1e-6});
  set_grad(params, 0.0);
  opt.step(0.1);
  EXPECT_DOUBLE_EQ(params[0].tensor[0], 3.0 * (1 - 0.1 * 1e-6));
}

TEST(SgdMomentum, MissingGradientThrows) {
  auto params = one_param(1.0);
  SgdMomentum<double> opt(params, {});
  EXPECT_THROW(opt.step(0.1), std::logic_error);
}

TEST(SgdMomentum, OneBufferPerParameter) {
  Tensor<float> a(Shape{2, 3}), b(Shape{4});
  SgdMomentum<float> opt({{"a", a}, {"b", b}}, {});
  ASSERT_EQ(opt.momentum_buffers().size(), 2u);
  EXPECT_EQ(opt.momentum_buffers()[0].shape(), a.shape());
  EXPECT_EQ(opt.momentum_buffers()[1].shape(), b.shape());
}
