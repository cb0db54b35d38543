#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "bafrcnn/common/rng.hpp"
#include "bafrcnn/tensor/losses.hpp"
#include "bafrcnn/tensor/ops.hpp"
#include "bafrcnn/tensor/optim.hpp"
#include "bafrcnn/tensor/snapshot.hpp"

namespace bafrcnn::tensor {
namespace {

using TD = Tensor<double>;
using TF = Tensor<float>;

TEST(Tensor, RejectsZeroExtentsAndCountMismatch) {
  EXPECT_THROW(TD(Shape{2, 0}), std::invalid_argument);
  EXPECT_THROW(TD(Shape{2, 2}, std::vector<double>(3)), std::invalid_argument);
  TD t(Shape{2, 3});
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.grad().size(), t.numel());
}

TEST(Conv2d, IdentityKernelReproducesInput) {
  Tape<double> tape;
  Rng rng(3);
  TD x(Shape{1, 2, 5, 4});
  for (double& v : x.mutable_data()) v = rng.uniform(-2, 2);
  TD w(Shape{2, 2, 1, 1}, std::vector<double>{1, 0, 0, 1});
  TD b(Shape{2}, std::vector<double>{0, 0});
  TD y = conv2d(tape, x, w, b);
  ASSERT_EQ(y.shape(), x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Conv2d, OutputExtentFormula) {
  Tape<double> tape;
  TD x(Shape{2, 1, 9, 7});
  TD w(Shape{3, 1, 3, 2});
  TD y = conv2d(tape, x, w, TD{}, Conv2dOptions{2, 1});
  EXPECT_EQ(y.shape(), (Shape{2, 3, (9 + 2 - 3) / 2 + 1, (7 + 2 - 2) / 2 + 1}));
}

TEST(Conv2d, ShapeMismatchNamesOpAndShapes) {
  Tape<double> tape;
  TD x(Shape{1, 2, 6, 6});
  TD w(Shape{1, 3, 3, 3});
  try {
    (void)conv2d(tape, x, w, TD{});
    FAIL() << "expected a shape error";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("conv2d"), std::string::npos);
    EXPECT_NE(msg.find("[1x2x6x6]"), std::string::npos);
    EXPECT_NE(msg.find("[1x3x3x3]"), std::string::npos);
  }
}

TEST(Ops, RecordOnlyWhenInputsRequireGrad) {
  Tape<double> tape;
  TD a(Shape{3});
  (void)relu(tape, a);
  EXPECT_EQ(tape.size(), 0u);
  TD b(Shape{3}, true);
  (void)relu(tape, b);
  EXPECT_EQ(tape.size(), 1u);
  Tape<double> off(false);
  TD y = relu(off, b);
  EXPECT_EQ(off.size(), 0u);
  EXPECT_FALSE(y.requires_grad());
}

TEST(Sigmoid, ZeroMapsToHalf) {
  Tape<double> tape;
  EXPECT_EQ(sigmoid(tape, TD::scalar(0.0)).item(), 0.5);
  EXPECT_GT(sigmoid(tape, TD::scalar(-800.0)).item(), -1e-300);
  EXPECT_EQ(sigmoid(tape, TD::scalar(800.0)).item(), 1.0);
}

TEST(GradReverse, ForwardIsBitIdentical) {
  Tape<float> tape;
  Rng rng(11);
  TF x(Shape{4, 7}, true);
  for (float& v : x.mutable_data()) v = static_cast<float>(rng.normal() * 1e3);
  x.mutable_data()[0] = -0.0f;
  x.mutable_data()[1] = std::numeric_limits<float>::denorm_min();
  TF y = grad_reverse(tape, x, 0.1f);
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(std::bit_cast<std::uint32_t>(y[i]), std::bit_cast<std::uint32_t>(x[i]));
}

TEST(GradReverse, BackwardNegatesAndScalesExactly) {
  for (double weight : {0.0, 0.1, 1.0}) {
    Tape<double> tape;
    Rng rng(5);
    TD x(Shape{6}, true);
    TD upstream(Shape{6});
    for (double& v : upstream.mutable_data()) v = rng.uniform(-3, 3);
    TD loss = sum(tape, mul(tape, grad_reverse(tape, x, weight), upstream));
    tape.backward(loss);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(x.grad()[i], -weight * upstream[i]);
  }
}

TEST(GradReverse, WeightPointOneOnOnesGivesMinusPointOne) {
  Tape<float> tape;
  TF x(Shape{2, 3}, true);
  TF loss = sum(tape, grad_reverse(tape, x, 0.1f));
  tape.backward(loss);
  for (float g : x.grad()) EXPECT_EQ(g, -0.1f);
}

TEST(GradReverse, NegativeWeightRejected) {
  Tape<double> tape;
  TD x(Shape{2}, true);
  EXPECT_THROW((void)grad_reverse(tape, x, -0.5), std::invalid_argument);
}

TEST(BinaryCrossEntropy, ReferenceValues) {
  Tape<double> tape;
  const std::vector<double> zero{0.0}, one{1.0};
  EXPECT_NEAR(binary_cross_entropy(tape, TD::scalar(0.5), std::span<const double>(zero)).item(), std::log(2.0), 1e-12);
  EXPECT_NEAR(binary_cross_entropy(tape, TD::scalar(0.5), std::span<const double>(one)).item(), std::log(2.0), 1e-12);
  EXPECT_NEAR(binary_cross_entropy(tape, TD::scalar(0.9), std::span<const double>(zero)).item(), 2.302585, 1e-6);
  EXPECT_LE(binary_cross_entropy(tape, TD::scalar(1.0), std::span<const double>(one)).item(), -std::log(1.0 - 1e-7) + 1e-15);
  EXPECT_LE(binary_cross_entropy(tape, TD::scalar(0.0), std::span<const double>(zero)).item(), -std::log(1.0 - 1e-7) + 1e-15);
  EXPECT_NEAR(binary_cross_entropy(tape, TD::scalar(0.0), std::span<const double>(one)).item(), -std::log(1e-7), 1e-9);
}

TEST(BinaryCrossEntropy, EmptyBatchIsZero) {
  Tape<double> tape;
  EXPECT_EQ(binary_cross_entropy(tape, TD{}, std::span<const double>{}).item(), 0.0);
}

TEST(BinaryCrossEntropy, LogitFormAgreesWithProbabilityForm) {
  Tape<double> tape;
  Rng rng(8);
  TD logits(Shape{16});
  std::vector<double> labels(16);
  for (std::size_t i = 0; i < 16; ++i) {
    logits.mutable_data()[i] = rng.uniform(-6, 6);
    labels[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }
  const double a = binary_cross_entropy(tape, sigmoid(tape, logits), std::span<const double>(labels)).item();
  const double b = binary_cross_entropy_with_logits(tape, logits, std::span<const double>(labels)).item();
  EXPECT_NEAR(a, b, 1e-12);
}

TEST(SmoothL1, ReferenceValues) {
  Tape<double> tape;
  EXPECT_EQ(smooth_l1(tape, TD(Shape{3}, {1, 2, 3}), TD(Shape{3}, {1, 2, 3})).item(), 0.0);
  EXPECT_DOUBLE_EQ(smooth_l1(tape, TD::scalar(0.5), TD::scalar(0.0)).item(), 0.125);
  EXPECT_DOUBLE_EQ(smooth_l1(tape, TD::scalar(2.0), TD::scalar(0.0)).item(), 1.5);
  EXPECT_THROW((void)smooth_l1(tape, TD(Shape{2}), TD(Shape{3})), std::invalid_argument);
}

TEST(SoftmaxCrossEntropy, ReferenceValues) {
  Tape<double> tape;
  const std::vector<std::size_t> c0{0}, c2{2};
  EXPECT_NEAR(softmax_cross_entropy(tape, TD(Shape{1, 2}, {0.3, 0.3}), c0).item(), std::log(2.0), 1e-12);
  const double big = softmax_cross_entropy(tape, TD(Shape{1, 2}, {1000.0, 0.0}), c0).item();
  EXPECT_TRUE(std::isfinite(big));
  EXPECT_NEAR(big, 0.0, 1e-12);
  EXPECT_NEAR(softmax_cross_entropy(tape, TD(Shape{1, 3}, {1, 2, 3}), c2).item(), 0.407606, 1e-6);
  const std::vector<std::size_t> bad{3};
  EXPECT_THROW((void)softmax_cross_entropy(tape, TD(Shape{1, 3}), bad), std::invalid_argument);
}

TEST(Losses, NonNegativeOnRandomInputs) {
  Rng rng(21);
  Tape<double> tape;
  for (int trial = 0; trial < 200; ++trial) {
    TD p(Shape{5}), a(Shape{5}), b(Shape{5}), logits(Shape{5, 3});
    std::vector<double> labels(5);
    std::vector<std::size_t> cls(5);
    for (std::size_t i = 0; i < 5; ++i) {
      p.mutable_data()[i] = rng.uniform();
      a.mutable_data()[i] = rng.normal(0, 3);
      b.mutable_data()[i] = rng.normal(0, 3);
      labels[i] = rng.bernoulli(0.5);
      cls[i] = rng.index(3);
    }
    for (double& v : logits.mutable_data()) v = rng.normal(0, 10);
    const double bce = binary_cross_entropy(tape, p, std::span<const double>(labels)).item();
    EXPECT_GE(bce, 0.0);
    EXPECT_LE(bce, -std::log(1e-7) + 1e-9);
    EXPECT_GE(smooth_l1(tape, a, b).item(), 0.0);
    EXPECT_GE(softmax_cross_entropy(tape, logits, cls).item(), 0.0);
  }
}

TEST(RoiAlign, BoxCoveringOneCellReturnsThatCell) {
  Tape<double> tape;
  TD fm(Shape{1, 2, 4, 4});
  for (std::size_t i = 0; i < fm.numel(); ++i) fm.mutable_data()[i] = static_cast<double>(i);
  const std::vector<detector::Box> boxes{{8, 16, 16, 24}};
  auto r = roi_align(tape, fm, boxes, 8, 1, 1);
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_DOUBLE_EQ(r.features[0], fm[0 * 16 + 2 * 4 + 1]);
  EXPECT_DOUBLE_EQ(r.features[1], fm[1 * 16 + 2 * 4 + 1]);
}

TEST(RoiAlign, ConstantMapGivesConstantOutput) {
  Tape<double> tape;
  TD fm = TD::full(Shape{1, 3, 8, 8}, 2.5);
  Rng rng(4);
  std::vector<detector::Box> boxes;
  for (int i = 0; i < 10; ++i) {
    const double x = rng.uniform(-10, 60), y = rng.uniform(-10, 60);
    boxes.push_back({x, y, x + rng.uniform(1, 30), y + rng.uniform(1, 30)});
  }
  auto r = roi_align(tape, fm, boxes, 8, 3, 2);
  for (double v : r.features.data()) EXPECT_DOUBLE_EQ(v, 2.5);
}

TEST(RoiAlign, ZeroAreaAfterClippingIsSkipped) {
  Tape<double> tape;
  TD fm = TD::full(Shape{1, 1, 8, 8}, 1.0);
  const std::vector<detector::Box> boxes{{70, 70, 90, 90}, {10, 10, 20, 20}, {-5, 3, 0, 9}};
  auto r = roi_align(tape, fm, boxes, 8, 2, 2);
  EXPECT_EQ(r.kept, (std::vector<std::size_t>{1}));
  EXPECT_EQ(r.features.dim(0), 1u);
  const std::vector<detector::Box> none{{-9, -9, -1, -1}};
  EXPECT_FALSE(roi_align(tape, fm, none, 8, 2, 2).features.defined());
}

TEST(Backward, ConstantLossLeavesNoGradients) {
  Tape<double> tape;
  TD w(Shape{3}, true);
  TD c = TD::scalar(4.0);
  tape.backward(c);
  EXPECT_FALSE(w.has_grad());
}

TEST(Backward, LinearCaseGradientIsInput) {
  Tape<double> tape;
  TD w(Shape{4}, true);
  TD x(Shape{4}, std::vector<double>{1.5, -2, 0.25, 7});
  TD loss = sum(tape, mul(tape, w, x));
  tape.backward(loss);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(w.grad()[i], x[i]);
}

TEST(Backward, SecondBackwardWithoutForwardRejected) {
  Tape<double> tape;
  TD w(Shape{2}, true);
  TD loss = sum(tape, w);
  tape.backward(loss);
  EXPECT_EQ(tape.size(), 0u);
  EXPECT_THROW(tape.backward(loss), std::logic_error);
}

TEST(Backward, NonScalarRejected) {
  Tape<double> tape;
  TD w(Shape{2}, true);
  TD y = relu(tape, w);
  EXPECT_THROW(tape.backward(y), std::invalid_argument);
}

TEST(Backward, RunsEachRecordedOpOnceInReverse) {
  Tape<double> tape;
  std::vector<int> order;
  TD x(Shape{1}, true);
  tape.record("a", [&] { order.push_back(0); });
  tape.record("b", [&] { order.push_back(1); });
  tape.record("c", [&] { order.push_back(2); });
  TD loss = sum(tape, x);
  tape.backward(loss);
  EXPECT_EQ(order, (std::vector<int>{2, 1, 0}));
}

TEST(Sgd, ZeroLearningRateLeavesParameters) {
  ParameterSet<double> params(1);
  TD w = params.add("w", Shape{3}, 3);
  const std::vector<double> before(w.data().begin(), w.data().end());
  Sgd<double> opt(0.0, 0.9);
  w.grad_accumulator()[0] = 5.0;
  opt.step(params.all());
  EXPECT_EQ(std::vector<double>(w.data().begin(), w.data().end()), before);
}

TEST(Sgd, PlainStep) {
  ParameterSet<double> params;
  TD w = params.add("w", Shape{1}, 1, Init::kZeros);
  w.mutable_data()[0] = 1.0;
  w.grad_accumulator()[0] = 0.5;
  Sgd<double> opt(0.1, 0.0);
  opt.step(params.all());
  EXPECT_DOUBLE_EQ(w[0], 0.95);
  EXPECT_FALSE(w.has_grad());
}

TEST(Sgd, MomentumRecurrence) {
  ParameterSet<double> params;
  TD w = params.add("w", Shape{1}, 1, Init::kZeros);
  Sgd<double> opt(0.1, 0.9);
  w.grad_accumulator()[0] = 1.0;
  opt.step(params.all());
  EXPECT_DOUBLE_EQ(w[0], -0.1);
  w.grad_accumulator()[0] = 1.0;
  opt.step(params.all());
  EXPECT_DOUBLE_EQ(w[0], -0.29);
}

TEST(Sgd, MissingGradientNamesParameter) {
  ParameterSet<double> params;
  (void)params.add("head.weight", Shape{2}, 2);
  Sgd<double> opt(0.1, 0.9);
  try {
    opt.step(params.all());
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("head.weight"), std::string::npos);
  }
  EXPECT_THROW(Sgd<double>(0.1, 1.0), std::invalid_argument);
}

TEST(ParameterSet, DuplicateNamesRejected) {
  ParameterSet<float> params;
  (void)params.add("a", Shape{2}, 2);
  EXPECT_THROW((void)params.add("a", Shape{3}, 3), std::invalid_argument);
}

TEST(ParameterSet, InitIsBoundedAndSeededByName) {
  ParameterSet<double> a(7), b(7), c(8);
  TD wa = a.add("conv.weight", Shape{64}, 16);
  TD wb = b.add("conv.weight", Shape{64}, 16);
  TD wc = c.add("conv.weight", Shape{64}, 16);
  for (std::size_t i = 0; i < 64; ++i) {
    EXPECT_EQ(wa[i], wb[i]);
    EXPECT_LE(std::abs(wa[i]), 0.25);
  }
  EXPECT_NE(wa[0], wc[0]);
}

TEST(Snapshot, RoundTripIsBitExact) {
  Rng rng(99);
  std::vector<Parameter<float>> src;
  for (int i = 0; i < 4; ++i) {
    TF t(Shape{1 + rng.index(3), 1 + rng.index(5)});
    for (float& v : t.mutable_data()) v = static_cast<float>(rng.normal() * 100);
    src.push_back({"tensor_" + std::to_string(i) + "_é", t});
  }
  src[0].tensor.mutable_data()[0] = -0.0f;
  const auto bytes = encode_snapshot(src);
  ASSERT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "BGDT");
  const auto back = decode_snapshot(bytes);
  ASSERT_EQ(back.size(), src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    EXPECT_EQ(back[i].name, src[i].name);
    EXPECT_EQ(back[i].tensor.shape(), src[i].tensor.shape());
    for (std::size_t j = 0; j < src[i].tensor.numel(); ++j)
      EXPECT_EQ(std::bit_cast<std::uint32_t>(back[i].tensor[j]), std::bit_cast<std::uint32_t>(src[i].tensor[j]));
  }
  EXPECT_EQ(encode_snapshot(back), bytes);

  const auto path = std::filesystem::temp_directory_path() / "bafrcnn_snapshot_test.bgdt";
  save_snapshot(path, src);
  EXPECT_EQ(encode_snapshot(load_snapshot(path)), bytes);
  std::filesystem::remove(path);
}

TEST(Snapshot, LayoutMatchesFormat) {
  std::vector<Parameter<float>> one{{"ab", TF(Shape{1}, std::vector<float>{1.0f})}};
  const auto bytes = encode_snapshot(one);
  const std::vector<std::uint8_t> expected{'B', 'G', 'D', 'T', 1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 'a', 'b',
                                           1,   0,   0,   0,   1, 0, 0, 0, 0, 0, 0x80, 0x3f};
  EXPECT_EQ(bytes, expected);
}

TEST(Snapshot, RejectsCorruptInput) {
  std::vector<std::uint8_t> bad{'X', 'G', 'D', 'T', 1, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_THROW((void)decode_snapshot(bad), std::runtime_error);
  std::vector<Parameter<float>> one{{"w", TF(Shape{2})}};
  auto bytes = encode_snapshot(one);
  bytes.pop_back();
  EXPECT_THROW((void)decode_snapshot(bytes), std::runtime_error);
}

TEST(Determinism, RepeatedTrainingIsBitIdentical) {
  auto run = [] {
    ParameterSet<float> params(42);
    TF w = params.add("conv.weight", Shape{4, 1, 3, 3}, 9);
    TF b = params.add("conv.bias", Shape{4}, 9);
    Sgd<float> opt(0.05f, 0.9f);
    Rng rng(1234);
    for (int step = 0; step < 10; ++step) {
      TF x(Shape{1, 1, 8, 8});
      for (float& v : x.mutable_data()) v = static_cast<float>(rng.uniform());
      Tape<float> tape;
      TF loss = mean(tape, relu(tape, conv2d(tape, x, w, b, Conv2dOptions{1, 1})));
      tape.backward(loss);
      opt.step(params.all());
    }
    return encode_snapshot(params.all());
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace bafrcnn::tensor
