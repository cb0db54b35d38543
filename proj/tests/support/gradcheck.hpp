#pragma once

// Central finite-difference oracle for the tape. Evaluates the scalar function
// with recording disabled, so the numeric side never touches a backward closure.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "bafrcnn/common/rng.hpp"
#include "bafrcnn/tensor/losses.hpp"
#include "bafrcnn/tensor/ops.hpp"

namespace bafrcnn::testing {

using TensorD = tensor::Tensor<double>;
using TapeD = tensor::Tape<double>;
using ScalarFn = std::function<TensorD(TapeD&, const std::vector<TensorD>&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked_inputs = 0;
};

/// Compares analytic gradients of every requires_grad input with
/// `expected_factor` times the central difference (expected_factor = -w for a
/// function routed through one gradient reversal of weight w). Relative error
/// per input is ||a - e|| / max(||a|| + ||e||, 1e-12).
inline GradCheckResult check_gradients(const std::vector<TensorD>& inputs, const ScalarFn& fn,
                                       double step = 1e-5, double expected_factor = 1.0) {
  std::vector<TensorD> live;
  live.reserve(inputs.size());
  for (const auto& t : inputs) live.push_back(t.clone());

  TapeD tape;
  TensorD loss = fn(tape, live);
  tape.backward(loss);

  GradCheckResult result;
  for (std::size_t i = 0; i < live.size(); ++i) {
    if (!live[i].requires_grad()) continue;
    ++result.checked_inputs;
    TensorD probe = live[i];
    auto values = probe.mutable_data();
    const auto analytic = probe.grad();
    double diff2 = 0.0, a2 = 0.0, e2 = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + step;
      TapeD off(false);
      const double fp = fn(off, live).item();
      values[j] = saved - step;
      const double fm = fn(off, live).item();
      values[j] = saved;
      const double expected = expected_factor * (fp - fm) / (2.0 * step);
      diff2 += (analytic[j] - expected) * (analytic[j] - expected);
      a2 += analytic[j] * analytic[j];
      e2 += expected * expected;
    }
    const double denom = std::max(std::sqrt(a2) + std::sqrt(e2), 1e-12);
    result.max_rel_error = std::max(result.max_rel_error, std::sqrt(diff2) / denom);
  }
  return result;
}

inline TensorD random_tensor(Rng& rng, tensor::Shape shape, bool requires_grad, double lo = -1.0, double hi = 1.0) {
  TensorD t(std::move(shape), requires_grad);
  for (double& v : t.mutable_data()) v = rng.uniform(lo, hi);
  return t;
}

/// Values bounded away from zero, for kinked ops such as relu.
inline TensorD random_away_from_zero(Rng& rng, tensor::Shape shape, bool requires_grad) {
  TensorD t(std::move(shape), requires_grad);
  for (double& v : t.mutable_data()) {
    const double m = rng.uniform(0.05, 1.0);
    v = rng.bernoulli(0.5) ? m : -m;
  }
  return t;
}

/// Contracts any tensor to a scalar with fixed random weights so that every
/// output element carries a distinct upstream gradient.
inline TensorD project(TapeD& tape, const TensorD& out, std::uint64_t seed) {
  Rng rng(seed);
  TensorD weights(out.shape());
  for (double& v : weights.mutable_data()) v = rng.uniform(-1.0, 1.0);
  return tensor::sum(tape, tensor::mul(tape, out, weights));
}

struct GradCase {
  std::string name;
  std::function<GradCheckResult(Rng&)> run;
};

inline std::vector<GradCase> gradient_cases() {
  using namespace tensor;
  std::vector<GradCase> cases;

  cases.push_back({"conv2d", [](Rng& rng) {
    const std::size_t n = 1 + rng.index(2), c = 1 + rng.index(3), o = 1 + rng.index(3);
    const std::size_t k = 1 + rng.index(3), stride = 1 + rng.index(2), pad = rng.index(2);
    const std::size_t h = 5 + rng.index(4), w = 5 + rng.index(4);
    const std::uint64_t seed = rng.next_u64();
    return check_gradients(
        {random_tensor(rng, {n, c, h, w}, true), random_tensor(rng, {o, c, k, k}, true), random_tensor(rng, {o}, true)},
        [=](TapeD& t, const std::vector<TensorD>& in) {
          return project(t, conv2d(t, in[0], in[1], in[2], Conv2dOptions{stride, pad}), seed);
        });
  }});
  cases.push_back({"conv2d_1x1x6x6_k3", [](Rng& rng) {
    const std::uint64_t seed = rng.next_u64();
    return check_gradients({random_tensor(rng, {1, 1, 6, 6}, true), random_tensor(rng, {1, 1, 3, 3}, true)},
                           [=](TapeD& t, const std::vector<TensorD>& in) {
                             return project(t, conv2d(t, in[0], in[1], TensorD{}, Conv2dOptions{1, 0}), seed);
                           });
  }});
  cases.push_back({"linear", [](Rng& rng) {
    const std::size_t n = 1 + rng.index(4), f = 1 + rng.index(6), o = 1 + rng.index(5);
    const std::uint64_t seed = rng.next_u64();
    return check_gradients(
        {random_tensor(rng, {n, f}, true), random_tensor(rng, {o, f}, true), random_tensor(rng, {o}, true)},
        [=](TapeD& t, const std::vector<TensorD>& in) { return project(t, linear(t, in[0], in[1], in[2]), seed); });
  }});
  cases.push_back({"relu", [](Rng& rng) {
    const std::uint64_t seed = rng.next_u64();
    return check_gradients({random_away_from_zero(rng, {2, 3, 4}, true)},
                           [=](TapeD& t, const std::vector<TensorD>& in) { return project(t, relu(t, in[0]), seed); });
  }});
  cases.push_back({"sigmoid", [](Rng& rng) {
    const std::uint64_t seed = rng.next_u64();
    return check_gradients({random_tensor(rng, {3, 5}, true, -4.0, 4.0)},
                           [=](TapeD& t, const std::vector<TensorD>& in) { return project(t, sigmoid(t, in[0]), seed); });
  }});
  cases.push_back({"max_pool2d", [](Rng& rng) {
    // Distinct values spaced well beyond the difference step so no window ties.
    const std::size_t c = 1 + rng.index(3), h = 4 + rng.index(4), w = 4 + rng.index(4);
    TensorD x({1, c, h, w}, true);
    auto v = x.mutable_data();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.01 * static_cast<double>(i);
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
    const std::uint64_t seed = rng.next_u64();
    return check_gradients({x}, [=](TapeD& t, const std::vector<TensorD>& in) { return project(t, max_pool2d(t, in[0]), seed); });
  }});
  cases.push_back({"mean_sum", [](Rng& rng) {
    return check_gradients({random_tensor(rng, {4, 3}, true), random_tensor(rng, {4, 3}, true)},
                           [](TapeD& t, const std::vector<TensorD>& in) {
                             TensorD m = mul(t, mean(t, in[0]), sum(t, in[1]));
                             return add(t, m, mean(t, mul(t, in[0], in[0])));
                           });
  }});
  cases.push_back({"add_sub_mul_scale", [](Rng& rng) {
    const std::uint64_t seed = rng.next_u64();
    return check_gradients({random_tensor(rng, {5}, true), random_tensor(rng, {5}, true)},
                           [=](TapeD& t, const std::vector<TensorD>& in) {
                             TensorD y = mul(t, add(t, in[0], in[1]), sub(t, in[0], scale(t, in[1], 0.7)));
                             return project(t, y, seed);
                           });
  }});
  cases.push_back({"gather_broadcast_reshape", [](Rng& rng) {
    std::vector<std::size_t> idx(1 + rng.index(6));
    for (auto& i : idx) i = rng.index(12);
    const std::uint64_t seed = rng.next_u64();
    return check_gradients({random_tensor(rng, {3, 4}, true), random_tensor(rng, {1}, true)},
                           [=](TapeD& t, const std::vector<TensorD>& in) {
                             TensorD g = gather(t, reshape(t, in[0], Shape{12}), idx);
                             TensorD rows = gather_rows(t, in[0], std::vector<std::size_t>{2, 0});
                             TensorD b = broadcast(t, in[1], idx.size());
                             return add(t, project(t, mul(t, g, b), seed), project(t, rows, seed + 1));
                           });
  }});
  cases.push_back({"roi_align", [](Rng& rng) {
    const double x0 = rng.uniform(-8.0, 40.0), y0 = rng.uniform(-8.0, 40.0);
    const detector::Box box{x0, y0, x0 + rng.uniform(6.0, 40.0), y0 + rng.uniform(6.0, 40.0)};
    const std::size_t oh = 1 + rng.index(4), ow = 1 + rng.index(4);
    const std::uint64_t seed = rng.next_u64();
    return check_gradients({random_tensor(rng, {1, 4, 8, 8}, true)}, [=](TapeD& t, const std::vector<TensorD>& in) {
      const std::vector<detector::Box> boxes{box, detector::Box{4.0, 4.0, 30.0, 20.0}};
      return project(t, roi_align(t, in[0], boxes, 8, oh, ow).features, seed);
    });
  }});
  cases.push_back({"binary_cross_entropy", [](Rng& rng) {
    std::vector<double> labels(6);
    for (auto& l : labels) l = rng.bernoulli(0.5) ? 1.0 : 0.0;
    return check_gradients({random_tensor(rng, {6}, true, 0.05, 0.95)},
                           [=](TapeD& t, const std::vector<TensorD>& in) { return binary_cross_entropy(t, in[0], std::span<const double>(labels)); });
  }});
  cases.push_back({"binary_cross_entropy_with_logits", [](Rng& rng) {
    std::vector<double> labels(6);
    for (auto& l : labels) l = rng.bernoulli(0.5) ? 1.0 : 0.0;
    return check_gradients({random_tensor(rng, {6}, true, -5.0, 5.0)}, [=](TapeD& t, const std::vector<TensorD>& in) {
      return binary_cross_entropy_with_logits(t, in[0], std::span<const double>(labels));
    });
  }});
  cases.push_back({"smooth_l1", [](Rng& rng) {
    // Residuals kept off the |d| = 1 kink.
    TensorD pred({8}, true), target({8}, true);
    for (std::size_t i = 0; i < 8; ++i) {
      const double d = rng.bernoulli(0.5) ? rng.uniform(-0.9, 0.9) : (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(1.1, 3.0);
      target.mutable_data()[i] = rng.uniform(-1.0, 1.0);
      pred.mutable_data()[i] = target[i] + d;
    }
    return check_gradients({pred, target}, [](TapeD& t, const std::vector<TensorD>& in) { return smooth_l1(t, in[0], in[1]); });
  }});
  cases.push_back({"softmax_cross_entropy", [](Rng& rng) {
    const std::size_t n = 1 + rng.index(4), k = 2 + rng.index(4);
    std::vector<std::size_t> labels(n);
    for (auto& l : labels) l = rng.index(k);
    return check_gradients({random_tensor(rng, {n, k}, true, -3.0, 3.0)},
                           [=](TapeD& t, const std::vector<TensorD>& in) { return softmax_cross_entropy(t, in[0], labels); });
  }});
  cases.push_back({"conv_relu_mean", [](Rng& rng) {
    return check_gradients({random_tensor(rng, {1, 2, 6, 6}, false), random_tensor(rng, {3, 2, 3, 3}, true),
                            random_tensor(rng, {3}, true)},
                           [](TapeD& t, const std::vector<TensorD>& in) {
                             return mean(t, relu(t, conv2d(t, in[0], in[1], in[2], Conv2dOptions{1, 1})));
                           });
  }});
  cases.push_back({"grad_reverse_composite", [](Rng& rng) {
    static constexpr double kWeights[] = {0.0, 0.1, 1.0};
    const double weight = kWeights[rng.index(3)];
    const std::uint64_t seed = rng.next_u64();
    // Everything upstream of the reversal sees -weight times the honest gradient.
    return check_gradients(
        {random_tensor(rng, {1, 2, 5, 5}, true), random_tensor(rng, {2, 2, 3, 3}, true)},
        [=](TapeD& t, const std::vector<TensorD>& in) {
          TensorD h = conv2d(t, in[0], in[1], TensorD{}, Conv2dOptions{1, 1});
          return project(t, sigmoid(t, grad_reverse(t, h, weight)), seed);
        },
        1e-5, -weight);
  }});
  return cases;
}

}  // namespace bafrcnn::testing
