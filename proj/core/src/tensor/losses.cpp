#include "bafrcnn/tensor/losses.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bafrcnn/common/error.hpp"

namespace bafrcnn::tensor {
namespace {

void require_finite(const char* op, double v) {
  if (!std::isfinite(v)) throw NumericalError(std::string(op) + ": non-finite loss value");
}

}  // namespace

template <typename Real>
Tensor<Real> binary_cross_entropy(Tape<Real>& tape, const Tensor<Real>& prob, std::span<const Real> labels) {
  if (!prob.defined()) {
    std::clog << "warning: binary_cross_entropy on an empty batch contributes 0\n";
    return Tensor<Real>::scalar(Real{0});
  }
  if (labels.size() != prob.numel()) {
    throw std::invalid_argument("binary_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                                shape_string(prob.shape()) + " probabilities");
  }
  const double lo = kProbabilityEpsilon, hi = 1.0 - kProbabilityEpsilon;
  const std::size_t n = prob.numel();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double l = static_cast<double>(labels[i]);
    if (l != 0.0 && l != 1.0) throw std::invalid_argument("binary_cross_entropy: labels must be 0 or 1");
    const double p = std::clamp(static_cast<double>(prob[i]), lo, hi);
    acc -= l * std::log(p) + (1.0 - l) * std::log(1.0 - p);
  }
  const double loss = acc / static_cast<double>(n);
  require_finite("binary_cross_entropy", loss);
  const bool record = tape.should_record(prob);
  Tensor<Real> out(Shape{1}, std::vector<Real>{static_cast<Real>(loss)}, record);
  if (record) {
    std::vector<Real> lab(labels.begin(), labels.end());
    tape.record("binary_cross_entropy", [prob = prob, out = out, lab = std::move(lab), lo, hi]() mutable {
      if (!out.has_grad()) return;
      const double g = static_cast<double>(out.grad()[0]) / static_cast<double>(lab.size());
      auto gi = prob.grad_accumulator();
      for (std::size_t i = 0; i < lab.size(); ++i) {
        const double p = static_cast<double>(prob[i]);
        if (p <= lo || p >= hi) continue;
        const double l = static_cast<double>(lab[i]);
        gi[i] += static_cast<Real>(g * (-l / p + (1.0 - l) / (1.0 - p)));
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> binary_cross_entropy_with_logits(Tape<Real>& tape, const Tensor<Real>& logits,
                                              std::span<const Real> labels) {
  if (!logits.defined()) {
    std::clog << "warning: binary_cross_entropy_with_logits on an empty batch contributes 0\n";
    return Tensor<Real>::scalar(Real{0});
  }
  if (labels.size() != logits.numel()) {
    throw std::invalid_argument("binary_cross_entropy_with_logits: " + std::to_string(labels.size()) +
                                " labels for " + shape_string(logits.shape()) + " logits");
  }
  const std::size_t n = logits.numel();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(logits[i]);
    const double l = static_cast<double>(labels[i]);
    if (l != 0.0 && l != 1.0) throw std::invalid_argument("binary_cross_entropy_with_logits: labels must be 0 or 1");
    // ln(1 + e^x) - l x, evaluated without overflow.
    acc += std::max(x, 0.0) - l * x + std::log1p(std::exp(-std::abs(x)));
  }
  const double loss = acc / static_cast<double>(n);
  require_finite("binary_cross_entropy_with_logits", loss);
  const bool record = tape.should_record(logits);
  Tensor<Real> out(Shape{1}, std::vector<Real>{static_cast<Real>(loss)}, record);
  if (record) {
    std::vector<Real> lab(labels.begin(), labels.end());
    tape.record("binary_cross_entropy_with_logits", [logits = logits, out = out, lab = std::move(lab)]() mutable {
      if (!out.has_grad()) return;
      const double g = static_cast<double>(out.grad()[0]) / static_cast<double>(lab.size());
      auto gi = logits.grad_accumulator();
      for (std::size_t i = 0; i < lab.size(); ++i) {
        const double x = static_cast<double>(logits[i]);
        const double p = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        gi[i] += static_cast<Real>(g * (p - static_cast<double>(lab[i])));
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> smooth_l1(Tape<Real>& tape, const Tensor<Real>& pred, const Tensor<Real>& target) {
  if (!pred.defined() || !target.defined()) throw std::invalid_argument("smooth_l1: undefined input tensor");
  if (pred.shape() != target.shape()) {
    throw std::invalid_argument("smooth_l1: shape mismatch (" + shape_string(pred.shape()) + " vs " +
                                shape_string(target.shape()) + ")");
  }
  const std::size_t n = pred.numel();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    const double a = std::abs(d);
    acc += a < 1.0 ? 0.5 * d * d : a - 0.5;
  }
  const double loss = acc / static_cast<double>(n);
  require_finite("smooth_l1", loss);
  const bool record = tape.should_record(pred, target);
  Tensor<Real> out(Shape{1}, std::vector<Real>{static_cast<Real>(loss)}, record);
  if (record) {
    tape.record("smooth_l1", [pred = pred, target = target, out = out]() mutable {
      if (!out.has_grad()) return;
      const double g = static_cast<double>(out.grad()[0]) / static_cast<double>(pred.numel());
      std::vector<double> dd(pred.numel());
      for (std::size_t i = 0; i < dd.size(); ++i) {
        const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
        dd[i] = std::abs(d) < 1.0 ? d : (d > 0 ? 1.0 : -1.0);
      }
      if (pred.requires_grad()) {
        auto gp = pred.grad_accumulator();
        for (std::size_t i = 0; i < dd.size(); ++i) gp[i] += static_cast<Real>(g * dd[i]);
      }
      if (target.requires_grad()) {
        auto gt = target.grad_accumulator();
        for (std::size_t i = 0; i < dd.size(); ++i) gt[i] -= static_cast<Real>(g * dd[i]);
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> softmax_cross_entropy(Tape<Real>& tape, const Tensor<Real>& logits,
                                   std::span<const std::size_t> labels) {
  if (!logits.defined()) throw std::invalid_argument("softmax_cross_entropy: undefined input tensor");
  if (logits.rank() != 2) {
    throw std::invalid_argument("softmax_cross_entropy: logits must be [N,K], got " + shape_string(logits.shape()));
  }
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (labels.size() != n) {
    throw std::invalid_argument("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(n) + " rows");
  }
  auto probs = std::make_shared<std::vector<double>>(n * k);
  double acc = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (labels[r] >= k) {
      throw std::invalid_argument("softmax_cross_entropy: class index " + std::to_string(labels[r]) +
                                  " out of range for K=" + std::to_string(k));
    }
    const Real* row = logits.data().data() + r * k;
    const double m = static_cast<double>(*std::max_element(row, row + k));
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(static_cast<double>(row[j]) - m);
    for (std::size_t j = 0; j < k; ++j) (*probs)[r * k + j] = std::exp(static_cast<double>(row[j]) - m) / z;
    acc += std::log(z) + m - static_cast<double>(row[labels[r]]);
  }
  const double loss = acc / static_cast<double>(n);
  require_finite("softmax_cross_entropy", loss);
  const bool record = tape.should_record(logits);
  Tensor<Real> out(Shape{1}, std::vector<Real>{static_cast<Real>(loss)}, record);
  if (record) {
    std::vector<std::size_t> lab(labels.begin(), labels.end());
    tape.record("softmax_cross_entropy", [logits = logits, out = out, probs, lab = std::move(lab), n, k]() mutable {
      if (!out.has_grad()) return;
      const double g = static_cast<double>(out.grad()[0]) / static_cast<double>(n);
      auto gi = logits.grad_accumulator();
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < k; ++j) {
          const double target = j == lab[r] ? 1.0 : 0.0;
          gi[r * k + j] += static_cast<Real>(g * ((*probs)[r * k + j] - target));
        }
      }
    });
  }
  return out;
}

#define BAFRCNN_INSTANTIATE_LOSSES(Real)                                                                     \
  template Tensor<Real> binary_cross_entropy(Tape<Real>&, const Tensor<Real>&, std::span<const Real>);      \
  template Tensor<Real> binary_cross_entropy_with_logits(Tape<Real>&, const Tensor<Real>&,                   \
                                                         std::span<const Real>);                             \
  template Tensor<Real> smooth_l1(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&);                    \
  template Tensor<Real> softmax_cross_entropy(Tape<Real>&, const Tensor<Real>&, std::span<const std::size_t>);

BAFRCNN_INSTANTIATE_LOSSES(float)
BAFRCNN_INSTANTIATE_LOSSES(double)

#undef BAFRCNN_INSTANTIATE_LOSSES

}  // namespace bafrcnn::tensor
