#pragma once

#include <cstddef>
#include <span>

#include "bafrcnn/tensor/tape.hpp"
#include "bafrcnn/tensor/tensor.hpp"

namespace bafrcnn::tensor {

inline constexpr double kProbabilityEpsilon = 1e-7;

/// Mean of -[l ln p + (1-l) ln(1-p)] with p clamped to [eps, 1-eps]. Clamped
/// elements receive zero gradient. An undefined `prob` stands for an empty
/// batch: the result is a constant 0 and a warning is logged.
template <typename Real>
Tensor<Real> binary_cross_entropy(Tape<Real>& tape, const Tensor<Real>& prob, std::span<const Real> labels);

/// Same objective evaluated from logits, ln(1 + e^x) - l*x, without clamping.
template <typename Real>
Tensor<Real> binary_cross_entropy_with_logits(Tape<Real>& tape, const Tensor<Real>& logits,
                                              std::span<const Real> labels);

/// Mean over elements of 0.5 d^2 (|d| < 1) or |d| - 0.5, d = pred - target.
template <typename Real>
Tensor<Real> smooth_l1(Tape<Real>& tape, const Tensor<Real>& pred, const Tensor<Real>& target);

/// logits [N,K]; mean over rows of -ln softmax(row)[label].
template <typename Real>
Tensor<Real> softmax_cross_entropy(Tape<Real>& tape, const Tensor<Real>& logits,
                                   std::span<const std::size_t> labels);

}  // namespace bafrcnn::tensor
