#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bafrcnn/detector/box.hpp"
#include "bafrcnn/tensor/tape.hpp"
#include "bafrcnn/tensor/tensor.hpp"

// Differentiable primitives. Every op validates shapes, computes its output
// eagerly, and records a backward closure on the tape when any input requires
// grad. Shape errors throw std::invalid_argument naming the op and shapes.

namespace bafrcnn::tensor {

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// input [N,C,H,W], weight [O,C,kh,kw], bias [O] or undefined -> [N,O,OH,OW]
/// with OH = (H + 2*pad - kh) / stride + 1.
template <typename Real>
Tensor<Real> conv2d(Tape<Real>& tape, const Tensor<Real>& input, const Tensor<Real>& weight,
                    const Tensor<Real>& bias, Conv2dOptions options = {});

/// input [N,F], weight [O,F], bias [O] or undefined -> [N,O].
template <typename Real>
Tensor<Real> linear(Tape<Real>& tape, const Tensor<Real>& input, const Tensor<Real>& weight,
                    const Tensor<Real>& bias);

template <typename Real>
Tensor<Real> relu(Tape<Real>& tape, const Tensor<Real>& input);

template <typename Real>
Tensor<Real> sigmoid(Tape<Real>& tape, const Tensor<Real>& input);

/// 2x2 window, stride 2, over the last two axes of [N,C,H,W]. Odd trailing
/// rows/columns are dropped. Ties resolve to the first element in row-major order.
template <typename Real>
Tensor<Real> max_pool2d(Tape<Real>& tape, const Tensor<Real>& input);

/// Mean of all elements -> [1].
template <typename Real>
Tensor<Real> mean(Tape<Real>& tape, const Tensor<Real>& input);

/// Sum of all elements -> [1].
template <typename Real>
Tensor<Real> sum(Tape<Real>& tape, const Tensor<Real>& input);

template <typename Real>
Tensor<Real> add(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b);

template <typename Real>
Tensor<Real> sub(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b);

template <typename Real>
Tensor<Real> mul(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b);

template <typename Real>
Tensor<Real> scale(Tape<Real>& tape, const Tensor<Real>& input, Real factor);

/// Identity forward; backward passes -weight * upstream. Throws on weight < 0.
template <typename Real>
Tensor<Real> grad_reverse(Tape<Real>& tape, const Tensor<Real>& input, Real weight);

/// Same values under a new shape with equal element count.
template <typename Real>
Tensor<Real> reshape(Tape<Real>& tape, const Tensor<Real>& input, Shape shape);

/// Flat gather: out[k] = input.flat[indices[k]] -> [indices.size()].
/// Indices must be nonempty and in range.
template <typename Real>
Tensor<Real> gather(Tape<Real>& tape, const Tensor<Real>& input, std::span<const std::size_t> indices);

/// Rows of a [N, ...] tensor -> [indices.size(), ...].
template <typename Real>
Tensor<Real> gather_rows(Tape<Real>& tape, const Tensor<Real>& input, std::span<const std::size_t> rows);

/// Repeats a [1] tensor n times -> [n].
template <typename Real>
Tensor<Real> broadcast(Tape<Real>& tape, const Tensor<Real>& scalar, std::size_t n);

template <typename Real>
struct RoiAlignResult {
  Tensor<Real> features;             ///< [kept.size(), C, out_h, out_w]; undefined if nothing kept
  std::vector<std::size_t> kept;     ///< indices of boxes that survived clipping
};

/// Bilinear region sampling on feature_map [1,C,H,W] (or [C,H,W]). Each box is
/// clipped to the image extent (W*stride, H*stride) and divided by stride; one
/// bilinear sample is taken at the center of every output cell. Boxes with zero
/// area after clipping are skipped and absent from `kept`.
template <typename Real>
RoiAlignResult<Real> roi_align(Tape<Real>& tape, const Tensor<Real>& feature_map,
                               std::span<const detector::Box> boxes, std::size_t stride,
                               std::size_t out_h, std::size_t out_w);

}  // namespace bafrcnn::tensor
