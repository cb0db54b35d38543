#include "bafrcnn/tensor/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bafrcnn::tensor {
namespace {

template <typename Real>
using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Real>
using MatMap = Eigen::Map<RowMat<Real>>;
template <typename Real>
using ConstMatMap = Eigen::Map<const RowMat<Real>>;

[[noreturn]] void shape_error(const char* op, const std::string& what, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": " + what + " (" + shape_string(a) + " vs " +
                              shape_string(b) + ")");
}

[[noreturn]] void shape_error(const char* op, const std::string& what, const Shape& a) {
  throw std::invalid_argument(std::string(op) + ": " + what + " (" + shape_string(a) + ")");
}

template <typename Real>
void require_defined(const char* op, const Tensor<Real>& t) {
  if (!t.defined()) throw std::invalid_argument(std::string(op) + ": undefined input tensor");
}

template <typename Real>
Tensor<Real> make_output(Tape<Real>& tape, Shape shape, bool record) {
  (void)tape;
  return Tensor<Real>(std::move(shape), record);
}

// Column layout: row = (c, ky, kx), column = (oy, ox).
template <typename Real>
void im2col(const Real* in, std::size_t c, std::size_t h, std::size_t w, std::size_t kh, std::size_t kw,
            std::size_t stride, std::size_t pad, std::size_t oh, std::size_t ow, Real* cols) {
  const auto ih = static_cast<std::ptrdiff_t>(h);
  const auto iw = static_cast<std::ptrdiff_t>(w);
  for (std::size_t ci = 0; ci < c; ++ci) {
    const Real* plane = in + ci * h * w;
    for (std::size_t ky = 0; ky < kh; ++ky) {
      for (std::size_t kx = 0; kx < kw; ++kx) {
        Real* row = cols + ((ci * kh + ky) * kw + kx) * oh * ow;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
          Real* dst = row + oy * ow;
          if (y < 0 || y >= ih) {
            std::fill(dst, dst + ow, Real{0});
            continue;
          }
          const Real* src = plane + y * iw;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
            dst[ox] = (x < 0 || x >= iw) ? Real{0} : src[x];
          }
        }
      }
    }
  }
}

template <typename Real>
void col2im_add(const Real* cols, std::size_t c, std::size_t h, std::size_t w, std::size_t kh, std::size_t kw,
                std::size_t stride, std::size_t pad, std::size_t oh, std::size_t ow, Real* out) {
  const auto ih = static_cast<std::ptrdiff_t>(h);
  const auto iw = static_cast<std::ptrdiff_t>(w);
  for (std::size_t ci = 0; ci < c; ++ci) {
    Real* plane = out + ci * h * w;
    for (std::size_t ky = 0; ky < kh; ++ky) {
      for (std::size_t kx = 0; kx < kw; ++kx) {
        const Real* row = cols + ((ci * kh + ky) * kw + kx) * oh * ow;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
          if (y < 0 || y >= ih) continue;
          const Real* src = row + oy * ow;
          Real* dst = plane + y * iw;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
            if (x >= 0 && x < iw) dst[x] += src[ox];
          }
        }
      }
    }
  }
}

template <typename Real>
Real stable_sigmoid(Real x) {
  if (x >= Real{0}) return Real{1} / (Real{1} + std::exp(-x));
  const Real e = std::exp(x);
  return e / (Real{1} + e);
}

void require_same_shape(const char* op, const Shape& a, const Shape& b) {
  if (a != b) shape_error(op, "shape mismatch", a, b);
}

}  // namespace

template <typename Real>
Tensor<Real> conv2d(Tape<Real>& tape, const Tensor<Real>& input, const Tensor<Real>& weight,
                    const Tensor<Real>& bias, Conv2dOptions options) {
  constexpr const char* op = "conv2d";
  require_defined(op, input);
  require_defined(op, weight);
  if (input.rank() != 4) shape_error(op, "input must be [N,C,H,W]", input.shape());
  if (weight.rank() != 4) shape_error(op, "weight must be [O,C,kh,kw]", weight.shape());
  if (input.dim(1) != weight.dim(1)) shape_error(op, "channel mismatch", input.shape(), weight.shape());
  if (options.stride == 0) throw std::invalid_argument("conv2d: stride must be positive");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t o = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != o)) {
    shape_error(op, "bias must be [O]", bias.shape(), weight.shape());
  }
  if (h + 2 * options.padding < kh || w + 2 * options.padding < kw) {
    shape_error(op, "kernel larger than padded input", input.shape(), weight.shape());
  }
  const std::size_t oh = (h + 2 * options.padding - kh) / options.stride + 1;
  const std::size_t ow = (w + 2 * options.padding - kw) / options.stride + 1;
  const std::size_t ck = c * kh * kw;
  const std::size_t p = oh * ow;

  const bool record = tape.should_record(input, weight, bias);
  Tensor<Real> out = make_output(tape, Shape{n, o, oh, ow}, record);

  auto cols = std::make_shared<std::vector<Real>>(n * ck * p);
  const ConstMatMap<Real> wmat(weight.data().data(), static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(ck));
  for (std::size_t b = 0; b < n; ++b) {
    Real* col = cols->data() + b * ck * p;
    im2col(input.data().data() + b * c * h * w, c, h, w, kh, kw, options.stride, options.padding, oh, ow, col);
    const ConstMatMap<Real> cmat(col, static_cast<Eigen::Index>(ck), static_cast<Eigen::Index>(p));
    MatMap<Real> omat(out.mutable_data().data() + b * o * p, static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(p));
    omat.noalias() = wmat * cmat;
    if (bias.defined()) {
      for (std::size_t oc = 0; oc < o; ++oc) omat.row(static_cast<Eigen::Index>(oc)).array() += bias[oc];
    }
  }

  if (record) {
    tape.record(op, [=, input = input, weight = weight, bias = bias, out = out]() mutable {
      if (!out.has_grad()) return;
      const auto go = out.grad();
      const ConstMatMap<Real> wm(weight.data().data(), static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(ck));
      RowMat<Real> dcols;
      for (std::size_t b = 0; b < n; ++b) {
        const ConstMatMap<Real> g(go.data() + b * o * p, static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(p));
        const ConstMatMap<Real> cm(cols->data() + b * ck * p, static_cast<Eigen::Index>(ck), static_cast<Eigen::Index>(p));
        if (weight.requires_grad()) {
          MatMap<Real> gw(weight.grad_accumulator().data(), static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(ck));
          gw.noalias() += g * cm.transpose();
        }
        if (bias.defined() && bias.requires_grad()) {
          auto gb = bias.grad_accumulator();
          for (std::size_t oc = 0; oc < o; ++oc) gb[oc] += g.row(static_cast<Eigen::Index>(oc)).sum();
        }
        if (input.requires_grad()) {
          dcols.noalias() = wm.transpose() * g;
          col2im_add(dcols.data(), c, h, w, kh, kw, options.stride, options.padding, oh, ow,
                     input.grad_accumulator().data() + b * c * h * w);
        }
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> linear(Tape<Real>& tape, const Tensor<Real>& input, const Tensor<Real>& weight,
                    const Tensor<Real>& bias) {
  constexpr const char* op = "linear";
  require_defined(op, input);
  require_defined(op, weight);
  if (input.rank() != 2) shape_error(op, "input must be [N,F]", input.shape());
  if (weight.rank() != 2 || weight.dim(1) != input.dim(1)) {
    shape_error(op, "weight must be [O,F]", input.shape(), weight.shape());
  }
  const std::size_t n = input.dim(0), f = input.dim(1), o = weight.dim(0);
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != o)) shape_error(op, "bias must be [O]", bias.shape(), weight.shape());

  const bool record = tape.should_record(input, weight, bias);
  Tensor<Real> out = make_output(tape, Shape{n, o}, record);
  const auto N = static_cast<Eigen::Index>(n), F = static_cast<Eigen::Index>(f), O = static_cast<Eigen::Index>(o);
  {
    const ConstMatMap<Real> x(input.data().data(), N, F);
    const ConstMatMap<Real> wm(weight.data().data(), O, F);
    MatMap<Real> y(out.mutable_data().data(), N, O);
    y.noalias() = x * wm.transpose();
    if (bias.defined()) {
      for (Eigen::Index r = 0; r < N; ++r)
        for (Eigen::Index k = 0; k < O; ++k) y(r, k) += bias[static_cast<std::size_t>(k)];
    }
  }
  if (record) {
    tape.record(op, [=, input = input, weight = weight, bias = bias, out = out]() mutable {
      if (!out.has_grad()) return;
      const ConstMatMap<Real> g(out.grad().data(), N, O);
      const ConstMatMap<Real> x(input.data().data(), N, F);
      const ConstMatMap<Real> wm(weight.data().data(), O, F);
      if (weight.requires_grad()) {
        MatMap<Real> gw(weight.grad_accumulator().data(), O, F);
        gw.noalias() += g.transpose() * x;
      }
      if (bias.defined() && bias.requires_grad()) {
        auto gb = bias.grad_accumulator();
        for (Eigen::Index k = 0; k < O; ++k) gb[static_cast<std::size_t>(k)] += g.col(k).sum();
      }
      if (input.requires_grad()) {
        MatMap<Real> gx(input.grad_accumulator().data(), N, F);
        gx.noalias() += g * wm;
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> relu(Tape<Real>& tape, const Tensor<Real>& input) {
  require_defined("relu", input);
  const bool record = tape.should_record(input);
  Tensor<Real> out = make_output(tape, input.shape(), record);
  auto x = input.data();
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > Real{0} ? x[i] : Real{0};
  if (record) {
    tape.record("relu", [input = input, out = out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto xv = input.data();
      auto gi = input.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (xv[i] > Real{0}) gi[i] += g[i];
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> sigmoid(Tape<Real>& tape, const Tensor<Real>& input) {
  require_defined("sigmoid", input);
  const bool record = tape.should_record(input);
  Tensor<Real> out = make_output(tape, input.shape(), record);
  auto x = input.data();
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = stable_sigmoid(x[i]);
  if (record) {
    tape.record("sigmoid", [input = input, out = out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto yv = out.data();
      auto gi = input.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * yv[i] * (Real{1} - yv[i]);
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> max_pool2d(Tape<Real>& tape, const Tensor<Real>& input) {
  constexpr const char* op = "max_pool2d";
  require_defined(op, input);
  if (input.rank() != 4) shape_error(op, "input must be [N,C,H,W]", input.shape());
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h < 2 || w < 2) shape_error(op, "spatial extent below window size", input.shape());
  const std::size_t oh = h / 2, ow = w / 2;
  const bool record = tape.should_record(input);
  Tensor<Real> out = make_output(tape, Shape{n, c, oh, ow}, record);
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.numel());
  auto x = input.data();
  auto y = out.mutable_data();
  std::size_t k = 0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox, ++k) {
        std::size_t best = base + (2 * oy) * w + 2 * ox;
        const std::array<std::size_t, 3> rest = {best + 1, best + w, best + w + 1};
        for (std::size_t cand : rest)
          if (x[cand] > x[best]) best = cand;
        y[k] = x[best];
        (*argmax)[k] = best;
      }
    }
  }
  if (record) {
    tape.record(op, [input = input, out = out, argmax]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto gi = input.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i) gi[(*argmax)[i]] += g[i];
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> sum(Tape<Real>& tape, const Tensor<Real>& input) {
  require_defined("sum", input);
  const bool record = tape.should_record(input);
  Tensor<Real> out = make_output(tape, Shape{1}, record);
  Real acc{0};
  for (Real v : input.data()) acc += v;
  out.mutable_data()[0] = acc;
  if (record) {
    tape.record("sum", [input = input, out = out]() mutable {
      if (!out.has_grad()) return;
      const Real g = out.grad()[0];
      for (Real& gi : input.grad_accumulator()) gi += g;
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> mean(Tape<Real>& tape, const Tensor<Real>& input) {
  require_defined("mean", input);
  const bool record = tape.should_record(input);
  Tensor<Real> out = make_output(tape, Shape{1}, record);
  Real acc{0};
  for (Real v : input.data()) acc += v;
  const Real inv = Real{1} / static_cast<Real>(input.numel());
  out.mutable_data()[0] = acc * inv;
  if (record) {
    tape.record("mean", [input = input, out = out, inv]() mutable {
      if (!out.has_grad()) return;
      const Real g = out.grad()[0] * inv;
      for (Real& gi : input.grad_accumulator()) gi += g;
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> add(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b) {
  require_defined("add", a);
  require_defined("add", b);
  require_same_shape("add", a.shape(), b.shape());
  const bool record = tape.should_record(a, b);
  Tensor<Real> out = make_output(tape, a.shape(), record);
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] + b[i];
  if (record) {
    tape.record("add", [a = a, b = b, out = out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_accumulator();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_accumulator();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> sub(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b) {
  require_defined("sub", a);
  require_defined("sub", b);
  require_same_shape("sub", a.shape(), b.shape());
  const bool record = tape.should_record(a, b);
  Tensor<Real> out = make_output(tape, a.shape(), record);
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] - b[i];
  if (record) {
    tape.record("sub", [a = a, b = b, out = out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_accumulator();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_accumulator();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> mul(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b) {
  require_defined("mul", a);
  require_defined("mul", b);
  require_same_shape("mul", a.shape(), b.shape());
  const bool record = tape.should_record(a, b);
  Tensor<Real> out = make_output(tape, a.shape(), record);
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] * b[i];
  if (record) {
    tape.record("mul", [a = a, b = b, out = out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_accumulator();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_accumulator();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> scale(Tape<Real>& tape, const Tensor<Real>& input, Real factor) {
  require_defined("scale", input);
  const bool record = tape.should_record(input);
  Tensor<Real> out = make_output(tape, input.shape(), record);
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = input[i] * factor;
  if (record) {
    tape.record("scale", [input = input, out = out, factor]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto gi = input.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * factor;
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> grad_reverse(Tape<Real>& tape, const Tensor<Real>& input, Real weight) {
  require_defined("grad_reverse", input);
  if (!(weight >= Real{0})) {
    throw std::invalid_argument("grad_reverse: weight must be nonnegative, got " + std::to_string(weight));
  }
  const bool record = tape.should_record(input);
  Tensor<Real> out = make_output(tape, input.shape(), record);
  std::copy(input.data().begin(), input.data().end(), out.mutable_data().begin());
  if (record) {
    tape.record("grad_reverse", [input = input, out = out, weight]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto gi = input.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += -weight * g[i];
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> reshape(Tape<Real>& tape, const Tensor<Real>& input, Shape shape) {
  require_defined("reshape", input);
  if (shape_numel(shape) != input.numel()) shape_error("reshape", "element count mismatch", input.shape(), shape);
  const bool record = tape.should_record(input);
  Tensor<Real> out(std::move(shape), std::vector<Real>(input.data().begin(), input.data().end()), record);
  if (record) {
    tape.record("reshape", [input = input, out = out]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto gi = input.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> gather(Tape<Real>& tape, const Tensor<Real>& input, std::span<const std::size_t> indices) {
  require_defined("gather", input);
  if (indices.empty()) throw std::invalid_argument("gather: empty index list");
  for (std::size_t idx : indices) {
    if (idx >= input.numel()) {
      throw std::invalid_argument("gather: index " + std::to_string(idx) + " out of range for " + shape_string(input.shape()));
    }
  }
  const bool record = tape.should_record(input);
  Tensor<Real> out = make_output(tape, Shape{indices.size()}, record);
  auto y = out.mutable_data();
  for (std::size_t k = 0; k < indices.size(); ++k) y[k] = input[indices[k]];
  if (record) {
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    tape.record("gather", [input = input, out = out, idx = std::move(idx)]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto gi = input.grad_accumulator();
      for (std::size_t k = 0; k < idx.size(); ++k) gi[idx[k]] += g[k];
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> gather_rows(Tape<Real>& tape, const Tensor<Real>& input, std::span<const std::size_t> rows) {
  require_defined("gather_rows", input);
  if (rows.empty()) throw std::invalid_argument("gather_rows: empty row list");
  const std::size_t n = input.dim(0);
  const std::size_t row_size = input.numel() / n;
  for (std::size_t r : rows) {
    if (r >= n) throw std::invalid_argument("gather_rows: row " + std::to_string(r) + " out of range for " + shape_string(input.shape()));
  }
  Shape shape = input.shape();
  shape[0] = rows.size();
  const bool record = tape.should_record(input);
  Tensor<Real> out = make_output(tape, std::move(shape), record);
  auto y = out.mutable_data();
  auto x = input.data();
  for (std::size_t k = 0; k < rows.size(); ++k)
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(rows[k] * row_size), row_size, y.begin() + static_cast<std::ptrdiff_t>(k * row_size));
  if (record) {
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    tape.record("gather_rows", [input = input, out = out, idx = std::move(idx), row_size]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto gi = input.grad_accumulator();
      for (std::size_t k = 0; k < idx.size(); ++k)
        for (std::size_t j = 0; j < row_size; ++j) gi[idx[k] * row_size + j] += g[k * row_size + j];
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> broadcast(Tape<Real>& tape, const Tensor<Real>& scalar, std::size_t n) {
  require_defined("broadcast", scalar);
  if (scalar.numel() != 1) shape_error("broadcast", "input must hold one element", scalar.shape());
  if (n == 0) throw std::invalid_argument("broadcast: target length must be positive");
  const bool record = tape.should_record(scalar);
  Tensor<Real> out = make_output(tape, Shape{n}, record);
  std::fill(out.mutable_data().begin(), out.mutable_data().end(), scalar[0]);
  if (record) {
    tape.record("broadcast", [scalar = scalar, out = out]() mutable {
      if (!out.has_grad()) return;
      Real acc{0};
      for (Real g : out.grad()) acc += g;
      scalar.grad_accumulator()[0] += acc;
    });
  }
  return out;
}

template <typename Real>
RoiAlignResult<Real> roi_align(Tape<Real>& tape, const Tensor<Real>& feature_map,
                               std::span<const detector::Box> boxes, std::size_t stride,
                               std::size_t out_h, std::size_t out_w) {
  constexpr const char* op = "roi_align";
  require_defined(op, feature_map);
  if (!(feature_map.rank() == 3 || (feature_map.rank() == 4 && feature_map.dim(0) == 1))) {
    shape_error(op, "feature map must be [C,H,W] or [1,C,H,W]", feature_map.shape());
  }
  if (stride == 0 || out_h == 0 || out_w == 0) throw std::invalid_argument("roi_align: stride and output size must be positive");
  const std::size_t off = feature_map.rank() == 4 ? 1 : 0;
  const std::size_t c = feature_map.dim(off), h = feature_map.dim(off + 1), w = feature_map.dim(off + 2);
  const double img_w = static_cast<double>(w * stride);
  const double img_h = static_cast<double>(h * stride);
  const double s = static_cast<double>(stride);

  struct Sample {
    std::array<std::size_t, 4> idx;
    std::array<Real, 4> wt;
  };

  RoiAlignResult<Real> result;
  std::vector<Sample> samples;
  for (std::size_t bi = 0; bi < boxes.size(); ++bi) {
    const detector::Box clipped = boxes[bi].clipped(img_w, img_h);
    if (!clipped.valid()) continue;
    result.kept.push_back(bi);
    const double fx0 = clipped.x_min / s, fy0 = clipped.y_min / s;
    const double bin_w = (clipped.x_max - clipped.x_min) / s / static_cast<double>(out_w);
    const double bin_h = (clipped.y_max - clipped.y_min) / s / static_cast<double>(out_h);
    for (std::size_t py = 0; py < out_h; ++py) {
      double y = fy0 + (static_cast<double>(py) + 0.5) * bin_h - 0.5;
      y = std::clamp(y, 0.0, static_cast<double>(h - 1));
      const auto y0 = static_cast<std::size_t>(std::floor(y));
      const std::size_t y1 = std::min(y0 + 1, h - 1);
      const double ly = y - static_cast<double>(y0);
      for (std::size_t px = 0; px < out_w; ++px) {
        double x = fx0 + (static_cast<double>(px) + 0.5) * bin_w - 0.5;
        x = std::clamp(x, 0.0, static_cast<double>(w - 1));
        const auto x0 = static_cast<std::size_t>(std::floor(x));
        const std::size_t x1 = std::min(x0 + 1, w - 1);
        const double lx = x - static_cast<double>(x0);
        samples.push_back(Sample{{y0 * w + x0, y0 * w + x1, y1 * w + x0, y1 * w + x1},
                                 {static_cast<Real>((1 - ly) * (1 - lx)), static_cast<Real>((1 - ly) * lx),
                                  static_cast<Real>(ly * (1 - lx)), static_cast<Real>(ly * lx)}});
      }
    }
  }
  if (result.kept.empty()) return result;

  const std::size_t r = result.kept.size();
  const std::size_t cells = out_h * out_w;
  const bool record = tape.should_record(feature_map);
  result.features = make_output(tape, Shape{r, c, out_h, out_w}, record);
  auto x = feature_map.data();
  auto y = result.features.mutable_data();
  for (std::size_t ri = 0; ri < r; ++ri) {
    for (std::size_t ci = 0; ci < c; ++ci) {
      const Real* plane = x.data() + ci * h * w;
      Real* dst = y.data() + (ri * c + ci) * cells;
      for (std::size_t k = 0; k < cells; ++k) {
        const Sample& sm = samples[ri * cells + k];
        dst[k] = sm.wt[0] * plane[sm.idx[0]] + sm.wt[1] * plane[sm.idx[1]] + sm.wt[2] * plane[sm.idx[2]] +
                 sm.wt[3] * plane[sm.idx[3]];
      }
    }
  }
  if (record) {
    tape.record(op, [fm = feature_map, out = result.features, samples = std::move(samples), r, c, h, w, cells]() mutable {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto gi = fm.grad_accumulator();
      for (std::size_t ri = 0; ri < r; ++ri) {
        for (std::size_t ci = 0; ci < c; ++ci) {
          Real* plane = gi.data() + ci * h * w;
          const Real* src = g.data() + (ri * c + ci) * cells;
          for (std::size_t k = 0; k < cells; ++k) {
            const Sample& sm = samples[ri * cells + k];
            for (std::size_t q = 0; q < 4; ++q) plane[sm.idx[q]] += sm.wt[q] * src[k];
          }
        }
      }
    });
  }
  return result;
}

#define BAFRCNN_INSTANTIATE_OPS(Real)                                                                          \
  template Tensor<Real> conv2d(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&,     \
                               Conv2dOptions);                                                                 \
  template Tensor<Real> linear(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&);    \
  template Tensor<Real> relu(Tape<Real>&, const Tensor<Real>&);                                                \
  template Tensor<Real> sigmoid(Tape<Real>&, const Tensor<Real>&);                                             \
  template Tensor<Real> max_pool2d(Tape<Real>&, const Tensor<Real>&);                                          \
  template Tensor<Real> mean(Tape<Real>&, const Tensor<Real>&);                                                \
  template Tensor<Real> sum(Tape<Real>&, const Tensor<Real>&);                                                 \
  template Tensor<Real> add(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&);                            \
  template Tensor<Real> sub(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&);                            \
  template Tensor<Real> mul(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&);                            \
  template Tensor<Real> scale(Tape<Real>&, const Tensor<Real>&, Real);                                         \
  template Tensor<Real> grad_reverse(Tape<Real>&, const Tensor<Real>&, Real);                                  \
  template Tensor<Real> reshape(Tape<Real>&, const Tensor<Real>&, Shape);                                      \
  template Tensor<Real> gather(Tape<Real>&, const Tensor<Real>&, std::span<const std::size_t>);                \
  template Tensor<Real> gather_rows(Tape<Real>&, const Tensor<Real>&, std::span<const std::size_t>);           \
  template Tensor<Real> broadcast(Tape<Real>&, const Tensor<Real>&, std::size_t);                              \
  template RoiAlignResult<Real> roi_align(Tape<Real>&, const Tensor<Real>&, std::span<const detector::Box>,    \
                                          std::size_t, std::size_t, std::size_t);

BAFRCNN_INSTANTIATE_OPS(float)
BAFRCNN_INSTANTIATE_OPS(double)

#undef BAFRCNN_INSTANTIATE_OPS

}  // namespace bafrcnn::tensor
