#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bafrcnn::tensor {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

inline std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

/// Dense row-major array with an optional gradient accumulator.
///
/// A Tensor is a shared handle: copies alias the same storage, which is how
/// parameters are seen both by the model and by the tape closures that
/// accumulate into them. Use clone() for a deep copy.
///
/// The gradient buffer is allocated on first use and carries a "populated"
/// flag. backward() sets it; zero_grad() clears it. The optimizer refuses
/// parameters whose gradient was never populated.
template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;

  explicit Tensor(Shape shape, bool requires_grad = false)
      : impl_(std::make_shared<Impl>()) {
    check_extents(shape);
    impl_->values.assign(shape_numel(shape), Real{0});
    impl_->shape = std::move(shape);
    impl_->requires_grad = requires_grad;
  }

  Tensor(Shape shape, std::vector<Real> values, bool requires_grad = false)
      : impl_(std::make_shared<Impl>()) {
    check_extents(shape);
    if (shape_numel(shape) != values.size()) {
      throw std::invalid_argument("Tensor: shape " + shape_string(shape) + " holds " +
                                  std::to_string(shape_numel(shape)) + " values, got " +
                                  std::to_string(values.size()));
    }
    impl_->shape = std::move(shape);
    impl_->values = std::move(values);
    impl_->requires_grad = requires_grad;
  }

  static Tensor scalar(Real v) { return Tensor(Shape{1}, std::vector<Real>{v}); }

  static Tensor full(Shape shape, Real v, bool requires_grad = false) {
    const std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<Real>(n, v), requires_grad);
  }

  [[nodiscard]] bool defined() const noexcept { return static_cast<bool>(impl_); }

  [[nodiscard]] const Shape& shape() const { return impl().shape; }
  [[nodiscard]] std::size_t rank() const { return impl().shape.size(); }
  [[nodiscard]] std::size_t dim(std::size_t i) const { return impl().shape.at(i); }
  [[nodiscard]] std::size_t numel() const { return impl().values.size(); }

  [[nodiscard]] std::span<const Real> data() const { return impl().values; }
  [[nodiscard]] std::span<Real> mutable_data() { return impl().values; }
  [[nodiscard]] Real operator[](std::size_t i) const { return impl().values[i]; }

  [[nodiscard]] Real item() const {
    if (numel() != 1) {
      throw std::invalid_argument("Tensor::item: expected a scalar, shape is " + shape_string(shape()));
    }
    return impl().values[0];
  }

  [[nodiscard]] bool requires_grad() const { return impl().requires_grad; }
  void set_requires_grad(bool on) { impl().requires_grad = on; }

  [[nodiscard]] bool has_grad() const { return impl().grad_populated; }

  /// Gradient values; all zeros if never populated.
  [[nodiscard]] std::span<const Real> grad() const {
    Impl& d = impl();
    if (d.grad.size() != d.values.size()) d.grad.assign(d.values.size(), Real{0});
    return d.grad;
  }

  /// Accumulation target for backward closures. Marks the gradient populated.
  [[nodiscard]] std::span<Real> grad_accumulator() {
    Impl& d = impl();
    if (d.grad.size() != d.values.size()) d.grad.assign(d.values.size(), Real{0});
    d.grad_populated = true;
    return d.grad;
  }

  void zero_grad() {
    Impl& d = impl();
    std::fill(d.grad.begin(), d.grad.end(), Real{0});
    d.grad_populated = false;
  }

  [[nodiscard]] Tensor clone() const {
    Tensor t(shape(), std::vector<Real>(data().begin(), data().end()), requires_grad());
    return t;
  }

  [[nodiscard]] Tensor detach() const { return Tensor(shape(), std::vector<Real>(data().begin(), data().end())); }

  [[nodiscard]] bool same_storage(const Tensor& other) const noexcept { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<Real> values;
    std::vector<Real> grad;
    bool requires_grad = false;
    bool grad_populated = false;
  };

  static void check_extents(const Shape& shape) {
    if (shape.empty()) throw std::invalid_argument("Tensor: rank must be at least 1");
    for (std::size_t e : shape) {
      if (e == 0) throw std::invalid_argument("Tensor: extents must be positive, got " + shape_string(shape));
    }
  }

  Impl& impl() const {
    if (!impl_) throw std::logic_error("Tensor: access through an undefined handle");
    return *impl_;
  }

  std::shared_ptr<Impl> impl_;
};

}  // namespace bafrcnn::tensor
