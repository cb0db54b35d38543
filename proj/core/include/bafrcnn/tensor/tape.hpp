#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bafrcnn/tensor/tensor.hpp"

namespace bafrcnn::tensor {

/// Ordered record of differentiable operations.
///
/// Operations append a backward closure as they execute, so entries are in
/// topological order by construction. backward() runs each closure once in
/// reverse and clears the tape; a second backward() without new recordings is
/// rejected. A tape constructed with grad disabled records nothing and every
/// output it produces has requires_grad == false.
template <typename Real>
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) noexcept = default;
  Tape& operator=(Tape&&) noexcept = default;

  [[nodiscard]] bool grad_enabled() const noexcept { return grad_enabled_; }

  template <typename... Ts>
  [[nodiscard]] bool should_record(const Ts&... inputs) const {
    if (!grad_enabled_) return false;
    return ((inputs.defined() && inputs.requires_grad()) || ...);
  }

  void record(const char* op, std::function<void()> backward_fn) {
    entries_.push_back(Entry{op, std::move(backward_fn)});
    consumed_ = false;
  }

  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }

  /// Op names in recording order; used by tests and diagnostics.
  [[nodiscard]] std::vector<std::string> op_names() const {
    std::vector<std::string> names;
    names.reserve(entries_.size());
    for (const auto& e : entries_) names.emplace_back(e.op);
    return names;
  }

  void backward(Tensor<Real>& loss) {
    if (loss.numel() != 1) {
      throw std::invalid_argument("backward: loss must be a scalar, shape is " + shape_string(loss.shape()));
    }
    if (consumed_) {
      throw std::logic_error("backward: tape already consumed; run a new forward pass first");
    }
    if (loss.requires_grad()) {
      loss.grad_accumulator()[0] += Real{1};
      for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) it->backward();
    }
    entries_.clear();
    consumed_ = true;
  }

  void clear() noexcept {
    entries_.clear();
    consumed_ = false;
  }

 private:
  struct Entry {
    const char* op;
    std::function<void()> backward;
  };

  std::vector<Entry> entries_;
  bool grad_enabled_ = true;
  bool consumed_ = false;
};

}  // namespace bafrcnn::tensor
