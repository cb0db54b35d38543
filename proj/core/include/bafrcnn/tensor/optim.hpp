#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bafrcnn/tensor/parameter.hpp"

namespace bafrcnn::tensor {

/// Heavy-ball SGD: v <- momentum * v + grad; p <- p - lr * v; grad zeroed.
template <typename Real>
class Sgd {
 public:
  Sgd(Real learning_rate, Real momentum);

  /// Throws std::invalid_argument naming the first parameter without a
  /// populated gradient, NumericalError on a non-finite gradient.
  void step(std::span<const Parameter<Real>> params);

  void set_learning_rate(Real lr);

  /// Momentum buffers as 1-D tensors named "<prefix><parameter name>", sorted by name.
  [[nodiscard]] std::vector<Parameter<Real>> state(std::string_view prefix) const;
  /// Restores buffers written by state(); entries without the prefix are ignored.
  void load_state(std::span<const Parameter<Real>> entries, std::string_view prefix);
  [[nodiscard]] Real learning_rate() const noexcept { return lr_; }
  [[nodiscard]] Real momentum() const noexcept { return momentum_; }

 private:
  Real lr_;
  Real momentum_;
  std::map<std::string, std::vector<Real>, std::less<>> velocity_;
};

}  // namespace bafrcnn::tensor
