#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bafrcnn/tensor/tensor.hpp"

namespace bafrcnn::tensor {

template <typename Real>
struct Parameter {
  std::string name;
  Tensor<Real> tensor;
};

enum class Init {
  kUniformFanIn,  ///< U(-1/sqrt(fan_in), 1/sqrt(fan_in)), seeded by (model seed, name)
  kZeros,
};

/// Named, uniquely keyed parameters of a model, in registration order.
template <typename Real>
class ParameterSet {
 public:
  explicit ParameterSet(std::uint64_t seed = 0) : seed_(seed) {}

  /// Registers a trainable tensor. Throws std::invalid_argument on a duplicate name.
  Tensor<Real> add(std::string name, Shape shape, std::size_t fan_in, Init init = Init::kUniformFanIn);

  [[nodiscard]] const Parameter<Real>* find(std::string_view name) const;
  [[nodiscard]] Tensor<Real> get(std::string_view name) const;

  [[nodiscard]] std::span<const Parameter<Real>> all() const noexcept { return params_; }
  [[nodiscard]] std::vector<Parameter<Real>> with_prefix(std::string_view prefix) const;
  [[nodiscard]] std::size_t size() const noexcept { return params_.size(); }
  [[nodiscard]] std::size_t element_count() const;
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  void zero_grad();

  /// Copies values by name. Every stored name must be present with an equal shape.
  void load(std::span<const Parameter<Real>> values);

 private:
  std::uint64_t seed_;
  std::vector<Parameter<Real>> params_;
};

}  // namespace bafrcnn::tensor
