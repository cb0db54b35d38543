#pragma once

#include <cstddef>
#include <cstdint>

#include "bafrcnn/detector/types.hpp"
#include "bafrcnn/tensor/parameter.hpp"
#include "bafrcnn/tensor/tape.hpp"

namespace bafrcnn::bgda {

using Tensor = tensor::Tensor<float>;
using Tape = tensor::Tape<float>;

struct DiscriminatorConfig {
  std::size_t feature_channels = 32;  ///< backbone output channels
  std::size_t roi_features = 128;     ///< ROI embedding width
  std::size_t image_hidden = 16;
  std::size_t instance_hidden = 64;
};

/// Image-level (per feature cell) and instance-level (per proposal) domain
/// classifiers. Both place a gradient reversal in front of their input and end
/// in a sigmoid giving P(SOC). Parameters are named "da.image.*" / "da.instance.*".
class DomainDiscriminators {
 public:
  DomainDiscriminators(DiscriminatorConfig config, std::uint64_t seed);

  [[nodiscard]] const DiscriminatorConfig& config() const noexcept { return config_; }
  [[nodiscard]] tensor::ParameterSet<float>& parameters() noexcept { return params_; }
  [[nodiscard]] const tensor::ParameterSet<float>& parameters() const noexcept { return params_; }

  /// features [1, C, H, W] -> P(SOC) map [1, 1, H, W]. `reversed_input`, if
  /// given, receives the GRL output so callers can inspect its gradient.
  Tensor image_probs(Tape& tape, const Tensor& features, float grl_weight, Tensor* reversed_input = nullptr) const;

  /// roi embedding [R, F] -> P(SOC) per proposal [R].
  Tensor instance_probs(Tape& tape, const Tensor& roi_features, float grl_weight) const;

 private:
  DiscriminatorConfig config_;
  tensor::ParameterSet<float> params_;
};

}  // namespace bafrcnn::bgda
