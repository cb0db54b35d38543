#include "bafrcnn/bgda/discriminator.hpp"

#include <stdexcept>

#include "bafrcnn/tensor/ops.hpp"

namespace bafrcnn::bgda {

namespace ops = bafrcnn::tensor;

DomainDiscriminators::DomainDiscriminators(DiscriminatorConfig config, std::uint64_t seed)
    : config_(config), params_(seed) {
  const std::size_t c = config_.feature_channels, h = config_.image_hidden;
  params_.add("da.image.conv1.weight", {h, c, 1, 1}, c);
  params_.add("da.image.conv1.bias", {h}, c);
  params_.add("da.image.conv2.weight", {1, h, 1, 1}, h);
  params_.add("da.image.conv2.bias", {1}, h);
  const std::size_t f = config_.roi_features, g = config_.instance_hidden;
  params_.add("da.instance.fc1.weight", {g, f}, f);
  params_.add("da.instance.fc1.bias", {g}, f);
  params_.add("da.instance.fc2.weight", {1, g}, g);
  params_.add("da.instance.fc2.bias", {1}, g);
}

Tensor DomainDiscriminators::image_probs(Tape& tape, const Tensor& features, float grl_weight,
                                         Tensor* reversed_input) const {
  if (features.rank() != 4 || features.dim(0) != 1 || features.dim(1) != config_.feature_channels) {
    throw std::invalid_argument("image_probs: expected [1x" + std::to_string(config_.feature_channels) +
                                "xHxW] features, got " + tensor::shape_string(features.shape()));
  }
  Tensor x = ops::grad_reverse(tape, features, grl_weight);
  if (reversed_input != nullptr) *reversed_input = x;
  x = ops::relu(tape, ops::conv2d(tape, x, params_.get("da.image.conv1.weight"), params_.get("da.image.conv1.bias")));
  x = ops::conv2d(tape, x, params_.get("da.image.conv2.weight"), params_.get("da.image.conv2.bias"));
  return ops::sigmoid(tape, x);
}

Tensor DomainDiscriminators::instance_probs(Tape& tape, const Tensor& roi_features, float grl_weight) const {
  if (roi_features.rank() != 2 || roi_features.dim(1) != config_.roi_features) {
    throw std::invalid_argument("instance_probs: expected [Rx" + std::to_string(config_.roi_features) +
                                "] features, got " + tensor::shape_string(roi_features.shape()));
  }
  Tensor x = ops::grad_reverse(tape, roi_features, grl_weight);
  x = ops::relu(tape, ops::linear(tape, x, params_.get("da.instance.fc1.weight"), params_.get("da.instance.fc1.bias")));
  x = ops::linear(tape, x, params_.get("da.instance.fc2.weight"), params_.get("da.instance.fc2.bias"));
  return ops::sigmoid(tape, ops::reshape(tape, x, tensor::Shape{roi_features.dim(0)}));
}

}  // namespace bafrcnn::bgda
