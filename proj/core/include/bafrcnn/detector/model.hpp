#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bafrcnn/common/rng.hpp"
#include "bafrcnn/detector/anchors.hpp"
#include "bafrcnn/detector/config.hpp"
#include "bafrcnn/detector/types.hpp"
#include "bafrcnn/tensor/parameter.hpp"
#include "bafrcnn/tensor/tape.hpp"

namespace bafrcnn::detector {

using Tape = tensor::Tape<float>;
using GroundTruth = std::optional<std::span<const Annotation>>;

struct RpnOutput {
  std::vector<Proposal> proposals;
  Tensor objectness_logits;  ///< [1, A, Hf, Wf]
  Tensor box_deltas;         ///< [1, 4A, Hf, Wf]
  std::optional<Tensor> objectness_loss;
  std::optional<Tensor> box_loss;
  std::size_t sampled_positives = 0;
  std::size_t sampled_negatives = 0;
};

/// ROI-aligned, flattened and projected region features [R, roi_hidden].
struct RoiEmbedding {
  Tensor features;
  std::vector<std::size_t> kept;  ///< input boxes that survived clipping
};

struct RoiHeadOutput {
  std::vector<Box> sampled_boxes;
  std::vector<int> sampled_labels;  ///< 0 = background
  Tensor class_logits;              ///< [R, K+1]
  Tensor box_deltas;                ///< [R, 4]
  std::optional<Tensor> class_loss;
  std::optional<Tensor> box_loss;
};

/// Backbone -> RPN -> ROI head at toy scale. Parameter names are prefixed
/// "backbone.", "rpn." and "roi." so callers can select subsets.
class Detector {
 public:
  Detector(DetectorConfig config, std::uint64_t seed);

  [[nodiscard]] const DetectorConfig& config() const noexcept { return config_; }
  [[nodiscard]] tensor::ParameterSet<float>& parameters() noexcept { return params_; }
  [[nodiscard]] const tensor::ParameterSet<float>& parameters() const noexcept { return params_; }
  [[nodiscard]] const AnchorGrid& anchors() const noexcept { return anchors_; }

  /// image: [1,1,S,S] transmittance -> features [1, C, S/stride, S/stride].
  Tensor backbone(Tape& tape, const Tensor& image) const;

  /// Proposals are always produced; losses only when gt is present (an empty
  /// span means an image with no objects).
  RpnOutput rpn_forward(Tape& tape, const Tensor& features, GroundTruth gt, Rng& rng) const;

  RoiEmbedding roi_embedding(Tape& tape, const Tensor& features, std::span<const Box> boxes) const;

  /// Training mode (gt present): samples proposals and computes losses.
  /// Inference mode (gt absent): scores every proposal.
  RoiHeadOutput roi_head_forward(Tape& tape, const Tensor& features, std::span<const Proposal> proposals,
                                 GroundTruth gt, Rng& rng) const;

  /// Per-class NMS, score threshold and max_detections applied to scored proposals.
  std::vector<Detection> postprocess(const RoiHeadOutput& head) const;

  /// Full inference path without gradient recording.
  std::vector<Detection> detect(const Tensor& image) const;

  /// Backbone features without gradient recording.
  Tensor extract_features(const Tensor& image) const;

  /// Detection losses for one image; the four terms are always tape-connected.
  DetectionLossBundle detection_losses(Tape& tape, const Tensor& features, std::span<const Annotation> gt, Rng& rng,
                                       std::vector<Proposal>* proposals_out = nullptr) const;

  static constexpr DeltaWeights kRoiDeltaWeights{10.0, 10.0, 5.0, 5.0};

 private:
  Tensor zero_connected(Tape& tape, const Tensor& t) const;

  DetectorConfig config_;
  tensor::ParameterSet<float> params_;
  AnchorGrid anchors_;
};

/// Converts a transmittance image (H*W values in (0,1]) to the [1,1,H,W] input tensor.
Tensor image_tensor(std::span<const float> pixels, std::size_t height, std::size_t width);

}  // namespace bafrcnn::detector
