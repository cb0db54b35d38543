#include "bafrcnn/bgda/losses.hpp"

#include <stdexcept>
#include <string>

#include "bafrcnn/tensor/losses.hpp"
#include "bafrcnn/tensor/ops.hpp"

namespace bafrcnn::bgda {

namespace ops = bafrcnn::tensor;

std::string_view to_string(DaMode m) noexcept {
  switch (m) {
    case DaMode::kBaseline:
      return "baseline";
    case DaMode::kInstance:
      return "instance";
    case DaMode::kFull:
      return "full";
  }
  return "unknown";
}

DaMode parse_da_mode(std::string_view s) {
  if (s == "baseline") return DaMode::kBaseline;
  if (s == "instance") return DaMode::kInstance;
  if (s == "full") return DaMode::kFull;
  throw std::invalid_argument("unknown domain-adaptation mode '" + std::string(s) +
                              "' (expected baseline, instance or full)");
}

Tensor da_image_loss(Tape& tape, const Tensor& prob_map, const BackgroundPixelMask& mask, Domain domain) {
  if (prob_map.numel() != mask.cells.size()) {
    throw std::invalid_argument("da_image_loss: probability map " + tensor::shape_string(prob_map.shape()) +
                                " does not match a " + std::to_string(mask.height) + "x" +
                                std::to_string(mask.width) + " mask");
  }
  const auto idx = mask.usable_indices();
  if (idx.empty()) return Tensor::scalar(0.0f);
  const std::vector<float> labels(idx.size(), domain_target(domain));
  return ops::binary_cross_entropy(tape, ops::gather(tape, prob_map, idx), std::span<const float>(labels));
}

Tensor da_instance_loss(Tape& tape, const Tensor& instance_probs, Domain domain) {
  if (!instance_probs.defined()) return Tensor::scalar(0.0f);
  const std::vector<float> labels(instance_probs.numel(), domain_target(domain));
  return ops::binary_cross_entropy(tape, instance_probs, std::span<const float>(labels));
}

Tensor consistency_loss(Tape& tape, const Tensor& prob_map, const BackgroundPixelMask& mask,
                        const Tensor& instance_probs) {
  const auto idx = mask.usable_indices();
  if (idx.empty() || !instance_probs.defined()) return Tensor::scalar(0.0f);
  const Tensor p_bar = ops::mean(tape, ops::gather(tape, prob_map, idx));
  const Tensor diff = ops::sub(tape, ops::broadcast(tape, p_bar, instance_probs.numel()), instance_probs);
  return ops::mean(tape, ops::mul(tape, diff, diff));
}

Tensor detection_loss_sum(Tape& tape, const detector::DetectionLossBundle& det) {
  return ops::add(tape, ops::add(tape, det.rpn_objectness, det.rpn_box), ops::add(tape, det.roi_class, det.roi_box));
}

Tensor total_loss(Tape& tape, const detector::DetectionLossBundle& det, const DaLossTerms& da, float lambda_da,
                  DaMode mode) {
  const Tensor base = detection_loss_sum(tape, det);
  switch (mode) {
    case DaMode::kBaseline:
      return base;
    case DaMode::kInstance:
      return ops::add(tape, base, ops::scale(tape, da.instance, lambda_da));
    case DaMode::kFull: {
      const Tensor da_sum = ops::add(tape, ops::add(tape, da.instance, da.image), da.consistency);
      return ops::add(tape, base, ops::scale(tape, da_sum, lambda_da));
    }
  }
  throw std::invalid_argument("total_loss: unknown mode");
}

DAOutputs adapt_image(Tape& tape, const DomainDiscriminators& discriminators, const detector::Detector& detector,
                      const Tensor& features, std::span<const Proposal> proposals, std::span<const Annotation> gt,
                      Domain domain, const AdaptationSettings& settings, DaMode mode) {
  DAOutputs out;
  if (mode == DaMode::kBaseline) return out;
  // Target-domain images carry no threat labels; nothing is masked there.
  const std::span<const Annotation> bg_gt = domain == Domain::kSOC ? std::span<const Annotation>{} : gt;

  out.selected = select_background_proposals(proposals, bg_gt, settings.iou_bg_threshold);
  if (!out.selected.empty()) {
    std::vector<detector::Box> boxes;
    boxes.reserve(out.selected.size());
    for (const auto& p : out.selected) boxes.push_back(p.box);
    const detector::RoiEmbedding emb = detector.roi_embedding(tape, features, boxes);
    if (!emb.kept.empty()) {
      out.instance_probs = discriminators.instance_probs(tape, emb.features, settings.grl_weight);
    }
  }
  out.losses.instance = da_instance_loss(tape, out.instance_probs, domain);

  out.mask = anti_crop_mask(bg_gt, features.dim(2), features.dim(3), detector.config().stride);
  if (mode == DaMode::kFull) {
    out.image_prob_map = discriminators.image_probs(tape, features, settings.grl_weight, &out.reversed_features);
    out.losses.image = da_image_loss(tape, out.image_prob_map, out.mask, domain);
    out.losses.consistency = consistency_loss(tape, out.image_prob_map, out.mask, out.instance_probs);
  }
  return out;
}

}  // namespace bafrcnn::bgda
