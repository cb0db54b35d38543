#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "bafrcnn/bgda/background.hpp"
#include "bafrcnn/bgda/discriminator.hpp"
#include "bafrcnn/common/domain.hpp"
#include "bafrcnn/detector/model.hpp"

namespace bafrcnn::bgda {

/// Which domain-adaptation terms enter the objective.
enum class DaMode { kBaseline, kInstance, kFull };

std::string_view to_string(DaMode m) noexcept;
/// Accepts "baseline", "instance", "full".
DaMode parse_da_mode(std::string_view s);

/// Mean BCE over mask = 1 cells against the domain label; 0 when the mask is empty.
Tensor da_image_loss(Tape& tape, const Tensor& prob_map, const BackgroundPixelMask& mask, Domain domain);

/// Mean BCE of per-proposal probabilities; 0 for an undefined (empty) input.
Tensor da_instance_loss(Tape& tape, const Tensor& instance_probs, Domain domain);

/// Mean over proposals of (masked mean of prob_map - instance prob)^2; 0 when
/// either side is empty.
Tensor consistency_loss(Tape& tape, const Tensor& prob_map, const BackgroundPixelMask& mask,
                        const Tensor& instance_probs);

struct DaLossTerms {
  Tensor instance = Tensor::scalar(0.0f);
  Tensor image = Tensor::scalar(0.0f);
  Tensor consistency = Tensor::scalar(0.0f);
};

Tensor detection_loss_sum(Tape& tape, const detector::DetectionLossBundle& det);

/// baseline: det; instance: det + lambda*instance; full: det + lambda*(instance + image + consistency).
Tensor total_loss(Tape& tape, const detector::DetectionLossBundle& det, const DaLossTerms& da, float lambda_da,
                  DaMode mode);

struct AdaptationSettings {
  float grl_weight = 0.1f;
  double iou_bg_threshold = kDefaultBackgroundIou;
};

/// Everything the discriminators saw for one image.
struct DAOutputs {
  Tensor image_prob_map;                 ///< [1,1,H,W]; undefined unless mode is full
  Tensor reversed_features;              ///< GRL output feeding the image head
  Tensor instance_probs;                 ///< [R]; undefined when nothing was selected
  BackgroundPixelMask mask;
  std::vector<Proposal> selected;        ///< proposals given to the instance head
  DaLossTerms losses;
};

/// Runs the heads required by `mode` on one image. HC images are restricted to
/// background cells and proposals; SOC images use everything.
DAOutputs adapt_image(Tape& tape, const DomainDiscriminators& discriminators, const detector::Detector& detector,
                      const Tensor& features, std::span<const Proposal> proposals, std::span<const Annotation> gt,
                      Domain domain, const AdaptationSettings& settings, DaMode mode);

}  // namespace bafrcnn::bgda
