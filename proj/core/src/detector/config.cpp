#include "bafrcnn/detector/config.hpp"

#include <stdexcept>
#include <string>

namespace bafrcnn::detector {

void DetectorConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("DetectorConfig: " + what); };
  if (backbone_channels.empty()) fail("backbone needs at least one block");
  const std::size_t downsample = std::size_t{1} << backbone_channels.size();
  if (stride != downsample) {
    fail("stride " + std::to_string(stride) + " differs from backbone downsampling " + std::to_string(downsample));
  }
  if (image_size == 0 || image_size % stride != 0) fail("image_size must be a positive multiple of stride");
  if (anchor_scales.empty() || anchor_ratios.empty()) fail("anchor scales and ratios must be nonempty");
  for (double s : anchor_scales)
    if (!(s > 0)) fail("anchor scales must be positive");
  for (double r : anchor_ratios)
    if (!(r > 0)) fail("anchor ratios must be positive");
  if (rpn_batch == 0 || roi_batch == 0 || pre_nms_top_n == 0 || post_nms_top_n == 0 || max_detections == 0) {
    fail("sample and proposal counts must be positive");
  }
  if (roi_output_size == 0 || roi_hidden == 0 || rpn_hidden == 0) fail("head sizes must be positive");
  if (!(rpn_negative_iou <= rpn_positive_iou)) fail("rpn_negative_iou must not exceed rpn_positive_iou");
  if (!(rpn_positive_fraction > 0 && rpn_positive_fraction <= 1)) fail("rpn_positive_fraction must lie in (0, 1]");
  if (!(roi_positive_fraction > 0 && roi_positive_fraction <= 1)) fail("roi_positive_fraction must lie in (0, 1]");
}

void to_json(nlohmann::json& j, const DetectorConfig& c) {
  j = nlohmann::json{{"image_size", c.image_size},
                     {"backbone_channels", c.backbone_channels},
                     {"stride", c.stride},
                     {"anchor_scales", c.anchor_scales},
                     {"anchor_ratios", c.anchor_ratios},
                     {"rpn_hidden", c.rpn_hidden},
                     {"pre_nms_top_n", c.pre_nms_top_n},
                     {"post_nms_top_n", c.post_nms_top_n},
                     {"rpn_nms_iou", c.rpn_nms_iou},
                     {"rpn_positive_iou", c.rpn_positive_iou},
                     {"rpn_negative_iou", c.rpn_negative_iou},
                     {"rpn_batch", c.rpn_batch},
                     {"rpn_positive_fraction", c.rpn_positive_fraction},
                     {"roi_batch", c.roi_batch},
                     {"roi_positive_fraction", c.roi_positive_fraction},
                     {"roi_positive_iou", c.roi_positive_iou},
                     {"roi_output_size", c.roi_output_size},
                     {"roi_hidden", c.roi_hidden},
                     {"roi_append_gt", c.roi_append_gt},
                     {"nms_iou", c.nms_iou},
                     {"score_threshold", c.score_threshold},
                     {"max_detections", c.max_detections}};
}

void from_json(const nlohmann::json& j, DetectorConfig& c) {
  DetectorConfig d;
  c.image_size = j.value("image_size", d.image_size);
  c.backbone_channels = j.value("backbone_channels", d.backbone_channels);
  c.stride = j.value("stride", d.stride);
  c.anchor_scales = j.value("anchor_scales", d.anchor_scales);
  c.anchor_ratios = j.value("anchor_ratios", d.anchor_ratios);
  c.rpn_hidden = j.value("rpn_hidden", d.rpn_hidden);
  c.pre_nms_top_n = j.value("pre_nms_top_n", d.pre_nms_top_n);
  c.post_nms_top_n = j.value("post_nms_top_n", d.post_nms_top_n);
  c.rpn_nms_iou = j.value("rpn_nms_iou", d.rpn_nms_iou);
  c.rpn_positive_iou = j.value("rpn_positive_iou", d.rpn_positive_iou);
  c.rpn_negative_iou = j.value("rpn_negative_iou", d.rpn_negative_iou);
  c.rpn_batch = j.value("rpn_batch", d.rpn_batch);
  c.rpn_positive_fraction = j.value("rpn_positive_fraction", d.rpn_positive_fraction);
  c.roi_batch = j.value("roi_batch", d.roi_batch);
  c.roi_positive_fraction = j.value("roi_positive_fraction", d.roi_positive_fraction);
  c.roi_positive_iou = j.value("roi_positive_iou", d.roi_positive_iou);
  c.roi_output_size = j.value("roi_output_size", d.roi_output_size);
  c.roi_hidden = j.value("roi_hidden", d.roi_hidden);
  c.roi_append_gt = j.value("roi_append_gt", d.roi_append_gt);
  c.nms_iou = j.value("nms_iou", d.nms_iou);
  c.score_threshold = j.value("score_threshold", d.score_threshold);
  c.max_detections = j.value("max_detections", d.max_detections);
}

}  // namespace bafrcnn::detector
