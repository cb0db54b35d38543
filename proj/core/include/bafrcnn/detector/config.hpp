#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

namespace bafrcnn::detector {

struct DetectorConfig {
  std::size_t image_size = 64;
  std::vector<std::size_t> backbone_channels = {8, 16, 32};
  std::size_t stride = 8;
  std::vector<double> anchor_scales = {12.0, 20.0, 32.0};
  std::vector<double> anchor_ratios = {0.5, 1.0, 2.0};
  std::size_t rpn_hidden = 32;

  std::size_t pre_nms_top_n = 200;
  std::size_t post_nms_top_n = 64;
  double rpn_nms_iou = 0.7;
  double rpn_positive_iou = 0.7;
  double rpn_negative_iou = 0.3;
  std::size_t rpn_batch = 64;
  double rpn_positive_fraction = 0.5;

  std::size_t roi_batch = 32;
  double roi_positive_fraction = 0.25;
  double roi_positive_iou = 0.5;
  std::size_t roi_output_size = 4;
  std::size_t roi_hidden = 128;
  bool roi_append_gt = true;

  double nms_iou = 0.3;
  double score_threshold = 0.01;
  std::size_t max_detections = 50;

  [[nodiscard]] std::size_t anchors_per_cell() const noexcept { return anchor_scales.size() * anchor_ratios.size(); }
  [[nodiscard]] std::size_t feature_size() const noexcept { return image_size / stride; }

  /// Throws std::invalid_argument when the configuration is inconsistent.
  void validate() const;
};

void to_json(nlohmann::json& j, const DetectorConfig& c);
void from_json(const nlohmann::json& j, DetectorConfig& c);

}  // namespace bafrcnn::detector
