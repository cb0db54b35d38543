#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "bafrcnn/detector/config.hpp"
#include "bafrcnn/detector/types.hpp"

namespace bafrcnn::detector {

/// Anchors ordered by (row, column, scale, ratio): index = ((i*W + j)*S + s)*R + r.
struct AnchorGrid {
  std::size_t stride = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> scales;
  std::vector<double> aspect_ratios;  ///< height / width
  std::vector<Box> anchors;

  [[nodiscard]] std::size_t per_cell() const noexcept { return scales.size() * aspect_ratios.size(); }
};

AnchorGrid generate_anchors(const DetectorConfig& config, std::size_t feature_h, std::size_t feature_w);

using BoxDelta = std::array<float, 4>;

/// Per-coordinate scaling applied to (dx, dy, dw, dh).
struct DeltaWeights {
  double x = 1.0, y = 1.0, w = 1.0, h = 1.0;
};

BoxDelta encode_box(const Box& reference, const Box& target, DeltaWeights weights = {});
Box decode_box(const Box& reference, const BoxDelta& delta, DeltaWeights weights = {});

enum class AnchorLabel { kNegative, kPositive, kIgnore };

struct AnchorTargets {
  std::vector<AnchorLabel> labels;
  std::vector<int> matched_gt;         ///< -1 when no gt exists
  std::vector<BoxDelta> regression;    ///< meaningful for positives only
};

/// Positive at IoU >= positive_iou or when the anchor attains a gt's best IoU;
/// negative below negative_iou; ignore otherwise. Empty gt: all negative.
AnchorTargets match_anchors_to_gt(const AnchorGrid& grid, std::span<const Annotation> gt,
                                  double positive_iou = 0.7, double negative_iou = 0.3);

}  // namespace bafrcnn::detector
