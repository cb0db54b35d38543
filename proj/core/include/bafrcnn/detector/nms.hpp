#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bafrcnn/detector/box.hpp"

namespace bafrcnn::detector {

struct ScoredBox {
  Box box;
  double score = 0.0;
};

/// Greedy non-maximum suppression. Boxes are visited by descending score (ties
/// by lower index); a box is kept unless it overlaps an already kept box with
/// IoU >= iou_threshold. Returns kept indices in visiting order.
std::vector<std::size_t> nms(std::span<const ScoredBox> boxes, double iou_threshold);

}  // namespace bafrcnn::detector
