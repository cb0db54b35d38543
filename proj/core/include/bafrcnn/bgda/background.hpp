#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bafrcnn/detector/types.hpp"

namespace bafrcnn::bgda {

using detector::Annotation;
using detector::Proposal;

/// Per-cell usability for the image-level discriminator; 1 = background.
struct BackgroundPixelMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> cells;  ///< row-major

  [[nodiscard]] std::uint8_t at(std::size_t i, std::size_t j) const { return cells.at(i * width + j); }
  [[nodiscard]] std::size_t count() const noexcept;
  /// Flat indices of the usable cells, ascending.
  [[nodiscard]] std::vector<std::size_t> usable_indices() const;
};

inline constexpr double kDefaultBackgroundIou = 0.01;

/// Proposals whose max IoU against every gt box is <= threshold (all of them when gt is empty).
std::vector<Proposal> select_background_proposals(std::span<const Proposal> proposals, std::span<const Annotation> gt,
                                                  double iou_threshold = kDefaultBackgroundIou);

/// Cell (i, j) is 0 iff [j*s, (j+1)*s) x [i*s, (i+1)*s) meets the interior of some gt box.
BackgroundPixelMask anti_crop_mask(std::span<const Annotation> gt, std::size_t feature_h, std::size_t feature_w,
                                   std::size_t stride);

/// Largest IoU between the box and any gt box; 0 when gt is empty.
double max_iou(const detector::Box& box, std::span<const Annotation> gt);

}  // namespace bafrcnn::bgda
