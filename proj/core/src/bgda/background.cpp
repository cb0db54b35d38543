#include "bafrcnn/bgda/background.hpp"

#include <algorithm>
#include <numeric>

namespace bafrcnn::bgda {

std::size_t BackgroundPixelMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

std::vector<std::size_t> BackgroundPixelMask::usable_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (cells[k] != 0) out.push_back(k);
  }
  return out;
}

double max_iou(const detector::Box& box, std::span<const Annotation> gt) {
  double best = 0.0;
  for (const auto& a : gt) best = std::max(best, detector::compute_iou(box, a.box));
  return best;
}

std::vector<Proposal> select_background_proposals(std::span<const Proposal> proposals, std::span<const Annotation> gt,
                                                  double iou_threshold) {
  std::vector<Proposal> out;
  for (const auto& p : proposals) {
    if (max_iou(p.box, gt) <= iou_threshold) out.push_back(p);
  }
  return out;
}

BackgroundPixelMask anti_crop_mask(std::span<const Annotation> gt, std::size_t feature_h, std::size_t feature_w,
                                   std::size_t stride) {
  BackgroundPixelMask m;
  m.height = feature_h;
  m.width = feature_w;
  m.cells.assign(feature_h * feature_w, 1);
  const double s = static_cast<double>(stride);
  for (std::size_t i = 0; i < feature_h; ++i) {
    const double y0 = static_cast<double>(i) * s, y1 = y0 + s;
    for (std::size_t j = 0; j < feature_w; ++j) {
      const double x0 = static_cast<double>(j) * s, x1 = x0 + s;
      for (const auto& a : gt) {
        // Half-open cell against the open box interior.
        if (x0 < a.box.x_max && x1 > a.box.x_min && y0 < a.box.y_max && y1 > a.box.y_min) {
          m.cells[i * feature_w + j] = 0;
          break;
        }
      }
    }
  }
  return m;
}

}  // namespace bafrcnn::bgda
