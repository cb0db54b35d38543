#include "bafrcnn/detector/anchors.hpp"

#include <algorithm>
#include <cmath>

namespace bafrcnn::detector {
namespace {

// Largest log-scale change a delta may request (as in common Faster R-CNN code).
const double kMaxLogScale = std::log(1000.0 / 16.0);

}  // namespace

AnchorGrid generate_anchors(const DetectorConfig& config, std::size_t feature_h, std::size_t feature_w) {
  AnchorGrid grid;
  grid.stride = config.stride;
  grid.height = feature_h;
  grid.width = feature_w;
  grid.scales = config.anchor_scales;
  grid.aspect_ratios = config.anchor_ratios;
  grid.anchors.reserve(feature_h * feature_w * grid.per_cell());
  const double s = static_cast<double>(config.stride);
  for (std::size_t i = 0; i < feature_h; ++i) {
    for (std::size_t j = 0; j < feature_w; ++j) {
      const double cx = (static_cast<double>(j) + 0.5) * s;
      const double cy = (static_cast<double>(i) + 0.5) * s;
      for (double scale : grid.scales) {
        for (double ratio : grid.aspect_ratios) {
          const double w = scale / std::sqrt(ratio);
          const double h = scale * std::sqrt(ratio);
          grid.anchors.push_back(Box{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h});
        }
      }
    }
  }
  return grid;
}

BoxDelta encode_box(const Box& reference, const Box& target, DeltaWeights weights) {
  const double rw = reference.width(), rh = reference.height();
  return BoxDelta{static_cast<float>(weights.x * (target.center_x() - reference.center_x()) / rw),
                  static_cast<float>(weights.y * (target.center_y() - reference.center_y()) / rh),
                  static_cast<float>(weights.w * std::log(target.width() / rw)),
                  static_cast<float>(weights.h * std::log(target.height() / rh))};
}

Box decode_box(const Box& reference, const BoxDelta& delta, DeltaWeights weights) {
  const double rw = reference.width(), rh = reference.height();
  const double cx = reference.center_x() + static_cast<double>(delta[0]) / weights.x * rw;
  const double cy = reference.center_y() + static_cast<double>(delta[1]) / weights.y * rh;
  const double w = rw * std::exp(std::min(static_cast<double>(delta[2]) / weights.w, kMaxLogScale));
  const double h = rh * std::exp(std::min(static_cast<double>(delta[3]) / weights.h, kMaxLogScale));
  return Box{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

AnchorTargets match_anchors_to_gt(const AnchorGrid& grid, std::span<const Annotation> gt, double positive_iou,
                                  double negative_iou) {
  const std::size_t n = grid.anchors.size();
  AnchorTargets t;
  t.labels.assign(n, AnchorLabel::kNegative);
  t.matched_gt.assign(n, -1);
  t.regression.assign(n, BoxDelta{0, 0, 0, 0});
  if (gt.empty()) return t;

  std::vector<double> best_for_gt(gt.size(), 0.0);
  std::vector<double> best_iou(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const double iou = compute_iou(grid.anchors[a], gt[g].box);
      if (iou > best_iou[a] || t.matched_gt[a] < 0) {
        best_iou[a] = iou;
        t.matched_gt[a] = static_cast<int>(g);
      }
      best_for_gt[g] = std::max(best_for_gt[g], iou);
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    if (best_iou[a] >= positive_iou) {
      t.labels[a] = AnchorLabel::kPositive;
    } else if (best_iou[a] < negative_iou) {
      t.labels[a] = AnchorLabel::kNegative;
    } else {
      t.labels[a] = AnchorLabel::kIgnore;
    }
  }
  // Every gt keeps the anchors that attain its best overlap.
  for (std::size_t g = 0; g < gt.size(); ++g) {
    if (best_for_gt[g] <= 0.0) continue;
    for (std::size_t a = 0; a < n; ++a) {
      if (compute_iou(grid.anchors[a], gt[g].box) == best_for_gt[g]) t.labels[a] = AnchorLabel::kPositive;
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    if (t.labels[a] == AnchorLabel::kPositive) {
      t.regression[a] = encode_box(grid.anchors[a], gt[static_cast<std::size_t>(t.matched_gt[a])].box);
    }
  }
  return t;
}

}  // namespace bafrcnn::detector
