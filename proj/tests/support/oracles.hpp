#pragma once

// Brute-force references for box geometry, suppression, matching and AP.
// Each is written from the definition, not from the library code.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "bafrcnn/detector/box.hpp"
#include "bafrcnn/detector/nms.hpp"
#include "bafrcnn/eval/metrics.hpp"

namespace bafrcnn::testing {

inline double iou_by_hand(const detector::Box& a, const detector::Box& b) {
  const double iw = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double ih = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = iw * ih;
  const double uni = (a.x_max - a.x_min) * (a.y_max - a.y_min) + (b.x_max - b.x_min) * (b.y_max - b.y_min) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// Greedy NMS restated as a fixpoint: a box is kept iff no kept box of higher
// priority overlaps it. Exactly one subset satisfies that; find it by enumeration.
// `solutions` receives how many subsets qualified (1 when the oracle is sound).
inline std::vector<std::size_t> brute_force_nms(const std::vector<detector::ScoredBox>& boxes, double thr,
                                                std::size_t* solutions = nullptr) {
  const std::size_t n = boxes.size();
  std::vector<std::size_t> prio(n);
  std::iota(prio.begin(), prio.end(), std::size_t{0});
  std::sort(prio.begin(), prio.end(), [&](std::size_t a, std::size_t b) {
    return boxes[a].score != boxes[b].score ? boxes[a].score > boxes[b].score : a < b;
  });
  std::vector<std::size_t> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[prio[r]] = r;
  std::vector<std::vector<std::size_t>> found;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      bool suppressed = false;
      for (std::size_t j = 0; j < n; ++j) {
        if ((mask >> j & 1u) && rank[j] < rank[i] && iou_by_hand(boxes[i].box, boxes[j].box) >= thr) suppressed = true;
      }
      ok = ((mask >> i & 1u) != 0) == !suppressed;
    }
    if (!ok) continue;
    std::vector<std::size_t> kept;
    for (std::size_t idx : prio) {
      if (mask >> idx & 1u) kept.push_back(idx);
    }
    found.push_back(kept);
  }
  if (solutions != nullptr) *solutions = found.size();
  return found.empty() ? std::vector<std::size_t>{} : found.front();
}

// At each step, among all (gt free, same class, IoU >= thr) pairs for the
// current detection, take the lexicographic max of (IoU, -gt index).
inline eval::MatchResult reference_match(const std::vector<detector::Detection>& dets,
                                         const std::vector<detector::Annotation>& gt, double thr) {
  eval::MatchResult r{std::vector<bool>(dets.size()), std::vector<bool>(gt.size())};
  std::set<std::size_t> free_gt;
  for (std::size_t g = 0; g < gt.size(); ++g) free_gt.insert(g);
  for (std::size_t d = 0; d < dets.size(); ++d) {
    std::vector<std::pair<double, long>> candidates;
    for (std::size_t g : free_gt) {
      if (gt[g].class_id != dets[d].class_id) continue;
      const double iou = iou_by_hand(dets[d].box, gt[g].box);
      if (iou >= thr) candidates.emplace_back(iou, -static_cast<long>(g));
    }
    if (candidates.empty()) continue;
    const auto best = *std::max_element(candidates.begin(), candidates.end());
    const auto g = static_cast<std::size_t>(-best.second);
    r.true_positive[d] = true;
    r.gt_matched[g] = true;
    free_gt.erase(g);
  }
  return r;
}

// AP as the mean, over gt, of the best precision reachable at or beyond the rank of each TP.
inline double reference_ap(const std::vector<bool>& tp_ranked, std::size_t num_gt) {
  double total = 0.0;
  for (std::size_t i = 0; i < tp_ranked.size(); ++i) {
    if (!tp_ranked[i]) continue;
    double best = 0.0;
    for (std::size_t j = i; j < tp_ranked.size(); ++j) {
      const auto hits = std::count(tp_ranked.begin(), tp_ranked.begin() + static_cast<long>(j) + 1, true);
      best = std::max(best, static_cast<double>(hits) / static_cast<double>(j + 1));
    }
    total += best;
  }
  return total / static_cast<double>(num_gt);
}

}  // namespace bafrcnn::testing
