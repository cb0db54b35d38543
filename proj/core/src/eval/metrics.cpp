#include "bafrcnn/eval/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace bafrcnn::eval {
namespace {

void require_sorted(std::span<const Detection> d) {
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (d[i].score > d[i - 1].score) {
      throw std::invalid_argument("match_detections: detections not sorted by score at position " + std::to_string(i));
    }
  }
}

std::vector<RankedMatch> pooled(std::span<const std::vector<Detection>> detections,
                                std::span<const std::vector<Annotation>> gt, double iou_match,
                                std::optional<int> class_filter, std::size_t* num_gt) {
  if (detections.size() != gt.size()) {
    throw std::invalid_argument("evaluation: " + std::to_string(detections.size()) + " detection lists for " +
                                std::to_string(gt.size()) + " images");
  }
  std::vector<RankedMatch> out;
  std::size_t n_gt = 0;
  for (std::size_t img = 0; img < gt.size(); ++img) {
    const MatchResult m = match_detections(detections[img], gt[img], iou_match);
    for (std::size_t k = 0; k < detections[img].size(); ++k) {
      if (class_filter && detections[img][k].class_id != *class_filter) continue;
      out.push_back({detections[img][k].score, m.true_positive[k], img, k});
    }
    for (const auto& a : gt[img]) n_gt += !class_filter || a.class_id == *class_filter;
  }
  rank_matches(out);
  if (num_gt != nullptr) *num_gt = n_gt;
  return out;
}

}  // namespace

MatchResult match_detections(std::span<const Detection> detections, std::span<const Annotation> gt, double iou_match) {
  require_sorted(detections);
  MatchResult r{std::vector<bool>(detections.size(), false), std::vector<bool>(gt.size(), false)};
  for (std::size_t d = 0; d < detections.size(); ++d) {
    double best = -1.0;
    std::size_t best_g = gt.size();
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (r.gt_matched[g] || gt[g].class_id != detections[d].class_id) continue;
      const double iou = detector::compute_iou(detections[d].box, gt[g].box);
      if (iou >= iou_match && iou > best) {
        best = iou;
        best_g = g;
      }
    }
    if (best_g < gt.size()) {
      r.true_positive[d] = true;
      r.gt_matched[best_g] = true;
    }
  }
  return r;
}

void rank_matches(std::vector<RankedMatch>& m) {
  std::sort(m.begin(), m.end(), [](const RankedMatch& a, const RankedMatch& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.image != b.image) return a.image < b.image;
    return a.index < b.index;
  });
}

PRCurve precision_recall(std::span<const RankedMatch> ranked, std::size_t num_gt) {
  PRCurve c;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    tp += ranked[k].true_positive;
    c.recall.push_back(num_gt == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(num_gt));
    c.precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
  }
  return c;
}

std::vector<double> precision_envelope(const PRCurve& curve) {
  std::vector<double> envelope = curve.precision;
  for (std::size_t k = envelope.size(); k-- > 1;) envelope[k - 1] = std::max(envelope[k - 1], envelope[k]);
  return envelope;
}

double average_precision(std::span<const RankedMatch> ranked, std::size_t num_gt) {
  if (num_gt == 0) throw std::invalid_argument("average_precision: class has no ground truth");
  const PRCurve c = precision_recall(ranked, num_gt);
  const std::vector<double> envelope = precision_envelope(c);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t k = 0; k < envelope.size(); ++k) {
    ap += (c.recall[k] - prev_recall) * envelope[k];
    prev_recall = c.recall[k];
  }
  return ap;
}

ApResult evaluate_ap(std::span<const std::vector<Detection>> detections, std::span<const std::vector<Annotation>> gt,
                     double iou_match) {
  ApResult r;
  double sum = 0.0;
  std::size_t counted = 0;
  for (int c = 1; c <= detector::kNumThreatClasses; ++c) {
    ClassAp ca;
    ca.class_id = c;
    const auto ranked = pooled(detections, gt, iou_match, c, &ca.num_gt);
    ca.curve = precision_recall(ranked, ca.num_gt);
    if (ca.num_gt == 0) {
      r.excluded.push_back(c);
    } else {
      ca.ap = average_precision(ranked, ca.num_gt);
      sum += *ca.ap;
      ++counted;
    }
    r.classes.push_back(std::move(ca));
  }
  r.map = counted == 0 ? 0.0 : sum / static_cast<double>(counted);
  return r;
}

double false_alarm_rate(std::span<const std::vector<Detection>> detections, double score_threshold) {
  if (detections.empty()) return 0.0;
  std::size_t alarms = 0;
  for (const auto& img : detections) {
    for (const auto& d : img) alarms += static_cast<double>(d.score) >= score_threshold;
  }
  return static_cast<double>(alarms) / static_cast<double>(detections.size());
}

double recall_at_threshold(std::span<const std::vector<Detection>> detections,
                           std::span<const std::vector<Annotation>> gt, double score_threshold, double iou_match) {
  std::size_t num_gt = 0;
  const auto ranked = pooled(detections, gt, iou_match, std::nullopt, &num_gt);
  if (num_gt == 0) throw std::invalid_argument("recall_at_threshold: no ground truth");
  std::size_t tp = 0;
  for (const auto& m : ranked) tp += m.true_positive && m.score >= score_threshold;
  return static_cast<double>(tp) / static_cast<double>(num_gt);
}

std::optional<double> threshold_for_recall(std::span<const std::vector<Detection>> detections,
                                           std::span<const std::vector<Annotation>> gt, double target,
                                           double iou_match) {
  std::size_t num_gt = 0;
  const auto ranked = pooled(detections, gt, iou_match, std::nullopt, &num_gt);
  if (num_gt == 0) throw std::invalid_argument("threshold_for_recall: no ground truth");
  std::size_t tp = 0;
  for (const auto& m : ranked) {
    tp += m.true_positive;
    if (static_cast<double>(tp) >= target * static_cast<double>(num_gt)) return m.score;
  }
  return std::nullopt;
}

}  // namespace bafrcnn::eval
